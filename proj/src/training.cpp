#include "ssdpt/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>
#include <ostream>
#include <set>

#include "ssdpt/checkpoint.hpp"
#include "ssdpt/threading.hpp"

namespace ssdpt {

LrSchedule lr_schedule_from_string(const std::string& s) {
  if (s == "constant") {
    return LrSchedule::kConstant;
  }
  if (s == "cosine") {
    return LrSchedule::kCosine;
  }
  throw std::invalid_argument("unknown lr schedule: " + s);
}

std::string to_string(LrSchedule s) {
  return s == LrSchedule::kConstant ? "constant" : "cosine";
}

double classification_loss(const std::vector<double>& probs,
                           const std::vector<double>& soft_label) {
  if (probs.size() != soft_label.size()) {
    throw std::invalid_argument("classification_loss: length mismatch");
  }
  double loss = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (soft_label[i] > 0.0) {
      loss -= soft_label[i] * std::log(std::max(probs[i], 1e-12));
    }
  }
  return loss;
}

double reconstruction_loss(const Matrix& target, const Matrix& output) {
  if (!target.same_shape(output)) {
    throw std::invalid_argument("reconstruction_loss: shape mismatch");
  }
  const double* t = target.data();
  const double* o = output.data();
  double acc = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    const double d = t[i] - o[i];
    acc += d * d;
  }
  return acc / static_cast<double>(target.size());
}

double total_loss(double loss_cls, double loss_rec, double alpha) {
  return loss_cls + alpha * loss_rec;
}

void optimizer_step(TrainState& state, const DptModel& grads, double lr,
                    const TrainConfig& cfg) {
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  auto params = state.model.parameters();
  auto m1 = state.moment1.parameters();
  auto m2 = state.moment2.parameters();
  auto gs = const_cast<DptModel&>(grads).parameters();
  for (size_t i = 0; i < params.size(); ++i) {
    double* w = params[i].value->data();
    double* m = m1[i].value->data();
    double* v = m2[i].value->data();
    const double* g = gs[i].value->data();
    const size_t n = params[i].value->size();
    for (size_t j = 0; j < n; ++j) {
      if (!std::isfinite(g[j])) {
        throw TrainingDiverged("optimizer_step: non-finite gradient in " +
                               params[i].name);
      }
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] *= 1.0 - lr * cfg.weight_decay;
      w[j] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

namespace {

void accumulate_scaled(DptModel& total, const DptModel& part) {
  auto dst = total.parameters();
  auto src = const_cast<DptModel&>(part).parameters();
  for (size_t i = 0; i < dst.size(); ++i) {
    double* d = dst[i].value->data();
    const double* s = src[i].value->data();
    const size_t n = dst[i].value->size();
    for (size_t j = 0; j < n; ++j) {
      d[j] += s[j];
    }
  }
}

void scale_params(DptModel& m, double s) {
  for (auto& np : m.parameters()) {
    double* p = np.value->data();
    for (size_t j = 0; j < np.value->size(); ++j) {
      p[j] *= s;
    }
  }
}

void zero_params(DptModel& m) {
  for (auto& np : m.parameters()) {
    np.value->fill(0.0);
  }
}

}  // namespace

double lr_at_step(const TrainConfig& cfg, long step, long total_steps) {
  if (cfg.schedule == LrSchedule::kConstant || total_steps <= 1) {
    return cfg.learning_rate;
  }
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps - 1);
  const double cosv = 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
  return cfg.lr_final + (cfg.learning_rate - cfg.lr_final) * cosv;
}

BatchStats train_step(TrainState& state, const std::vector<BatchSample>& batch,
                      const TrainConfig& cfg, double lr) {
  const int n = static_cast<int>(batch.size());
  const double alpha = cfg.alpha;

  struct Slot {
    DptModel grads;
    double loss_cls = 0.0;
    double loss_rec = 0.0;
  };
  std::vector<Slot> slots;
  slots.reserve(n);
  for (int i = 0; i < n; ++i) {
    slots.push_back({DptModel::zeros(state.model.config), 0.0, 0.0});
  }

  parallel_for(n, cfg.threads, [&](int i) {
    const BatchSample& s = batch[i];
    ForwardCache cache;
    ForwardOutput out = state.model.forward(s.input, cache);

    Slot& slot = slots[i];
    slot.loss_cls = classification_loss(out.probabilities, s.soft_label);

    Matrix drec;
    const Matrix* drec_ptr = nullptr;
    if (cfg.recon_masked_only) {
      const int masked = s.mask.popcount();
      if (masked > 0) {
        double acc = 0.0;
        drec = Matrix(out.reconstruction.rows(), out.reconstruction.cols());
        const double* t = s.target.data();
        const double* o = out.reconstruction.data();
        double* d = drec.data();
        for (size_t j = 0; j < s.target.size(); ++j) {
          if (s.mask.mask[j]) {
            const double diff = t[j] - o[j];
            acc += diff * diff;
            d[j] = alpha * 2.0 * (o[j] - t[j]) / masked;
          }
        }
        slot.loss_rec = acc / masked;
        drec_ptr = &drec;
      }
    } else {
      slot.loss_rec = reconstruction_loss(s.target, out.reconstruction);
      drec = Matrix(out.reconstruction.rows(), out.reconstruction.cols());
      const double* t = s.target.data();
      const double* o = out.reconstruction.data();
      double* d = drec.data();
      const double scale = alpha * 2.0 / static_cast<double>(s.target.size());
      for (size_t j = 0; j < s.target.size(); ++j) {
        d[j] = scale * (o[j] - t[j]);
      }
      drec_ptr = &drec;
    }

    // Softmax + cross-entropy gradient at the logits.
    std::vector<double> dlogits(out.probabilities.size());
    for (size_t j = 0; j < dlogits.size(); ++j) {
      dlogits[j] = out.probabilities[j] - s.soft_label[j];
    }
    // With alpha == 0 the reconstruction term must not touch the updates.
    state.model.backward(cache, dlogits, alpha == 0.0 ? nullptr : drec_ptr,
                         slot.grads);
  });

  DptModel total = DptModel::zeros(state.model.config);
  BatchStats stats;
  for (int i = 0; i < n; ++i) {
    accumulate_scaled(total, slots[i].grads);
    stats.loss_cls += slots[i].loss_cls;
    stats.loss_rec += slots[i].loss_rec;
  }
  scale_params(total, 1.0 / n);
  stats.loss_cls /= n;
  stats.loss_rec /= n;
  stats.loss = total_loss(stats.loss_cls, stats.loss_rec, alpha);

  if (!std::isfinite(stats.loss)) {
    throw TrainingDiverged("train_step: non-finite batch loss");
  }
  optimizer_step(state, total, lr, cfg);
  return stats;
}

TrainState fit(const std::vector<SegmentBatch>& data, const DptConfig& model_cfg,
               const TrainConfig& cfg, const FitSinks& sinks) {
  std::ostream& warn = sinks.warnings != nullptr ? *sinks.warnings : std::cerr;

  // Flatten clips into one segment pool.
  std::vector<const Matrix*> xs;
  std::vector<int> labels;
  std::set<int> distinct;
  for (const auto& clip : data) {
    for (const auto& seg : clip.segments) {
      if (seg.rows() != model_cfg.frame_length || seg.cols() != model_cfg.bands) {
        throw std::invalid_argument("fit: segment shape does not match model config");
      }
      xs.push_back(&seg);
      labels.push_back(clip.machine_id);
      distinct.insert(clip.machine_id);
    }
  }
  if (xs.empty()) {
    throw std::invalid_argument("fit: empty dataset");
  }
  for (int l : labels) {
    if (l < 0 || l >= model_cfg.num_ids) {
      throw std::invalid_argument("fit: machine id outside [0, num_ids)");
    }
  }
  if (distinct.size() < 2) {
    warn << "fit: single machine ID in dataset; classification is degenerate\n";
  }

  TrainState state;
  state.model = DptModel::init(model_cfg, derive_seed(cfg.seed, 0));
  state.moment1 = DptModel::zeros(model_cfg);
  state.moment2 = DptModel::zeros(model_cfg);

  const int n = static_cast<int>(xs.size());
  const int batch = std::max(1, cfg.batch_size);
  const long steps_per_epoch = (n + batch - 1) / batch;
  const long total_steps = steps_per_epoch * cfg.epochs;

  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  const int ids = model_cfg.num_ids;
  std::vector<BatchSample> samples;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(order);

    double sum_l = 0.0, sum_c = 0.0, sum_r = 0.0, last_lr = cfg.learning_rate;
    long seen = 0;
    for (int start = 0; start < n; start += batch) {
      const int count = std::min(batch, n - start);
      samples.clear();
      samples.reserve(count);

      // Mixup partners are a permutation of the batch itself.
      std::vector<int> partner(count);
      std::iota(partner.begin(), partner.end(), 0);
      rng.shuffle(partner);

      for (int i = 0; i < count; ++i) {
        const int a = order[start + i];
        const int b = order[start + partner[i]];
        const double lambda = draw_lambda(cfg.mixup_a, rng);

        std::vector<double> la(ids, 0.0), lb(ids, 0.0);
        la[labels[a]] = 1.0;
        lb[labels[b]] = 1.0;
        auto [mixed, soft] = mixup(*xs[a], *xs[b], la, lb, lambda);

        BatchSample s;
        s.mask = generate_mask(cfg.mask, mixed.rows(), mixed.cols(), rng);
        s.input = apply_mask(mixed, s.mask, cfg.mask.fill_value);
        s.target = std::move(mixed);
        s.soft_label = std::move(soft);
        samples.push_back(std::move(s));
      }

      last_lr = lr_at_step(cfg, state.step, total_steps);
      const BatchStats stats = train_step(state, samples, cfg, last_lr);
      sum_l += stats.loss * count;
      sum_c += stats.loss_cls * count;
      sum_r += stats.loss_rec * count;
      seen += count;
    }

    const auto t1 = std::chrono::steady_clock::now();
    EpochStats es;
    es.epoch = epoch + 1;
    es.loss = sum_l / seen;
    es.loss_cls = sum_c / seen;
    es.loss_rec = sum_r / seen;
    es.lr = last_lr;
    es.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (!std::isfinite(es.loss)) {
      throw TrainingDiverged("fit: non-finite epoch loss at epoch " +
                             std::to_string(es.epoch));
    }
    state.history.push_back(es);

    if (sinks.log != nullptr) {
      char line[256];
      std::snprintf(line, sizeof(line),
                    "{\"epoch\":%d,\"L\":%.12g,\"L_c\":%.12g,\"L_r\":%.12g,"
                    "\"lr\":%.12g,\"wall_ms\":%.3f}",
                    es.epoch, es.loss, es.loss_cls, es.loss_rec, es.lr, es.wall_ms);
      (*sinks.log) << line << "\n";
    }
    if (sinks.checkpoint_every > 0 && !sinks.checkpoint_prefix.empty() &&
        es.epoch % sinks.checkpoint_every == 0) {
      save_checkpoint(sinks.checkpoint_prefix + "epoch" +
                          std::to_string(es.epoch) + ".ckpt",
                      state.model);
    }
  }
  return state;
}

}  // namespace ssdpt
