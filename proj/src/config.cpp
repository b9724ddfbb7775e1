#include "ssdpt/config.hpp"

#include <fstream>

#include <json.hpp>

namespace ssdpt {

namespace {

using nlohmann::json;

json mask_to_json(const MaskSpec& m) {
  json j = {{"kind", to_string(m.kind)}};
  if (m.kind == MaskKind::kTime || m.kind == MaskKind::kFreq ||
      m.kind == MaskKind::kSpecAugment) {
    j["k"] = m.count;
    j["width"] = m.width;
  } else if (m.kind == MaskKind::kPatch) {
    j["k"] = m.count;
    j["r"] = m.patch_size;
  }
  if (m.fill_value != 0.0) {
    j["fill"] = m.fill_value;
  }
  return j;
}

MaskSpec mask_from_json(const json& j) {
  MaskSpec m;
  m.kind = mask_kind_from_string(j.at("kind").get<std::string>());
  m.count = j.value("k", 0);
  m.width = j.value("width", 0);
  m.patch_size = j.value("r", 0);
  m.fill_value = j.value("fill", 0.0);
  if (m.kind == MaskKind::kNone) {
    m.count = 0;  // NM implies k = 0
  }
  return m;
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
  }
}

}  // namespace

void RunConfig::validate() const {
  try {
    if (features.window < 2 || (features.window & (features.window - 1)) != 0) {
      throw ConfigError("features.window must be a power of two");
    }
    if (features.hop < 1) {
      throw ConfigError("features.hop must be >= 1");
    }
    if (features.n_mels < 1) {
      throw ConfigError("features.n_mels must be >= 1");
    }
    if (!(features.f_min < features.f_max) ||
        features.f_max > features.sample_rate / 2.0) {
      throw ConfigError("features: need f_min < f_max <= sample_rate/2");
    }
    if (segmentation.frame_length < 1 || segmentation.hop_train < 1 ||
        segmentation.hop_test < 1) {
      throw ConfigError("segmentation: frame length and hops must be >= 1");
    }
    if (mixup_a <= 0.0) {
      throw ConfigError("augment.mixup_a must be positive");
    }
    switch (mask.kind) {
      case MaskKind::kNone:
        break;
      case MaskKind::kTime:
        if (mask.width < 1 || mask.width > segmentation.frame_length) {
          throw ConfigError("mask width outside [1, P] for TM");
        }
        break;
      case MaskKind::kFreq:
        if (mask.width < 1 || mask.width > features.n_mels) {
          throw ConfigError("mask width outside [1, F] for FM");
        }
        break;
      case MaskKind::kSpecAugment:
        if (mask.width < 1 ||
            mask.width > std::min(segmentation.frame_length, features.n_mels)) {
          throw ConfigError("mask width outside [1, min(P, F)] for SpecAugment");
        }
        break;
      case MaskKind::kPatch:
        if (mask.patch_size < 1 ||
            mask.patch_size > std::min(segmentation.frame_length, features.n_mels)) {
          throw ConfigError("mask size outside [1, min(P, F)] for PM");
        }
        break;
    }
    if (mask.kind != MaskKind::kNone && mask.count < 0) {
      throw ConfigError("mask count must be >= 0");
    }
    DptConfig mc = model;
    mc.frame_length = segmentation.frame_length;
    mc.bands = features.n_mels;
    if (mc.num_ids == 0) {
      mc.num_ids = 1;  // resolved from the data later
    }
    mc.validate();
    if (training.alpha < 0.0) {
      throw ConfigError("training.alpha must be >= 0");
    }
    if (training.learning_rate <= 0.0) {
      throw ConfigError("training.learning_rate must be positive");
    }
    if (training.epochs < 0 || training.batch_size < 1) {
      throw ConfigError("training: epochs must be >= 0, batch size >= 1");
    }
    if (scoring.beta < 0.0) {
      throw ConfigError("scoring.beta must be >= 0");
    }
    if (evaluation.p <= 0.0 || evaluation.p > 1.0) {
      throw ConfigError("evaluation.p must be in (0, 1]");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig default_config() {
  RunConfig cfg;
  cfg.training.mask = cfg.mask;
  cfg.training.mixup_a = cfg.mixup_a;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw ConfigError("cannot open config file " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("bad config JSON in " + path + ": " + e.what());
  }
  if (j.value("version", "") != "ssdpt-config-1") {
    throw ConfigError("config " + path + " missing version \"ssdpt-config-1\"");
  }

  RunConfig cfg = default_config();
  try {
    if (j.contains("features")) {
      const json& f = j["features"];
      get_if_present(f, "window", cfg.features.window);
      get_if_present(f, "hop", cfg.features.hop);
      get_if_present(f, "n_mels", cfg.features.n_mels);
      get_if_present(f, "f_min", cfg.features.f_min);
      get_if_present(f, "f_max", cfg.features.f_max);
      get_if_present(f, "sample_rate", cfg.features.sample_rate);
    }
    if (j.contains("segmentation")) {
      const json& s = j["segmentation"];
      get_if_present(s, "frame_length", cfg.segmentation.frame_length);
      get_if_present(s, "hop_train", cfg.segmentation.hop_train);
      get_if_present(s, "hop_test", cfg.segmentation.hop_test);
      if (s.contains("mode")) {
        cfg.segmentation.mode =
            segment_mode_from_string(s.at("mode").get<std::string>());
      }
    }
    if (j.contains("augment")) {
      const json& a = j["augment"];
      if (a.contains("mask")) {
        cfg.mask = mask_from_json(a["mask"]);
      }
      get_if_present(a, "mixup_a", cfg.mixup_a);
    }
    if (j.contains("model")) {
      const json& m = j["model"];
      get_if_present(m, "blocks", cfg.model.blocks);
      get_if_present(m, "heads", cfg.model.heads);
      get_if_present(m, "encoder_layers", cfg.model.encoder_layers);
      get_if_present(m, "ffn_width", cfg.model.ffn_width);
      get_if_present(m, "num_ids", cfg.model.num_ids);
    }
    if (j.contains("training")) {
      const json& t = j["training"];
      get_if_present(t, "alpha", cfg.training.alpha);
      get_if_present(t, "learning_rate", cfg.training.learning_rate);
      get_if_present(t, "lr_final", cfg.training.lr_final);
      if (t.contains("schedule")) {
        cfg.training.schedule =
            lr_schedule_from_string(t.at("schedule").get<std::string>());
      }
      get_if_present(t, "epochs", cfg.training.epochs);
      get_if_present(t, "batch_size", cfg.training.batch_size);
      get_if_present(t, "seed", cfg.training.seed);
      get_if_present(t, "recon_masked_only", cfg.training.recon_masked_only);
      get_if_present(t, "weight_decay", cfg.training.weight_decay);
      get_if_present(t, "checkpoint_every", cfg.checkpoint_every);
    }
    if (j.contains("scoring")) {
      get_if_present(j["scoring"], "beta", cfg.scoring.beta);
    }
    if (j.contains("evaluation")) {
      const json& e = j["evaluation"];
      get_if_present(e, "p", cfg.evaluation.p);
      if (e.contains("tie_policy")) {
        cfg.evaluation.tie_policy =
            tie_policy_from_string(e.at("tie_policy").get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad config field in " + path + ": " + e.what());
  }
  cfg.training.mask = cfg.mask;
  cfg.training.mixup_a = cfg.mixup_a;
  cfg.validate();
  return cfg;
}

void save_config(const std::string& path, const RunConfig& cfg) {
  const json j = {
      {"version", "ssdpt-config-1"},
      {"features",
       {{"window", cfg.features.window},
        {"hop", cfg.features.hop},
        {"n_mels", cfg.features.n_mels},
        {"f_min", cfg.features.f_min},
        {"f_max", cfg.features.f_max},
        {"sample_rate", cfg.features.sample_rate}}},
      {"segmentation",
       {{"frame_length", cfg.segmentation.frame_length},
        {"hop_train", cfg.segmentation.hop_train},
        {"hop_test", cfg.segmentation.hop_test},
        {"mode", to_string(cfg.segmentation.mode)}}},
      {"augment", {{"mask", mask_to_json(cfg.mask)}, {"mixup_a", cfg.mixup_a}}},
      {"model",
       {{"blocks", cfg.model.blocks},
        {"heads", cfg.model.heads},
        {"encoder_layers", cfg.model.encoder_layers},
        {"ffn_width", cfg.model.ffn_width},
        {"num_ids", cfg.model.num_ids}}},
      {"training",
       {{"alpha", cfg.training.alpha},
        {"learning_rate", cfg.training.learning_rate},
        {"lr_final", cfg.training.lr_final},
        {"schedule", to_string(cfg.training.schedule)},
        {"epochs", cfg.training.epochs},
        {"batch_size", cfg.training.batch_size},
        {"seed", cfg.training.seed},
        {"recon_masked_only", cfg.training.recon_masked_only},
        {"weight_decay", cfg.training.weight_decay},
        {"checkpoint_every", cfg.checkpoint_every}}},
      {"scoring", {{"beta", cfg.scoring.beta}}},
      {"evaluation",
       {{"p", cfg.evaluation.p},
        {"tie_policy", to_string(cfg.evaluation.tie_policy)}}}};
  std::ofstream out(path);
  if (!out.is_open()) {
    throw std::runtime_error("save_config: cannot open " + path);
  }
  out << j.dump(2) << "\n";
}

}  // namespace ssdpt
