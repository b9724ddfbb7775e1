#include "ssdpt/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssdpt/rng.hpp"

namespace ssdpt {

namespace {

constexpr double kLayerNormEps = 1e-5;

void check_finite(const Matrix& m, const char* where) {
  if (!all_finite(m)) {
    throw std::runtime_error(std::string(where) + ": non-finite values");
  }
}

// y = x * w + b, with b broadcast over rows.
void linear_forward(const Matrix& x, const Matrix& w, const Matrix& b,
                    Matrix& y) {
  gemm(x, w, y);
  const double* bias = b.data();
  for (int r = 0; r < y.rows(); ++r) {
    double* row = y.row(r);
    for (int c = 0; c < y.cols(); ++c) {
      row[c] += bias[c];
    }
  }
}

// Accumulates dw, db and dx for y = x * w + b.
void linear_backward(const Matrix& x, const Matrix& w, const Matrix& dy,
                     Matrix& dw, Matrix& db, Matrix* dx, bool dx_accumulate) {
  gemm_tn(x, dy, dw, /*accumulate=*/true);
  double* dbp = db.data();
  for (int r = 0; r < dy.rows(); ++r) {
    const double* row = dy.row(r);
    for (int c = 0; c < dy.cols(); ++c) {
      dbp[c] += row[c];
    }
  }
  if (dx != nullptr) {
    gemm_nt(dy, w, *dx, dx_accumulate);
  }
}

// Row-wise layer norm with population variance.
void layernorm_forward(const Matrix& x, const Matrix& gain, const Matrix& bias,
                       Matrix& norm, std::vector<double>& inv_std, Matrix& y,
                       bool identity) {
  if (identity) {
    y = x;
    return;
  }
  const int rows = x.rows(), d = x.cols();
  norm.resize(rows, d);
  inv_std.resize(rows);
  y.resize(rows, d);
  const double* g = gain.data();
  const double* b = bias.data();
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.row(r);
    double mean = 0.0;
    for (int c = 0; c < d; ++c) {
      mean += xr[c];
    }
    mean /= d;
    double var = 0.0;
    for (int c = 0; c < d; ++c) {
      const double diff = xr[c] - mean;
      var += diff * diff;
    }
    var /= d;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[r] = inv;
    double* nr = norm.row(r);
    double* yr = y.row(r);
    for (int c = 0; c < d; ++c) {
      nr[c] = (xr[c] - mean) * inv;
      yr[c] = g[c] * nr[c] + b[c];
    }
  }
}

void layernorm_backward(const Matrix& norm, const std::vector<double>& inv_std,
                        const Matrix& gain, const Matrix& dy, Matrix& dgain,
                        Matrix& dbias, Matrix& dx) {
  const int rows = dy.rows(), d = dy.cols();
  dx.resize(rows, d);
  const double* g = gain.data();
  double* dg = dgain.data();
  double* db = dbias.data();
  for (int r = 0; r < rows; ++r) {
    const double* nr = norm.row(r);
    const double* dyr = dy.row(r);
    double* dxr = dx.row(r);
    double sum_h = 0.0;
    double sum_hn = 0.0;
    for (int c = 0; c < d; ++c) {
      const double h = dyr[c] * g[c];
      sum_h += h;
      sum_hn += h * nr[c];
      dg[c] += dyr[c] * nr[c];
      db[c] += dyr[c];
    }
    const double mean_h = sum_h / d;
    const double mean_hn = sum_hn / d;
    const double inv = inv_std[r];
    for (int c = 0; c < d; ++c) {
      const double h = dyr[c] * g[c];
      dxr[c] = inv * (h - mean_h - nr[c] * mean_hn);
    }
  }
}

void softmax_rows(Matrix& m) {
  for (int r = 0; r < m.rows(); ++r) {
    double* row = m.row(r);
    double mx = row[0];
    for (int c = 1; c < m.cols(); ++c) {
      mx = std::max(mx, row[c]);
    }
    double sum = 0.0;
    for (int c = 0; c < m.cols(); ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    const double inv = 1.0 / sum;
    for (int c = 0; c < m.cols(); ++c) {
      row[c] *= inv;
    }
  }
}

void copy_head_slice(const Matrix& src, int head, int head_dim, Matrix& dst) {
  dst.resize(src.rows(), head_dim);
  const int off = head * head_dim;
  for (int r = 0; r < src.rows(); ++r) {
    const double* s = src.row(r) + off;
    std::copy(s, s + head_dim, dst.row(r));
  }
}

void add_head_slice(const Matrix& src, int head, int head_dim, Matrix& dst) {
  const int off = head * head_dim;
  for (int r = 0; r < src.rows(); ++r) {
    const double* s = src.row(r);
    double* d = dst.row(r) + off;
    for (int c = 0; c < head_dim; ++c) {
      d[c] += s[c];
    }
  }
}

void add_inplace(Matrix& dst, const Matrix& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (size_t i = 0; i < dst.size(); ++i) {
    d[i] += s[i];
  }
}

void encoder_forward(const EncoderParams& p, int heads, const Matrix& x,
                     EncoderCache& c, const ForwardHooks& hooks) {
  const int d = x.cols();
  const int head_dim = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  c.input = x;
  linear_forward(x, p.wq, p.bq, c.q);
  linear_forward(x, p.wk, p.bk, c.k);
  linear_forward(x, p.wv, p.bv, c.v);

  c.attn.resize(heads);
  c.concat.resize(x.rows(), d);
  Matrix qh, kh, vh, ctx;
  for (int h = 0; h < heads; ++h) {
    copy_head_slice(c.q, h, head_dim, qh);
    copy_head_slice(c.k, h, head_dim, kh);
    copy_head_slice(c.v, h, head_dim, vh);
    Matrix& attn = c.attn[h];
    gemm_nt(qh, kh, attn);
    double* a = attn.data();
    for (size_t i = 0; i < attn.size(); ++i) {
      a[i] *= scale;
    }
    softmax_rows(attn);
    gemm(attn, vh, ctx);
    const int off = h * head_dim;
    for (int r = 0; r < ctx.rows(); ++r) {
      std::copy(ctx.row(r), ctx.row(r) + head_dim, c.concat.row(r) + off);
    }
  }
  linear_forward(c.concat, p.wo, p.bo, c.mhsa_out);

  c.resid1 = c.mhsa_out;
  add_inplace(c.resid1, x);
  layernorm_forward(c.resid1, p.ln1_gain, p.ln1_bias, c.ln1_norm,
                    c.ln1_inv_std, c.mid, hooks.identity_layer_norm);

  linear_forward(c.mid, p.w1, p.b1, c.ffn_hidden);
  double* hidp = c.ffn_hidden.data();
  for (size_t i = 0; i < c.ffn_hidden.size(); ++i) {
    hidp[i] = std::max(0.0, hidp[i]);
  }
  linear_forward(c.ffn_hidden, p.w2, p.b2, c.ffn_out);

  c.resid2 = c.ffn_out;
  add_inplace(c.resid2, c.mid);
  layernorm_forward(c.resid2, p.ln2_gain, p.ln2_bias, c.ln2_norm,
                    c.ln2_inv_std, c.out, hooks.identity_layer_norm);
}

// dy is consumed; dx receives the gradient w.r.t. the encoder input.
void encoder_backward(const EncoderParams& p, EncoderParams& g, int heads,
                      const EncoderCache& c, const Matrix& dy, Matrix& dx) {
  const int d = c.input.cols();
  const int head_dim = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Matrix d_resid2;
  layernorm_backward(c.ln2_norm, c.ln2_inv_std, p.ln2_gain, dy, g.ln2_gain,
                     g.ln2_bias, d_resid2);

  // resid2 = ffn_out + mid
  Matrix d_hidden;
  linear_backward(c.ffn_hidden, p.w2, d_resid2, g.w2, g.b2, &d_hidden, false);
  double* dh = d_hidden.data();
  const double* hid = c.ffn_hidden.data();
  for (size_t i = 0; i < d_hidden.size(); ++i) {
    if (hid[i] <= 0.0) {
      dh[i] = 0.0;
    }
  }
  Matrix d_mid = d_resid2;
  linear_backward(c.mid, p.w1, d_hidden, g.w1, g.b1, &d_mid, true);

  Matrix d_resid1;
  layernorm_backward(c.ln1_norm, c.ln1_inv_std, p.ln1_gain, d_mid, g.ln1_gain,
                     g.ln1_bias, d_resid1);

  // resid1 = mhsa_out + input
  dx = d_resid1;
  Matrix d_concat;
  linear_backward(c.concat, p.wo, d_resid1, g.wo, g.bo, &d_concat, false);

  Matrix dq(c.q.rows(), d, 0.0), dk(c.k.rows(), d, 0.0), dv(c.v.rows(), d, 0.0);
  Matrix qh, kh, vh, d_ctx, d_attn, d_scores, dqh, dkh, dvh;
  for (int h = 0; h < heads; ++h) {
    copy_head_slice(c.q, h, head_dim, qh);
    copy_head_slice(c.k, h, head_dim, kh);
    copy_head_slice(c.v, h, head_dim, vh);
    copy_head_slice(d_concat, h, head_dim, d_ctx);
    const Matrix& attn = c.attn[h];

    gemm_nt(d_ctx, vh, d_attn);
    gemm_tn(attn, d_ctx, dvh);

    // Softmax rows: ds = p .* (da - sum(da .* p)).
    d_scores.resize(attn.rows(), attn.cols());
    for (int r = 0; r < attn.rows(); ++r) {
      const double* pr = attn.row(r);
      const double* dar = d_attn.row(r);
      double* dsr = d_scores.row(r);
      double dot = 0.0;
      for (int cidx = 0; cidx < attn.cols(); ++cidx) {
        dot += dar[cidx] * pr[cidx];
      }
      for (int cidx = 0; cidx < attn.cols(); ++cidx) {
        dsr[cidx] = pr[cidx] * (dar[cidx] - dot) * scale;
      }
    }
    gemm(d_scores, kh, dqh);
    gemm_tn(d_scores, qh, dkh);

    add_head_slice(dqh, h, head_dim, dq);
    add_head_slice(dkh, h, head_dim, dk);
    add_head_slice(dvh, h, head_dim, dv);
  }

  linear_backward(c.input, p.wq, dq, g.wq, g.bq, &dx, true);
  linear_backward(c.input, p.wk, dk, g.wk, g.bk, &dx, true);
  linear_backward(c.input, p.wv, dv, g.wv, g.bv, &dx, true);
}

EncoderParams make_encoder(int d, int ffn) {
  EncoderParams p;
  p.wq = Matrix(d, d);
  p.wk = Matrix(d, d);
  p.wv = Matrix(d, d);
  p.wo = Matrix(d, d);
  p.bq = Matrix(1, d);
  p.bk = Matrix(1, d);
  p.bv = Matrix(1, d);
  p.bo = Matrix(1, d);
  p.ln1_gain = Matrix(1, d, 1.0);
  p.ln1_bias = Matrix(1, d);
  p.ln2_gain = Matrix(1, d, 1.0);
  p.ln2_bias = Matrix(1, d);
  p.w1 = Matrix(d, ffn);
  p.b1 = Matrix(1, ffn);
  p.w2 = Matrix(ffn, d);
  p.b2 = Matrix(1, d);
  return p;
}

void append_encoder_params(std::vector<NamedParam>& out, const std::string& prefix,
                           EncoderParams& p) {
  out.push_back({prefix + ".wq", &p.wq});
  out.push_back({prefix + ".bq", &p.bq});
  out.push_back({prefix + ".wk", &p.wk});
  out.push_back({prefix + ".bk", &p.bk});
  out.push_back({prefix + ".wv", &p.wv});
  out.push_back({prefix + ".bv", &p.bv});
  out.push_back({prefix + ".wo", &p.wo});
  out.push_back({prefix + ".bo", &p.bo});
  out.push_back({prefix + ".ln1_gain", &p.ln1_gain});
  out.push_back({prefix + ".ln1_bias", &p.ln1_bias});
  out.push_back({prefix + ".ln2_gain", &p.ln2_gain});
  out.push_back({prefix + ".ln2_bias", &p.ln2_bias});
  out.push_back({prefix + ".w1", &p.w1});
  out.push_back({prefix + ".b1", &p.b1});
  out.push_back({prefix + ".w2", &p.w2});
  out.push_back({prefix + ".b2", &p.b2});
}

}  // namespace

void DptConfig::validate() const {
  if (blocks < 1) {
    throw std::invalid_argument("model config: blocks must be >= 1");
  }
  if (heads < 1 || encoder_layers < 1 || ffn_width < 1) {
    throw std::invalid_argument("model config: heads, layers and ffn width must be >= 1");
  }
  if (num_ids < 1) {
    throw std::invalid_argument("model config: num_ids must be >= 1");
  }
  if (frame_length % heads != 0 || bands % heads != 0) {
    throw std::invalid_argument(
        "model config: frame length and band count must be divisible by heads");
  }
}

DptModel DptModel::zeros(const DptConfig& cfg) {
  cfg.validate();
  DptModel m;
  m.config = cfg;
  m.blocks.resize(cfg.blocks);
  for (auto& block : m.blocks) {
    block.time_enc.assign(cfg.encoder_layers,
                          make_encoder(cfg.frame_length, cfg.ffn_width));
    block.freq_enc.assign(cfg.encoder_layers,
                          make_encoder(cfg.bands, cfg.ffn_width));
    for (auto& e : block.time_enc) {
      e.ln1_gain.fill(0.0);
      e.ln2_gain.fill(0.0);
    }
    for (auto& e : block.freq_enc) {
      e.ln1_gain.fill(0.0);
      e.ln2_gain.fill(0.0);
    }
  }
  m.head_w = Matrix(cfg.bands, cfg.num_ids);
  m.head_b = Matrix(1, cfg.num_ids);
  return m;
}

DptModel DptModel::init(const DptConfig& cfg, uint64_t seed) {
  DptModel m = zeros(cfg);
  for (auto& block : m.blocks) {
    for (auto& e : block.time_enc) {
      e.ln1_gain.fill(1.0);
      e.ln2_gain.fill(1.0);
    }
    for (auto& e : block.freq_enc) {
      e.ln1_gain.fill(1.0);
      e.ln2_gain.fill(1.0);
    }
  }
  Rng rng(seed);
  for (auto& np : m.parameters()) {
    Matrix& w = *np.value;
    // Weight matrices get Xavier-uniform; biases and norms keep their init.
    if (w.rows() <= 1) {
      continue;
    }
    const double limit = std::sqrt(6.0 / (w.rows() + w.cols()));
    double* p = w.data();
    for (size_t i = 0; i < w.size(); ++i) {
      p[i] = rng.uniform(-limit, limit);
    }
  }
  return m;
}

std::vector<NamedParam> DptModel::parameters() {
  std::vector<NamedParam> out;
  for (size_t b = 0; b < blocks.size(); ++b) {
    for (size_t l = 0; l < blocks[b].time_enc.size(); ++l) {
      append_encoder_params(out,
                            "block" + std::to_string(b) + ".time" + std::to_string(l),
                            blocks[b].time_enc[l]);
    }
    for (size_t l = 0; l < blocks[b].freq_enc.size(); ++l) {
      append_encoder_params(out,
                            "block" + std::to_string(b) + ".freq" + std::to_string(l),
                            blocks[b].freq_enc[l]);
    }
  }
  out.push_back({"head.w", &head_w});
  out.push_back({"head.b", &head_b});
  return out;
}

std::vector<NamedParamConst> DptModel::parameters() const {
  auto mutable_params = const_cast<DptModel*>(this)->parameters();
  std::vector<NamedParamConst> out;
  out.reserve(mutable_params.size());
  for (const auto& np : mutable_params) {
    out.push_back({np.name, np.value});
  }
  return out;
}

size_t DptModel::parameter_count() const {
  size_t n = 0;
  for (const auto& np : parameters()) {
    n += np.value->size();
  }
  return n;
}

Matrix mhsa(const Matrix& x, const EncoderParams& p, int heads,
            std::vector<Matrix>* attn_out) {
  if (x.cols() % heads != 0) {
    throw std::invalid_argument("mhsa: token width not divisible by heads");
  }
  check_finite(x, "mhsa input");
  const int head_dim = x.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Matrix q, k, v;
  linear_forward(x, p.wq, p.bq, q);
  linear_forward(x, p.wk, p.bk, k);
  linear_forward(x, p.wv, p.bv, v);

  Matrix concat(x.rows(), x.cols());
  Matrix qh, kh, vh, ctx;
  if (attn_out != nullptr) {
    attn_out->resize(heads);
  }
  for (int h = 0; h < heads; ++h) {
    copy_head_slice(q, h, head_dim, qh);
    copy_head_slice(k, h, head_dim, kh);
    copy_head_slice(v, h, head_dim, vh);
    Matrix attn;
    gemm_nt(qh, kh, attn);
    double* a = attn.data();
    for (size_t i = 0; i < attn.size(); ++i) {
      a[i] *= scale;
    }
    softmax_rows(attn);
    gemm(attn, vh, ctx);
    const int off = h * head_dim;
    for (int r = 0; r < ctx.rows(); ++r) {
      std::copy(ctx.row(r), ctx.row(r) + head_dim, concat.row(r) + off);
    }
    if (attn_out != nullptr) {
      (*attn_out)[h] = std::move(attn);
    }
  }
  Matrix out;
  linear_forward(concat, p.wo, p.bo, out);
  return out;
}

Matrix transformer_encoder(const Matrix& x, const EncoderParams& p, int heads,
                           const ForwardHooks& hooks) {
  if (x.cols() != p.wq.rows()) {
    throw std::invalid_argument("transformer_encoder: input width does not match parameters");
  }
  EncoderCache cache;
  encoder_forward(p, heads, x, cache, hooks);
  check_finite(cache.out, "transformer_encoder output");
  return cache.out;
}

Matrix dpt_block(const Matrix& x, const BlockParams& p, int heads,
                 const ForwardHooks& hooks) {
  Matrix cur = transpose(x);  // F tokens of width P
  for (const auto& enc : p.time_enc) {
    cur = transformer_encoder(cur, enc, heads, hooks);
  }
  cur = transpose(cur);  // P tokens of width F
  for (const auto& enc : p.freq_enc) {
    cur = transformer_encoder(cur, enc, heads, hooks);
  }
  return cur;
}

ForwardOutput DptModel::forward(const Matrix& x, ForwardCache& cache,
                                const ForwardHooks& hooks) const {
  if (x.rows() != config.frame_length || x.cols() != config.bands) {
    throw std::invalid_argument("forward: input shape does not match model config");
  }
  check_finite(x, "forward input");

  cache.blocks.resize(blocks.size());
  Matrix cur = x;
  for (size_t b = 0; b < blocks.size(); ++b) {
    BlockCache& bc = cache.blocks[b];
    bc.time_enc.resize(blocks[b].time_enc.size());
    bc.freq_enc.resize(blocks[b].freq_enc.size());

    Matrix t = transpose(cur);
    for (size_t l = 0; l < blocks[b].time_enc.size(); ++l) {
      encoder_forward(blocks[b].time_enc[l], config.heads, t, bc.time_enc[l], hooks);
      t = bc.time_enc[l].out;
      if (!all_finite(t)) {
        throw std::runtime_error("forward: non-finite output at block" +
                                 std::to_string(b) + ".time" + std::to_string(l));
      }
    }
    Matrix f = transpose(t);
    for (size_t l = 0; l < blocks[b].freq_enc.size(); ++l) {
      encoder_forward(blocks[b].freq_enc[l], config.heads, f, bc.freq_enc[l], hooks);
      f = bc.freq_enc[l].out;
      if (!all_finite(f)) {
        throw std::runtime_error("forward: non-finite output at block" +
                                 std::to_string(b) + ".freq" + std::to_string(l));
      }
    }
    cur = std::move(f);
  }
  cache.xhat = cur;

  // Column-wise max over the P axis, argmax kept for the backward pass.
  const int pdim = cache.xhat.rows();
  const int fdim = cache.xhat.cols();
  cache.pooled.assign(fdim, 0.0);
  cache.argmax_row.assign(fdim, 0);
  for (int c = 0; c < fdim; ++c) {
    double best = cache.xhat(0, c);
    int best_row = 0;
    for (int r = 1; r < pdim; ++r) {
      if (cache.xhat(r, c) > best) {
        best = cache.xhat(r, c);
        best_row = r;
      }
    }
    cache.pooled[c] = best;
    cache.argmax_row[c] = best_row;
  }

  const int ids = config.num_ids;
  cache.logits.assign(ids, 0.0);
  for (int i = 0; i < ids; ++i) {
    double acc = head_b(0, i);
    for (int c = 0; c < fdim; ++c) {
      acc += cache.pooled[c] * head_w(c, i);
    }
    cache.logits[i] = acc;
  }

  cache.probs.assign(ids, 0.0);
  double mx = cache.logits[0];
  for (int i = 1; i < ids; ++i) {
    mx = std::max(mx, cache.logits[i]);
  }
  double sum = 0.0;
  for (int i = 0; i < ids; ++i) {
    cache.probs[i] = std::exp(cache.logits[i] - mx);
    sum += cache.probs[i];
  }
  int predicted = 0;
  for (int i = 0; i < ids; ++i) {
    cache.probs[i] /= sum;
    if (cache.probs[i] > cache.probs[predicted]) {
      predicted = i;
    }
  }

  ForwardOutput out;
  out.reconstruction = cache.xhat;
  out.logits = cache.logits;
  out.probabilities = cache.probs;
  out.predicted = predicted;
  for (double v : out.logits) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("forward: non-finite logits");
    }
  }
  return out;
}

void DptModel::backward(const ForwardCache& cache,
                        const std::vector<double>& dlogits,
                        const Matrix* dxhat_extra, DptModel& grads,
                        Matrix* dx) const {
  const int fdim = config.bands;
  const int ids = config.num_ids;
  if (static_cast<int>(dlogits.size()) != ids) {
    throw std::invalid_argument("backward: dlogits length does not match num_ids");
  }

  // Head: logits = pooled . head_w + head_b.
  std::vector<double> dpooled(fdim, 0.0);
  for (int i = 0; i < ids; ++i) {
    const double dl = dlogits[i];
    grads.head_b(0, i) += dl;
    for (int c = 0; c < fdim; ++c) {
      grads.head_w(c, i) += cache.pooled[c] * dl;
      dpooled[c] += head_w(c, i) * dl;
    }
  }

  Matrix d_cur(config.frame_length, fdim, 0.0);
  for (int c = 0; c < fdim; ++c) {
    d_cur(cache.argmax_row[c], c) += dpooled[c];
  }
  if (dxhat_extra != nullptr) {
    add_inplace(d_cur, *dxhat_extra);
  }

  for (int b = static_cast<int>(blocks.size()) - 1; b >= 0; --b) {
    const BlockCache& bc = cache.blocks[b];
    for (int l = static_cast<int>(blocks[b].freq_enc.size()) - 1; l >= 0; --l) {
      Matrix d_in;
      encoder_backward(blocks[b].freq_enc[l], grads.blocks[b].freq_enc[l],
                       config.heads, bc.freq_enc[l], d_cur, d_in);
      d_cur = std::move(d_in);
    }
    d_cur = transpose(d_cur);
    for (int l = static_cast<int>(blocks[b].time_enc.size()) - 1; l >= 0; --l) {
      Matrix d_in;
      encoder_backward(blocks[b].time_enc[l], grads.blocks[b].time_enc[l],
                       config.heads, bc.time_enc[l], d_cur, d_in);
      d_cur = std::move(d_in);
    }
    d_cur = transpose(d_cur);
  }
  if (dx != nullptr) {
    *dx = std::move(d_cur);
  }
}

}  // namespace ssdpt
