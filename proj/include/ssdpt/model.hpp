#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssdpt/matrix.hpp"

namespace ssdpt {

struct DptConfig {
  int blocks = 1;          // M stacked blocks
  int frame_length = 64;   // P
  int bands = 128;         // F
  int heads = 8;
  int encoder_layers = 1;  // layers per path in each block
  int ffn_width = 32;
  int num_ids = 3;         // I classification targets

  void validate() const;
};

// Parameters for one transformer encoder layer of token width d:
// attention projections, position-wise FFN, and two layer norms.
// Vectors are stored as 1 x n matrices so all parameters traverse uniformly.
struct EncoderParams {
  Matrix wq, wk, wv, wo;  // d x d
  Matrix bq, bk, bv, bo;  // 1 x d
  Matrix ln1_gain, ln1_bias, ln2_gain, ln2_bias;  // 1 x d
  Matrix w1;              // d x ffn
  Matrix b1;              // 1 x ffn
  Matrix w2;              // ffn x d
  Matrix b2;              // 1 x d
};

// One dual-path block: encoders over time profiles (token width P), then
// encoders over spectra (token width F), with a transpose between the paths.
struct BlockParams {
  std::vector<EncoderParams> time_enc;  // width P, sequence F
  std::vector<EncoderParams> freq_enc;  // width F, sequence P
};

struct NamedParam {
  std::string name;
  Matrix* value = nullptr;
};

struct NamedParamConst {
  std::string name;
  const Matrix* value = nullptr;
};

struct ForwardOutput {
  Matrix reconstruction;             // P x F
  std::vector<double> logits;        // I
  std::vector<double> probabilities; // I, softmax of logits
  int predicted = 0;                 // argmax of probabilities
};

// Per-layer intermediates kept for the backward pass.
struct EncoderCache {
  Matrix input;              // S x d
  Matrix q, k, v;            // S x d
  std::vector<Matrix> attn;  // per head, S x S softmax rows
  Matrix concat;             // S x d, heads concatenated before wo
  Matrix mhsa_out;           // S x d
  Matrix resid1;             // mhsa_out + input
  Matrix ln1_norm;           // normalized resid1 (pre gain/bias)
  std::vector<double> ln1_inv_std;
  Matrix mid;                // LN1 output
  Matrix ffn_hidden;         // S x ffn, post-ReLU
  Matrix ffn_out;            // S x d
  Matrix resid2;             // ffn_out + mid
  Matrix ln2_norm;
  std::vector<double> ln2_inv_std;
  Matrix out;                // S x d
};

struct BlockCache {
  std::vector<EncoderCache> time_enc;
  std::vector<EncoderCache> freq_enc;
};

struct ForwardCache {
  std::vector<BlockCache> blocks;
  Matrix xhat;                  // P x F, final block output
  std::vector<double> pooled;   // F, column max of xhat over P
  std::vector<int> argmax_row;  // F, row index of each column max
  std::vector<double> logits;
  std::vector<double> probs;
};

// Test hooks threaded through the forward pass.
struct ForwardHooks {
  bool identity_layer_norm = false;  // bypass LN entirely (forward only)
};

struct DptModel {
  DptConfig config;
  std::vector<BlockParams> blocks;
  Matrix head_w;  // F x I
  Matrix head_b;  // 1 x I

  // Xavier-uniform weights, zero biases, unit layer-norm gains.
  static DptModel init(const DptConfig& cfg, uint64_t seed);

  // Same structure with every parameter zero; doubles as a gradient or
  // optimizer-moment container.
  static DptModel zeros(const DptConfig& cfg);

  // Stable traversal order; defines checkpoint layout and init order.
  std::vector<NamedParam> parameters();
  std::vector<NamedParamConst> parameters() const;
  size_t parameter_count() const;

  ForwardOutput forward(const Matrix& x, ForwardCache& cache,
                        const ForwardHooks& hooks = {}) const;

  // Accumulates parameter gradients for a scalar loss with the given
  // gradient at the logits, plus an optional direct gradient on the
  // reconstruction output (used for the reconstruction loss term).
  // Also returns the gradient w.r.t. the input if dx is non-null.
  void backward(const ForwardCache& cache, const std::vector<double>& dlogits,
                const Matrix* dxhat_extra, DptModel& grads,
                Matrix* dx = nullptr) const;
};

// Exposed for unit tests of the attention primitive.
// y = multi-head scaled dot-product self-attention of x (S x d) using the
// layer's q/k/v/o projections; attn_out, when non-null, receives the
// per-head softmax matrices.
Matrix mhsa(const Matrix& x, const EncoderParams& p, int heads,
            std::vector<Matrix>* attn_out = nullptr);

// Exposed for unit tests: one encoder layer forward.
Matrix transformer_encoder(const Matrix& x, const EncoderParams& p, int heads,
                           const ForwardHooks& hooks = {});

// Exposed for unit tests: one dual-path block forward (P x F in and out).
Matrix dpt_block(const Matrix& x, const BlockParams& p, int heads,
                 const ForwardHooks& hooks = {});

}  // namespace ssdpt
