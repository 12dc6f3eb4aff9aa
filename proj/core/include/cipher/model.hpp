#pragma once

#include <memory>
#include <vector>

#include "cipher/embedding.hpp"
#include "cipher/vocabulary.hpp"

namespace cipher {

/// Anything that maps an embedding sequence to next-position logits.
///
/// The whole engine works in embedding space: token-level generation embeds
/// its history first, and embedding-level generation feeds averaged vectors
/// straight back in. Implementations must be pure and causal (extending the
/// sequence never changes logits computed from a prefix) and immutable after
/// construction, so concurrent read-only evaluation is safe.
class LanguageModel {
public:
  virtual ~LanguageModel() = default;

  virtual const Vocabulary& vocab() const = 0;
  virtual const EmbeddingTable& embeddings() const = 0;
  virtual int max_seq_len() const = 0;

  /// Next-position logits (length V) for a non-empty context.
  virtual LogitVector forward_logits(const EmbeddingSeq& context) const = 0;

  int vocab_size() const { return embeddings().vocab_size(); }
  int dim() const { return embeddings().dim(); }
};

}  // namespace cipher

namespace cipher::lm {

struct TransformerConfig {
  int n_layers = 0;
  int n_heads = 0;
  int d_model = 0;
  int d_ff = 0;
  int max_seq_len = 0;
  float layernorm_epsilon = 1e-5f;

  int head_dim() const { return d_model / n_heads; }
  void validate() const;
  bool same_shape(const TransformerConfig& other) const;
};

struct LayerWeights {
  std::vector<float> ln1_gamma, ln1_beta;  // [d]
  std::vector<float> wq, wk, wv, wo;       // [d x d], layout [in, out]
  std::vector<float> bq, bk, bv, bo;       // [d]
  std::vector<float> ln2_gamma, ln2_beta;  // [d]
  std::vector<float> w_ff1;                // [d x d_ff]
  std::vector<float> b_ff1;                // [d_ff]
  std::vector<float> w_ff2;                // [d_ff x d]
  std::vector<float> b_ff2;                // [d]
};

struct ModelWeights {
  EmbeddingTable token_embedding;        // [V x d]; also the CIPHER averaging table
  std::vector<float> position_embedding; // [max_seq_len x d]
  std::vector<LayerWeights> layers;
  std::vector<float> final_ln_gamma, final_ln_beta;  // [d]
  std::vector<float> output_projection;              // [d x V]
  std::vector<float> output_bias;                    // [V]
};

/// Seeded random initialization (no training happens anywhere in this
/// project; random weights are enough to exercise every code path).
ModelWeights random_weights(const TransformerConfig& config, int vocab_size, std::uint64_t seed);

/// All-zero weights with identity layer norms; the base for hand-built
/// fixtures whose forward pass is checkable by hand.
ModelWeights zero_weights(const TransformerConfig& config, int vocab_size);

/// Query/key similarities of the last position against a trailing window,
/// one row per head: values[h * last_n + j].
struct AttentionHeatmap {
  int n_heads = 0;
  int last_n = 0;
  std::vector<float> values;

  float at(int head, int column) const { return values[static_cast<std::size_t>(head) * last_n + column]; }
};

/// Pre-norm decoder-only causal transformer: attention + residual, GELU
/// feed-forward + residual, learned absolute position embeddings, final
/// layer norm and linear projection to V. All math in 32-bit floats with
/// max-subtracted softmax.
class TransformerModel final : public LanguageModel {
public:
  TransformerModel(TransformerConfig config, ModelWeights weights, Vocabulary vocab);

  const Vocabulary& vocab() const override { return vocab_; }
  const EmbeddingTable& embeddings() const override { return weights_.token_embedding; }
  int max_seq_len() const override { return config_.max_seq_len; }
  LogitVector forward_logits(const EmbeddingSeq& context) const override;

  const TransformerConfig& config() const { return config_; }
  const ModelWeights& weights() const { return weights_; }

  /// Scaled dot products q_last . k_j / sqrt(head_dim) for the last_n
  /// trailing positions of one layer, before softmax. With normalize set,
  /// returns the causal attention weights (softmax over all positions)
  /// sliced to the same window.
  AttentionHeatmap attention_heatmap(const EmbeddingSeq& context, int layer, int last_n,
                                     bool normalize = false) const;

private:
  TransformerConfig config_;
  ModelWeights weights_;
  Vocabulary vocab_;
};

}  // namespace cipher::lm
