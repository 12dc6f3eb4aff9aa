#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "cipher/model.hpp"

namespace cipher::lm {

/// Transformer weight file, little-endian:
///   magic "CPHRW001"
///   u32 n_layers, n_heads, d_model, d_ff, vocab_size, max_seq_len
///   tensors, each as u32 rank, rank x u32 dims, then row-major f32 data, in
///   this order:
///     token_embedding [V, d]
///     position_embedding [max_seq_len, d]
///     per layer: ln1_gamma [d], ln1_beta [d],
///                wq [d, d], bq [d], wk [d, d], bk [d], wv [d, d], bv [d],
///                wo [d, d], bo [d],
///                ln2_gamma [d], ln2_beta [d],
///                w_ff1 [d, d_ff], b_ff1 [d_ff], w_ff2 [d_ff, d], b_ff2 [d]
///     final_ln_gamma [d], final_ln_beta [d]
///     output_projection [d, V], output_bias [V]
struct LoadedModel {
  TransformerConfig config;
  int vocab_size = 0;
  ModelWeights weights;
};

void save_model(const std::filesystem::path& path, const TransformerConfig& config,
                const ModelWeights& weights);

/// Reads the header config and every tensor, validating shapes tensor by
/// tensor and rejecting non-finite entries. When `expected` is given, the
/// header must match it and shape errors name the first offending tensor.
LoadedModel load_model(const std::filesystem::path& path,
                       const std::optional<TransformerConfig>& expected = std::nullopt);

}  // namespace cipher::lm

namespace cipher {

/// Standalone embedding table file: magic "CPHRT001", u32 V, u32 d, V*d f32.
void save_table(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable load_table(const std::filesystem::path& path);

/// One generated embedding response, addressed by where it occurred.
struct EmbeddingDumpRecord {
  std::uint32_t task_index = 0;
  std::uint32_t round = 0;    // 1-based
  std::uint32_t debater = 0;  // 1-based
  EmbeddingSeq vectors;
};

/// Sidecar dump of raw response vectors: magic "CPHRD001", u32 record count,
/// then per record u32 task_index, round, debater, steps, dim and the f32
/// payload.
void save_embedding_dump(const std::filesystem::path& path,
                         const std::vector<EmbeddingDumpRecord>& records);
std::vector<EmbeddingDumpRecord> load_embedding_dump(const std::filesystem::path& path);

}  // namespace cipher
