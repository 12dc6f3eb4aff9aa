#pragma once

#include <filesystem>

#include "cipher/decoding.hpp"
#include "cipher/model.hpp"

namespace cipher::xmodel {

enum class Side { a, b };

/// One shared vocabulary with two per-token embedding tables (possibly of
/// different dimension): the mapping that lets two models with distinct
/// embeddings exchange averaged vectors in the receiver's space.
struct DualEmbeddingMap {
  Vocabulary vocab;
  EmbeddingTable table_a;
  EmbeddingTable table_b;

  const EmbeddingTable& table(Side side) const { return side == Side::a ? table_a : table_b; }
  void validate() const;
};

struct DualCipherResult {
  decoding::CipherSequence self_sequence;  // sender-space vectors, fed back autoregressively
  decoding::CipherSequence message;        // receiver-space vectors, same beliefs and length
};

/// Runs embedding-space generation on the sender while emitting, from the
/// same per-step belief, a parallel average over the receiver's table. The
/// sender only ever feeds itself sender-space vectors, so its inputs stay in
/// its own embedding distribution; the message never routes through a
/// projection, only per-token parallel averaging. Both sequences stop at the
/// same step. The sender's table must equal one side of the map.
DualCipherResult generate_cipher_dual(const LanguageModel& sender, const EmbeddingSeq& prompt,
                                      const decoding::GenerationParams& params,
                                      const DualEmbeddingMap& map, Side receiver);

/// Nearest-neighbor decode of a message against the receiver's table.
std::vector<TokenId> receiver_decode(const decoding::CipherSequence& message,
                                     const DualEmbeddingMap& map, Side receiver,
                                     decoding::Metric metric = decoding::Metric::squared_euclidean);

/// Two vocabulary-aligned table files plus the shared vocabulary file; row
/// counts must match the vocabulary.
DualEmbeddingMap load_dual_map(const std::filesystem::path& vocab_path,
                               const std::filesystem::path& table_a_path,
                               const std::filesystem::path& table_b_path);

}  // namespace cipher::xmodel
