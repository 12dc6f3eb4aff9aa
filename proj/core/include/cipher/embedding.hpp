#pragma once

#include <span>
#include <utility>
#include <vector>

#include "cipher/common.hpp"

namespace cipher {

/// V rows of dimension d, row i being the embedding of token id i.
class EmbeddingTable {
public:
  EmbeddingTable() = default;
  EmbeddingTable(int vocab_size, int dim);
  EmbeddingTable(int vocab_size, int dim, std::vector<float> data);

  /// d = V table whose row i is the i-th standard basis vector. Scripted
  /// fixtures use this so nearest-neighbor decoding is hand-checkable.
  static EmbeddingTable identity(int vocab_size);

  /// Seeded normal(0, scale) entries.
  static EmbeddingTable random(int vocab_size, int dim, std::uint64_t seed, float scale = 1.0f);

  int vocab_size() const { return vocab_size_; }
  int dim() const { return dim_; }
  bool empty() const { return vocab_size_ == 0; }

  std::span<const float> row(TokenId id) const;
  void set_row(TokenId id, std::span<const float> values);

  const std::vector<float>& data() const { return data_; }

  /// Exact content equality (same V, d, and bits).
  bool same_rows(const EmbeddingTable& other) const;

  /// Per-coordinate (min, max) over all rows; the convex-combination
  /// invariant of generated vectors is checked against these.
  std::pair<std::vector<float>, std::vector<float>> coordinate_bounds() const;

private:
  int vocab_size_ = 0;
  int dim_ = 0;
  std::vector<float> data_;  // row-major V x d
};

/// A contiguous sequence of d-dimensional vectors: model contexts, generated
/// responses, prompt embeddings. Positions are appended, never edited.
class EmbeddingSeq {
public:
  EmbeddingSeq() = default;
  explicit EmbeddingSeq(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return data_.empty(); }

  std::span<const float> at(std::size_t index) const;
  std::span<const float> back() const { return at(size() - 1); }

  void append(std::span<const float> vector);
  void append(const EmbeddingSeq& other);

  const std::vector<float>& flat() const { return data_; }

private:
  int dim_ = 0;
  std::vector<float> data_;
};

/// Exact row lookup for each id; never interpolates.
EmbeddingSeq embed_tokens(std::span<const TokenId> ids, const EmbeddingTable& table);

}  // namespace cipher
