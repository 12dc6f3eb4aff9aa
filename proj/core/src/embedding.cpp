#include "cipher/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cipher {

EmbeddingTable::EmbeddingTable(int vocab_size, int dim)
    : EmbeddingTable(vocab_size, dim,
                     std::vector<float>(static_cast<std::size_t>(vocab_size) * static_cast<std::size_t>(dim), 0.0f)) {}

EmbeddingTable::EmbeddingTable(int vocab_size, int dim, std::vector<float> data)
    : vocab_size_(vocab_size), dim_(dim), data_(std::move(data)) {
  if (vocab_size_ < 0 || dim_ < 0) throw ShapeError("embedding table: negative dimensions");
  if (data_.size() != static_cast<std::size_t>(vocab_size_) * static_cast<std::size_t>(dim_)) {
    throw ShapeError("embedding table: data size " + std::to_string(data_.size()) + " != V*d = " +
                     std::to_string(vocab_size_) + "*" + std::to_string(dim_));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw NumericError("embedding table: non-finite entry");
  }
}

EmbeddingTable EmbeddingTable::identity(int vocab_size) {
  std::vector<float> data(static_cast<std::size_t>(vocab_size) * static_cast<std::size_t>(vocab_size), 0.0f);
  for (int i = 0; i < vocab_size; ++i) {
    data[static_cast<std::size_t>(i) * vocab_size + i] = 1.0f;
  }
  return EmbeddingTable(vocab_size, vocab_size, std::move(data));
}

EmbeddingTable EmbeddingTable::random(int vocab_size, int dim, std::uint64_t seed, float scale) {
  CountingRng rng(seed);
  std::vector<float> data(static_cast<std::size_t>(vocab_size) * static_cast<std::size_t>(dim));
  for (auto& v : data) v = static_cast<float>(rng.next_gaussian()) * scale;
  return EmbeddingTable(vocab_size, dim, std::move(data));
}

std::span<const float> EmbeddingTable::row(TokenId id) const {
  if (id < 0 || id >= vocab_size_) {
    throw ConfigError("embedding table: invalid token id " + std::to_string(id) + " (V=" +
                      std::to_string(vocab_size_) + ")");
  }
  return {data_.data() + static_cast<std::size_t>(id) * dim_, static_cast<std::size_t>(dim_)};
}

void EmbeddingTable::set_row(TokenId id, std::span<const float> values) {
  if (id < 0 || id >= vocab_size_) throw ConfigError("embedding table: invalid token id");
  if (values.size() != static_cast<std::size_t>(dim_)) throw ShapeError("embedding table: row dimension mismatch");
  std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::size_t>(id) * dim_);
}

bool EmbeddingTable::same_rows(const EmbeddingTable& other) const {
  return vocab_size_ == other.vocab_size_ && dim_ == other.dim_ && data_ == other.data_;
}

std::pair<std::vector<float>, std::vector<float>> EmbeddingTable::coordinate_bounds() const {
  std::vector<float> lo(static_cast<std::size_t>(dim_), 0.0f);
  std::vector<float> hi(static_cast<std::size_t>(dim_), 0.0f);
  for (int c = 0; c < dim_; ++c) {
    float mn = data_[static_cast<std::size_t>(c)];
    float mx = mn;
    for (int i = 1; i < vocab_size_; ++i) {
      const float v = data_[static_cast<std::size_t>(i) * dim_ + c];
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    lo[static_cast<std::size_t>(c)] = mn;
    hi[static_cast<std::size_t>(c)] = mx;
  }
  return {std::move(lo), std::move(hi)};
}

std::span<const float> EmbeddingSeq::at(std::size_t index) const {
  if (index >= size()) throw ShapeError("embedding sequence: position out of range");
  return {data_.data() + index * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
}

void EmbeddingSeq::append(std::span<const float> vector) {
  if (dim_ == 0) dim_ = static_cast<int>(vector.size());
  if (vector.size() != static_cast<std::size_t>(dim_)) {
    throw ShapeError("embedding sequence: vector dimension " + std::to_string(vector.size()) +
                     " != " + std::to_string(dim_));
  }
  data_.insert(data_.end(), vector.begin(), vector.end());
}

void EmbeddingSeq::append(const EmbeddingSeq& other) {
  if (other.empty()) return;
  if (dim_ == 0) dim_ = other.dim_;
  if (other.dim_ != dim_) throw ShapeError("embedding sequence: concatenating mismatched dimensions");
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
}

EmbeddingSeq embed_tokens(std::span<const TokenId> ids, const EmbeddingTable& table) {
  EmbeddingSeq out(table.dim());
  for (TokenId id : ids) out.append(table.row(id));
  return out;
}

}  // namespace cipher
