#include <doctest.h>

#include <cmath>

#include "cipher/embedding.hpp"

using cipher::EmbeddingSeq;
using cipher::EmbeddingTable;
using cipher::TokenId;
using cipher::embed_tokens;

TEST_CASE("embed_tokens: empty input gives an empty sequence") {
  const auto table = EmbeddingTable::random(5, 3, 1);
  CHECK(embed_tokens({}, table).empty());
}

TEST_CASE("embed_tokens looks rows up verbatim") {
  const auto table = EmbeddingTable::random(5, 3, 2);
  const std::vector<TokenId> ids = {3};
  const auto seq = embed_tokens(ids, table);
  REQUIRE(seq.size() == 1);
  const auto row = table.row(3);
  const auto got = seq.at(0);
  for (std::size_t c = 0; c < got.size(); ++c) CHECK(got[c] == row[c]);
}

TEST_CASE("embed_tokens: repeated ids are bit-identical") {
  const auto table = EmbeddingTable::random(5, 3, 3);
  const std::vector<TokenId> ids = {1, 1};
  const auto seq = embed_tokens(ids, table);
  REQUIRE(seq.size() == 2);
  const auto a = seq.at(0);
  const auto b = seq.at(1);
  for (std::size_t c = 0; c < a.size(); ++c) CHECK(a[c] == b[c]);
}

TEST_CASE("embed_tokens rejects out-of-range ids") {
  const auto table = EmbeddingTable::random(5, 3, 4);
  const std::vector<TokenId> bad = {5};
  const std::vector<TokenId> negative = {-1};
  CHECK_THROWS_AS(embed_tokens(bad, table), cipher::ConfigError);
  CHECK_THROWS_AS(embed_tokens(negative, table), cipher::ConfigError);
}

TEST_CASE("embedding table validates shape and finiteness") {
  CHECK_THROWS_AS(EmbeddingTable(2, 2, {1.0f, 2.0f, 3.0f}), cipher::ShapeError);
  CHECK_THROWS_AS(EmbeddingTable(1, 2, {1.0f, NAN}), cipher::NumericError);
}

TEST_CASE("identity table rows are basis vectors") {
  const auto table = EmbeddingTable::identity(4);
  CHECK(table.dim() == 4);
  for (TokenId id = 0; id < 4; ++id) {
    const auto row = table.row(id);
    for (int c = 0; c < 4; ++c) CHECK(row[static_cast<std::size_t>(c)] == (c == id ? 1.0f : 0.0f));
  }
}

TEST_CASE("coordinate bounds cover every row") {
  const auto table = EmbeddingTable::random(16, 4, 9);
  const auto [lo, hi] = table.coordinate_bounds();
  for (TokenId id = 0; id < table.vocab_size(); ++id) {
    const auto row = table.row(id);
    for (int c = 0; c < table.dim(); ++c) {
      CHECK(row[static_cast<std::size_t>(c)] >= lo[static_cast<std::size_t>(c)]);
      CHECK(row[static_cast<std::size_t>(c)] <= hi[static_cast<std::size_t>(c)]);
    }
  }
}

TEST_CASE("embedding sequence enforces a consistent dimension") {
  EmbeddingSeq seq(3);
  const std::vector<float> ok = {1.0f, 2.0f, 3.0f};
  const std::vector<float> bad = {1.0f};
  seq.append(ok);
  CHECK(seq.size() == 1);
  CHECK_THROWS_AS(seq.append(bad), cipher::ShapeError);
  CHECK_THROWS_AS(seq.at(1), cipher::ShapeError);
}
