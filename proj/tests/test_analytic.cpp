#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cipher/analytic.hpp"
#include "fixtures.hpp"

using cipher::EmbeddingTable;
using cipher::LogitVector;
using cipher::TokenId;
using cipher::lm::AnalyticModel;
using cipher::lm::AnalyticSpec;
using cipher::lm::analytic_logits;
using fixtures::one_hot_logits;

namespace {

AnalyticSpec chain_spec(int vocab_size) {
  AnalyticSpec spec;
  spec.default_logits = one_hot_logits(vocab_size, 7);
  spec.add_rule({7}, one_hot_logits(vocab_size, 9));
  spec.add_rule({9}, one_hot_logits(vocab_size, 0));
  spec.add_rule({1, 9}, one_hot_logits(vocab_size, 3));
  return spec;
}

}  // namespace

TEST_CASE("empty history hits the default row") {
  const auto spec = chain_spec(12);
  CHECK(analytic_logits(spec, {}) == spec.default_logits);
}

TEST_CASE("longest matching suffix wins") {
  const auto spec = chain_spec(12);
  const std::vector<TokenId> short_match = {4, 9};
  const std::vector<TokenId> long_match = {1, 9};
  CHECK(analytic_logits(spec, short_match) == one_hot_logits(12, 0));
  CHECK(analytic_logits(spec, long_match) == one_hot_logits(12, 3));
}

TEST_CASE("histories sharing a suffix share logits") {
  const auto spec = chain_spec(12);
  const std::vector<TokenId> a = {2, 3, 4, 7};
  const std::vector<TokenId> b = {11, 7};
  CHECK(analytic_logits(spec, a) == analytic_logits(spec, b));
}

TEST_CASE("rules are bounded by max_order and vocab size") {
  AnalyticSpec spec;
  spec.max_order = 2;
  spec.default_logits = one_hot_logits(4, 0);
  CHECK_THROWS_AS(spec.add_rule({1, 2, 3}, one_hot_logits(4, 0)), cipher::ConfigError);
  CHECK_THROWS_AS(spec.add_rule({}, one_hot_logits(4, 0)), cipher::ConfigError);
  CHECK_THROWS_AS(spec.add_rule({1}, one_hot_logits(5, 0)), cipher::ShapeError);
  spec.add_rule({9}, one_hot_logits(4, 0));  // id out of range, caught at validate
  CHECK_THROWS_AS(spec.validate(4), cipher::ConfigError);
}

TEST_CASE("analytic model decodes its context before matching") {
  fixtures::ScriptedWorld world(4);
  const auto model = world.copy_model([](int i) { return i; });
  // Feed exact rows for "q <v0> ini": the model should answer "ans".
  cipher::EmbeddingSeq ctx(world.vocab_size());
  ctx.append(world.table.row(fixtures::ScriptedWorld::kQ));
  ctx.append(world.table.row(world.value_token(0)));
  ctx.append(world.table.row(fixtures::ScriptedWorld::kIni));
  const LogitVector logits = model->forward_logits(ctx);
  CHECK(logits == one_hot_logits(world.vocab_size(), fixtures::ScriptedWorld::kAns));
}

TEST_CASE("analytic model JSON round trip") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "cipher_analytic_test.json";
  {
    std::ofstream out(path);
    out << R"({
      "vocab": ["</s>", "a", "b"],
      "eos": 0,
      "embeddings": "identity",
      "max_order": 2,
      "max_seq_len": 32,
      "default_logits": [0.0, 60.0, 0.0],
      "rules": [{"suffix": [1], "logits": [0.0, 0.0, 60.0]},
                {"suffix": [2], "logits": [60.0, 0.0, 0.0]}]
    })";
  }
  const auto model = cipher::lm::load_analytic_model(path);
  CHECK(model->vocab_size() == 3);
  CHECK(model->max_seq_len() == 32);
  CHECK(model->spec().rules.size() == 2);
  const std::vector<TokenId> hist = {1};
  CHECK(analytic_logits(model->spec(), hist) == one_hot_logits(3, 2));
  std::filesystem::remove(path);
}

TEST_CASE("analytic model JSON rejects malformed input") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "cipher_analytic_bad.json";
  {
    std::ofstream out(path);
    out << R"({"vocab": ["</s>"], "eos": 0})";  // missing embeddings/default_logits
  }
  CHECK_THROWS_AS(cipher::lm::load_analytic_model(path), cipher::FormatError);
  std::filesystem::remove(path);
}
