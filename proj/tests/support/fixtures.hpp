#pragma once

// Scripted worlds shared by the unit and acceptance suites. Everything here
// is enumerable by hand: identity embedding tables, one-hot transition
// rules, and tasks whose answers are single value tokens.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cipher/analytic.hpp"
#include "cipher/debate.hpp"
#include "cipher/model.hpp"
#include "cipher/tasks.hpp"

namespace fixtures {

using cipher::EmbeddingTable;
using cipher::LogitVector;
using cipher::TokenId;
using cipher::Vocabulary;

inline LogitVector one_hot_logits(int vocab_size, TokenId target, float high = 60.0f) {
  LogitVector logits(static_cast<std::size_t>(vocab_size), 0.0f);
  logits[static_cast<std::size_t>(target)] = high;
  return logits;
}

/// A debate world over value tokens "10".."10+K-1":
///   ids: 0 "</s>", 1 "q", 2 "ans", 3 "ini", 4 "rfn", 5 "#", 6.. values.
/// Templates place an "ini" cue after the question in round 1 and an "rfn"
/// cue after the response blocks in later rounds, so suffix rules of order
/// <= 3 fully script a debater.
struct ScriptedWorld {
  static constexpr TokenId kEos = 0;
  static constexpr TokenId kQ = 1;
  static constexpr TokenId kAns = 2;
  static constexpr TokenId kIni = 3;
  static constexpr TokenId kRfn = 4;
  static constexpr TokenId kSep = 5;
  static constexpr TokenId kFirstValue = 6;

  int value_count;
  Vocabulary vocab;
  EmbeddingTable table;  // identity, d = V

  explicit ScriptedWorld(int values = 50) : value_count(values) {
    std::vector<std::string> tokens = {"</s>", "q", "ans", "ini", "rfn", "#"};
    for (int i = 0; i < values; ++i) tokens.push_back(value_string(i));
    cipher::SpecialIds special;
    special.eos = kEos;
    vocab = Vocabulary(std::move(tokens), special);
    table = EmbeddingTable::identity(vocab.size());
  }

  int vocab_size() const { return vocab.size(); }
  TokenId value_token(int i) const { return kFirstValue + i; }
  std::string value_string(int i) const { return std::to_string(10 + i); }

  /// Task i asks for value i; every ground truth is distinct.
  std::vector<cipher::eval::TaskInstance> tasks(int count) const {
    std::vector<cipher::eval::TaskInstance> out;
    for (int i = 0; i < count; ++i) {
      cipher::eval::TaskInstance task;
      task.id = "scripted-" + std::to_string(i);
      task.question = value_string(i);
      task.answer = value_string(i);
      out.push_back(std::move(task));
    }
    return out;
  }

  cipher::debate::PromptTemplate templates() const {
    cipher::debate::PromptTemplate t;
    t.initial = "q{question}ini";
    t.debate = "q{question}{responses}rfn";
    t.answer = "ans{answer}";
    return t;
  }

  /// A debater that answers "ans <v>":
  ///  - round 1 (tail "... v ini"): answers value initial_answer(i) for
  ///    question value i;
  ///  - later rounds (tail "... ans v rfn"): re-emits the value of whichever
  ///    response block came last in its context;
  ///  - stops right after its value token.
  std::shared_ptr<cipher::lm::AnalyticModel> copy_model(
      const std::function<int(int)>& initial_answer) const {
    cipher::lm::AnalyticSpec spec;
    spec.max_order = 3;
    spec.default_logits = one_hot_logits(vocab_size(), kEos);
    for (int i = 0; i < value_count; ++i) {
      const TokenId v = value_token(i);
      spec.add_rule({v, kIni}, one_hot_logits(vocab_size(), kAns));
      spec.add_rule({v, kIni, kAns}, one_hot_logits(vocab_size(), value_token(initial_answer(i))));
      spec.add_rule({v, kRfn}, one_hot_logits(vocab_size(), kAns));
      spec.add_rule({v, kRfn, kAns}, one_hot_logits(vocab_size(), v));
      spec.add_rule({kAns, v}, one_hot_logits(vocab_size(), kEos));
    }
    return std::make_shared<cipher::lm::AnalyticModel>(vocab, table, std::move(spec));
  }

  /// initial_answer(i) = i for even i, the next value otherwise: a 50% prior.
  std::shared_ptr<cipher::lm::AnalyticModel> half_right_copy_model() const {
    const int values = value_count;
    return copy_model([values](int i) { return i % 2 == 0 ? i : (i + 1) % values; });
  }

  cipher::debate::DebateConfig config(std::vector<cipher::debate::DebaterSpec> debaters,
                                      int rounds) const {
    cipher::debate::DebateConfig cfg;
    cfg.debaters = std::move(debaters);
    cfg.rounds = rounds;
    cfg.templates = templates();
    cfg.separator = "#";
    cfg.ordering = cipher::debate::Ordering::self_first;
    cfg.aggregation = cipher::debate::Aggregation::lowest_temperature;
    return cfg;
  }

  cipher::debate::DebaterSpec debater(std::shared_ptr<const cipher::LanguageModel> model,
                                      double temperature,
                                      cipher::decoding::Mode mode = cipher::decoding::Mode::cipher) const {
    cipher::debate::DebaterSpec spec;
    spec.model = std::move(model);
    spec.temperature = temperature;
    spec.mode = mode;
    spec.max_new = 8;
    return spec;
  }
};

/// Small random transformer for generation and gate tests.
inline std::shared_ptr<cipher::lm::TransformerModel> toy_transformer(int vocab_size = 32,
                                                                     int n_layers = 4,
                                                                     std::uint64_t seed = 7) {
  cipher::lm::TransformerConfig config;
  config.n_layers = n_layers;
  config.n_heads = 2;
  config.d_model = 16;
  config.d_ff = 32;
  config.max_seq_len = 96;
  std::vector<std::string> tokens = {"</s>"};
  for (int i = 1; i < vocab_size; ++i) tokens.push_back("w" + std::to_string(i));
  cipher::SpecialIds special;
  special.eos = 0;
  return std::make_shared<cipher::lm::TransformerModel>(
      config, cipher::lm::random_weights(config, vocab_size, seed),
      Vocabulary(std::move(tokens), special));
}

}  // namespace fixtures
