#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "cipher/decoding.hpp"
#include "cipher/model.hpp"

namespace cipher::lm {

/// Finite transition table standing in for an LLM in tests and scripted
/// experiments: the longest matching suffix of the decoded token history
/// selects a logit row, with a default row covering every miss. Behavior is
/// fully enumerable by hand.
struct AnalyticSpec {
  int max_order = 3;
  int max_seq_len = 4096;
  LogitVector default_logits;
  std::map<std::vector<TokenId>, LogitVector> rules;

  /// Suffix length must be in [1, max_order]; logits length must match the
  /// default row.
  void add_rule(std::vector<TokenId> suffix, LogitVector logits);
  void validate(int vocab_size) const;
};

/// Logits for the longest table suffix matching the history's tail, else the
/// default row.
LogitVector analytic_logits(const AnalyticSpec& spec, std::span<const TokenId> history);

class AnalyticModel final : public LanguageModel {
public:
  AnalyticModel(Vocabulary vocab, EmbeddingTable table, AnalyticSpec spec);

  const Vocabulary& vocab() const override { return vocab_; }
  const EmbeddingTable& embeddings() const override { return table_; }
  int max_seq_len() const override { return spec_.max_seq_len; }

  /// Nearest-neighbor-decodes every context vector against the model's own
  /// table, then consults the transition table.
  LogitVector forward_logits(const EmbeddingSeq& context) const override;

  const AnalyticSpec& spec() const { return spec_; }

private:
  Vocabulary vocab_;
  EmbeddingTable table_;
  AnalyticSpec spec_;
};

/// JSON format: {"vocab": [...], "eos": id, "embeddings": "identity" |
/// {"random": {"dim": d, "seed": s}} | [[...], ...], "max_order": k,
/// "max_seq_len": n, "default_logits": [...], "rules": [{"suffix": [...],
/// "logits": [...]}]}.
std::shared_ptr<AnalyticModel> load_analytic_model(const std::filesystem::path& path);

}  // namespace cipher::lm
