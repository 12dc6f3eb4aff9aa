#include "cipher/analytic.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace cipher::lm {

void AnalyticSpec::add_rule(std::vector<TokenId> suffix, LogitVector logits) {
  if (suffix.empty() || static_cast<int>(suffix.size()) > max_order) {
    throw ConfigError("analytic spec: rule suffix length " + std::to_string(suffix.size()) +
                      " out of [1, " + std::to_string(max_order) + "]");
  }
  if (logits.size() != default_logits.size()) {
    throw ShapeError("analytic spec: rule logits length " + std::to_string(logits.size()) +
                     " != vocabulary size " + std::to_string(default_logits.size()));
  }
  rules[std::move(suffix)] = std::move(logits);
}

void AnalyticSpec::validate(int vocab_size) const {
  if (max_order < 1) throw ConfigError("analytic spec: max_order must be >= 1");
  if (max_seq_len < 1) throw ConfigError("analytic spec: max_seq_len must be >= 1");
  if (default_logits.size() != static_cast<std::size_t>(vocab_size)) {
    throw ShapeError("analytic spec: default row length " + std::to_string(default_logits.size()) +
                     " != vocabulary size " + std::to_string(vocab_size));
  }
  for (const auto& [suffix, logits] : rules) {
    if (suffix.empty() || static_cast<int>(suffix.size()) > max_order) {
      throw ConfigError("analytic spec: rule suffix length out of range");
    }
    if (logits.size() != static_cast<std::size_t>(vocab_size)) {
      throw ShapeError("analytic spec: rule logits length mismatch");
    }
    for (TokenId id : suffix) {
      if (id < 0 || id >= vocab_size) throw ConfigError("analytic spec: rule suffix id out of range");
    }
    for (float l : logits) {
      if (!std::isfinite(l)) throw NumericError("analytic spec: non-finite rule logit");
    }
  }
  for (float l : default_logits) {
    if (!std::isfinite(l)) throw NumericError("analytic spec: non-finite default logit");
  }
}

LogitVector analytic_logits(const AnalyticSpec& spec, std::span<const TokenId> history) {
  const int longest = std::min<int>(spec.max_order, static_cast<int>(history.size()));
  std::vector<TokenId> key;
  for (int len = longest; len >= 1; --len) {
    key.assign(history.end() - len, history.end());
    auto it = spec.rules.find(key);
    if (it != spec.rules.end()) return it->second;
  }
  return spec.default_logits;
}

AnalyticModel::AnalyticModel(Vocabulary vocab, EmbeddingTable table, AnalyticSpec spec)
    : vocab_(std::move(vocab)), table_(std::move(table)), spec_(std::move(spec)) {
  if (table_.vocab_size() != vocab_.size()) {
    throw ShapeError("analytic model: table rows " + std::to_string(table_.vocab_size()) +
                     " != vocabulary size " + std::to_string(vocab_.size()));
  }
  spec_.validate(vocab_.size());
}

LogitVector AnalyticModel::forward_logits(const EmbeddingSeq& context) const {
  if (context.empty()) throw ShapeError("analytic forward: empty context");
  if (context.size() > static_cast<std::size_t>(spec_.max_seq_len)) {
    throw ContextOverflowError("analytic forward: context length " + std::to_string(context.size()) +
                                   " exceeds max_seq_len " + std::to_string(spec_.max_seq_len),
                               0);
  }
  const std::vector<TokenId> ids = decoding::nn_decode_seq(context, table_);
  return analytic_logits(spec_, ids);
}

std::shared_ptr<AnalyticModel> load_analytic_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("analytic model: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("analytic model: " + path.string() + ": " + e.what());
  }

  try {
    std::vector<std::string> tokens = j.at("vocab").get<std::vector<std::string>>();
    SpecialIds special;
    special.eos = j.at("eos").get<TokenId>();
    if (j.contains("bos")) special.bos = j["bos"].get<TokenId>();
    if (j.contains("pad")) special.pad = j["pad"].get<TokenId>();
    Vocabulary vocab(std::move(tokens), special);

    EmbeddingTable table;
    const auto& emb = j.at("embeddings");
    if (emb.is_string() && emb.get<std::string>() == "identity") {
      table = EmbeddingTable::identity(vocab.size());
    } else if (emb.is_object()) {
      const auto& r = emb.at("random");
      table = EmbeddingTable::random(vocab.size(), r.at("dim").get<int>(),
                                     r.at("seed").get<std::uint64_t>());
    } else {
      std::vector<float> flat;
      for (const auto& row : emb) {
        for (const auto& x : row) flat.push_back(x.get<float>());
      }
      if (vocab.size() == 0 || flat.size() % vocab.size() != 0) {
        throw ShapeError("analytic model: ragged embedding rows");
      }
      table = EmbeddingTable(vocab.size(), static_cast<int>(flat.size()) / vocab.size(), std::move(flat));
    }

    AnalyticSpec spec;
    spec.default_logits = j.at("default_logits").get<LogitVector>();
    if (j.contains("max_order")) spec.max_order = j["max_order"].get<int>();
    if (j.contains("max_seq_len")) spec.max_seq_len = j["max_seq_len"].get<int>();
    if (j.contains("rules")) {
      for (const auto& rule : j["rules"]) {
        spec.add_rule(rule.at("suffix").get<std::vector<TokenId>>(),
                      rule.at("logits").get<LogitVector>());
      }
    }
    return std::make_shared<AnalyticModel>(std::move(vocab), std::move(table), std::move(spec));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("analytic model: " + path.string() + ": " + e.what());
  }
}

}  // namespace cipher::lm
