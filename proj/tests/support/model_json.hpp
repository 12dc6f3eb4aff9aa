#pragma once

// Serializes analytic models into the JSON format the loader understands, so
// tests can exercise the file-backed paths with scripted worlds.

#include <string>

#include <json.hpp>

#include "cipher/analytic.hpp"

namespace fixtures {

inline std::string analytic_model_json(const cipher::lm::AnalyticModel& model) {
  nlohmann::ordered_json j;
  std::vector<std::string> tokens;
  for (cipher::TokenId id = 0; id < model.vocab().size(); ++id) {
    tokens.push_back(model.vocab().token(id));
  }
  j["vocab"] = tokens;
  j["eos"] = model.vocab().eos_id();
  if (model.vocab().bos_id() >= 0) j["bos"] = model.vocab().bos_id();
  if (model.vocab().pad_id() >= 0) j["pad"] = model.vocab().pad_id();
  j["embeddings"] = "identity";
  j["max_order"] = model.spec().max_order;
  j["max_seq_len"] = model.spec().max_seq_len;
  j["default_logits"] = model.spec().default_logits;
  nlohmann::ordered_json rules = nlohmann::ordered_json::array();
  for (const auto& [suffix, logits] : model.spec().rules) {
    nlohmann::ordered_json rule;
    rule["suffix"] = suffix;
    rule["logits"] = logits;
    rules.push_back(rule);
  }
  j["rules"] = rules;
  return j.dump(2);
}

}  // namespace fixtures
