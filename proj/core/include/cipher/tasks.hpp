#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cipher/common.hpp"

namespace cipher::eval {

struct TaskInstance {
  std::string id;
  std::string question;
  std::string answer;                    // canonical ground truth
  std::string pattern = "last_number";   // registered extraction pattern id

  void validate() const;
};

/// Synthetic arithmetic questions: an infix expression over exactly six
/// distinct two-digit integers with '+', '*', '-' chosen uniformly per slot,
/// evaluated with standard precedence. Ground truth is the exact integer
/// value. Deterministic in the seed.
std::vector<TaskInstance> gen_arithmetic(int count, std::uint64_t seed);

/// Exact integer evaluation of a flat infix expression over '+', '*', '-'
/// (no parentheses), multiplication binding tighter.
std::int64_t evaluate_expression(std::string_view expression);

/// Registered extraction patterns: "last_number" (last integer or decimal
/// literal) and "choice_letter" (last standalone A-D).
bool extraction_pattern_registered(const std::string& pattern_id);
std::vector<std::string> extraction_pattern_ids();

/// Applies the registered pattern to the decoded text; empty when nothing
/// matches.
std::optional<std::string> extract_answer(const std::string& text, const std::string& pattern_id);

/// Comparison form: commas and whitespace stripped, integer-valued literals
/// rendered in plain decimal (so "714.0" and " 714" both become "714").
std::string canonical_answer(const std::string& answer);

/// canonical_answer equality; "714.0" matches "714".
bool answers_match(const std::string& extracted, const std::string& truth);

/// JSON-Lines task files: {"id", "question", "answer", "pattern"} per line.
std::vector<TaskInstance> load_tasks(const std::filesystem::path& path);
void save_tasks(const std::filesystem::path& path, std::span<const TaskInstance> tasks);

}  // namespace cipher::eval
