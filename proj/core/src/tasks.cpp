#include "cipher/tasks.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "cipher/io_util.hpp"

namespace cipher::eval {

namespace {

const std::regex& last_number_regex() {
  static const std::regex re(R"([-+]?\d+(?:\.\d+)?)");
  return re;
}

const std::regex& choice_letter_regex() {
  // A standalone capital A-D, optionally wrapped in parentheses.
  static const std::regex re(R"((?:^|[^A-Za-z])\(?([A-D])\)?(?:[^A-Za-z]|$))");
  return re;
}

std::optional<std::string> last_match(const std::string& text, const std::regex& re, int group) {
  std::optional<std::string> found;
  auto begin = std::sregex_iterator(text.begin(), text.end(), re);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    found = (*it)[static_cast<std::size_t>(group)].str();
  }
  return found;
}

std::string strip_answer(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) continue;
    out.push_back(c);
  }
  return out;
}

// Parses an optionally signed integer with an optional all-zero fraction
// ("714", "714.0", "-3.000"). Returns nothing for anything else.
std::optional<std::int64_t> parse_integer(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  if (s[pos] == '+' || s[pos] == '-') ++pos;
  const std::size_t digits_start = pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos == digits_start) return std::nullopt;
  const std::size_t digits_end = pos;
  if (pos < s.size()) {
    if (s[pos] != '.') return std::nullopt;
    ++pos;
    if (pos == s.size()) return std::nullopt;
    while (pos < s.size()) {
      if (s[pos] != '0') return std::nullopt;
      ++pos;
    }
  }
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data() + (s[0] == '+' ? 1 : 0), s.data() + digits_end, value);
  if (ec != std::errc() || ptr != s.data() + digits_end) return std::nullopt;
  return value;
}

}  // namespace

void TaskInstance::validate() const {
  if (answer.empty()) throw ConfigError("task '" + id + "': empty ground-truth answer");
  if (!extraction_pattern_registered(pattern)) {
    throw ConfigError("task '" + id + "': unregistered extraction pattern '" + pattern + "'");
  }
}

std::vector<TaskInstance> gen_arithmetic(int count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("gen_arithmetic: count must be >= 1");
  CountingRng rng(seed);
  constexpr char kOps[3] = {'+', '*', '-'};

  std::vector<TaskInstance> tasks;
  tasks.reserve(static_cast<std::size_t>(count));
  for (int n = 0; n < count; ++n) {
    int operands[6];
    for (int i = 0; i < 6; ++i) {
      // Rejection keeps all six operands distinct.
      int candidate = static_cast<int>(rng.next_int(10, 99));
      bool duplicate = true;
      while (duplicate) {
        duplicate = false;
        for (int j = 0; j < i; ++j) {
          if (operands[j] == candidate) {
            duplicate = true;
            candidate = static_cast<int>(rng.next_int(10, 99));
            break;
          }
        }
      }
      operands[i] = candidate;
    }
    std::string expr = std::to_string(operands[0]);
    for (int i = 1; i < 6; ++i) {
      expr.push_back(kOps[rng.next_below(3)]);
      expr += std::to_string(operands[i]);
    }
    TaskInstance task;
    task.id = "arith-" + std::to_string(seed) + "-" + std::to_string(n);
    task.question = expr;
    task.answer = std::to_string(evaluate_expression(expr));
    task.pattern = "last_number";
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::int64_t evaluate_expression(std::string_view expression) {
  // Fold products as they close, then sum the terms.
  std::vector<std::int64_t> terms;
  std::vector<char> pending;  // '+' or '-' applied to the following term
  std::size_t pos = 0;
  auto read_int = [&]() -> std::int64_t {
    std::size_t start = pos;
    while (pos < expression.size() && std::isdigit(static_cast<unsigned char>(expression[pos]))) ++pos;
    if (pos == start) throw FormatError("expression: expected integer at byte " + std::to_string(start));
    std::int64_t v = 0;
    std::from_chars(expression.data() + start, expression.data() + pos, v);
    return v;
  };

  std::int64_t current = read_int();
  pending.push_back('+');
  while (pos < expression.size()) {
    const char op = expression[pos++];
    const std::int64_t rhs = read_int();
    if (op == '*') {
      current *= rhs;
    } else if (op == '+' || op == '-') {
      terms.push_back(current);
      pending.push_back(op);
      current = rhs;
    } else {
      throw FormatError(std::string("expression: unknown operator '") + op + "'");
    }
  }
  terms.push_back(current);

  std::int64_t total = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    total += pending[i] == '-' ? -terms[i] : terms[i];
  }
  return total;
}

bool extraction_pattern_registered(const std::string& pattern_id) {
  return pattern_id == "last_number" || pattern_id == "choice_letter";
}

std::vector<std::string> extraction_pattern_ids() { return {"last_number", "choice_letter"}; }

std::optional<std::string> extract_answer(const std::string& text, const std::string& pattern_id) {
  if (pattern_id == "last_number") return last_match(text, last_number_regex(), 0);
  if (pattern_id == "choice_letter") return last_match(text, choice_letter_regex(), 1);
  throw ConfigError("extract_answer: unregistered pattern '" + pattern_id + "'");
}

std::string canonical_answer(const std::string& answer) {
  const std::string stripped = strip_answer(answer);
  const auto as_int = parse_integer(stripped);
  if (as_int.has_value()) return std::to_string(*as_int);
  return stripped;
}

bool answers_match(const std::string& extracted, const std::string& truth) {
  return canonical_answer(extracted) == canonical_answer(truth);
}

std::vector<TaskInstance> load_tasks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_tasks: cannot open " + path.string());
  std::vector<TaskInstance> tasks;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      TaskInstance task;
      task.id = j.at("id").get<std::string>();
      task.question = j.at("question").get<std::string>();
      task.answer = j.at("answer").get<std::string>();
      if (j.contains("pattern")) task.pattern = j["pattern"].get<std::string>();
      task.validate();
      tasks.push_back(std::move(task));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("load_tasks: " + path.string() + " line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return tasks;
}

void save_tasks(const std::filesystem::path& path, std::span<const TaskInstance> tasks) {
  std::ostringstream out;
  for (const auto& task : tasks) {
    nlohmann::ordered_json j;
    j["id"] = task.id;
    j["question"] = task.question;
    j["answer"] = task.answer;
    j["pattern"] = task.pattern;
    out << j.dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

}  // namespace cipher::eval
