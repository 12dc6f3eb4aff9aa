#include "cipher/evaluation.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace cipher::eval {

namespace {

constexpr std::uint64_t kTaskStream = 0x7461736b;
constexpr std::uint64_t kVoteStream = 0x766f7465;
constexpr std::uint64_t kVoteTieStream = 0x746965;

debate::DebateConfig with_seed(debate::DebateConfig config, std::uint64_t seed) {
  config.seed = seed;
  return config;
}

}  // namespace

TaskResult score(const debate::DebateTranscript& transcript, const TaskInstance& task) {
  TaskResult result;
  result.task_id = task.id;
  result.final_answer = transcript.final_answer;
  result.extraction_failed = !transcript.final_answer.has_value();
  result.correct =
      transcript.final_answer.has_value() && answers_match(*transcript.final_answer, task.answer);
  for (const auto* rec : transcript.final_round()) {
    result.per_debater_correct.push_back(rec->extracted_answer.has_value() &&
                                         answers_match(*rec->extracted_answer, task.answer));
  }
  return result;
}

std::string debate_config_digest(const debate::DebateConfig& config) {
  std::ostringstream s;
  s << "rounds=" << config.rounds << ";ordering=" << debate::to_string(config.ordering)
    << ";aggregation=" << debate::to_string(config.aggregation) << ";separator=" << config.separator
    << ";seed=" << config.seed << ";initial=" << config.templates.initial
    << ";debate=" << config.templates.debate << ";answer=" << config.templates.answer;
  for (const auto& d : config.debaters) {
    s << ";debater{T=" << d.temperature << ",mode=" << decoding::to_string(d.mode)
      << ",role=" << debate::to_string(d.role) << ",max_new=" << d.max_new;
    if (d.gate.has_value()) {
      s << ",gate=" << decoding::to_string(d.gate->kind) << "@" << d.gate->threshold;
    }
    s << "}";
  }
  return digest_hex(fnv1a64(s.str()));
}

std::vector<debate::DebateTranscript> run_debates(const debate::DebateConfig& config,
                                                  std::span<const TaskInstance> tasks, int jobs) {
  config.validate();
  if (jobs < 1) throw ConfigError("evaluate: jobs must be >= 1");

  std::vector<debate::DebateTranscript> transcripts(tasks.size());
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));

  auto run_range = [&](int worker) {
    for (std::size_t i = static_cast<std::size_t>(worker); i < tasks.size();
         i += static_cast<std::size_t>(workers)) {
      const auto task_config =
          with_seed(config, mix_seed({config.seed, static_cast<std::uint64_t>(i), kTaskStream}));
      transcripts[i] = debate::run_debate(task_config, tasks[i], tasks);
    }
  };

  if (workers == 1) {
    run_range(0);
  } else {
    std::vector<std::thread> threads;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          run_range(w);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  return transcripts;
}

EvalReport score_all(const debate::DebateConfig& config,
                     std::span<const debate::DebateTranscript> transcripts,
                     std::span<const TaskInstance> tasks) {
  if (transcripts.size() != tasks.size()) {
    throw ConfigError("score: transcript count != task count");
  }
  EvalReport report;
  report.total = tasks.size();
  report.config_digest = debate_config_digest(config);
  report.per_debater_accuracy.assign(config.debaters.size(), 0.0);
  std::vector<std::size_t> per_debater_correct(config.debaters.size(), 0);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    TaskResult r = score(transcripts[i], tasks[i]);
    if (r.correct) ++report.correct;
    for (std::size_t d = 0; d < r.per_debater_correct.size(); ++d) {
      if (r.per_debater_correct[d]) ++per_debater_correct[d];
    }
    report.tasks.push_back(std::move(r));
  }
  report.accuracy = report.total == 0 ? 0.0
                                      : static_cast<double>(report.correct) /
                                            static_cast<double>(report.total);
  for (std::size_t d = 0; d < per_debater_correct.size(); ++d) {
    report.per_debater_accuracy[d] =
        report.total == 0 ? 0.0
                          : static_cast<double>(per_debater_correct[d]) /
                                static_cast<double>(report.total);
  }
  return report;
}

EvalReport evaluate_debate(const debate::DebateConfig& config, std::span<const TaskInstance> tasks,
                           int jobs) {
  const auto transcripts = run_debates(config, tasks, jobs);
  return score_all(config, transcripts, tasks);
}

std::optional<std::string> single_answer(const debate::DebaterSpec& debater,
                                         const debate::PromptTemplate& templates,
                                         const TaskInstance& task, std::uint64_t seed) {
  debate::DebateConfig config;
  config.debaters = {debater};
  config.rounds = 1;
  config.templates = templates;
  config.seed = seed;
  return debate::run_debate(config, task).final_answer;
}

std::optional<std::string> modal_answer(std::span<const std::optional<std::string>> answers,
                                        CountingRng& rng) {
  std::map<std::string, int> counts;
  for (const auto& a : answers) {
    if (a.has_value()) ++counts[canonical_answer(*a)];
  }
  if (counts.empty()) return std::nullopt;
  int top = 0;
  for (const auto& [answer, count] : counts) top = std::max(top, count);
  std::vector<std::string> modal;
  for (const auto& [answer, count] : counts) {
    if (count == top) modal.push_back(answer);
  }
  if (modal.size() == 1) return modal.front();
  return modal[static_cast<std::size_t>(rng.next_below(modal.size()))];
}

SelfConsistencyResult self_consistency(const debate::DebaterSpec& debater,
                                       const debate::PromptTemplate& templates,
                                       const TaskInstance& task, int k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("self_consistency: k must be >= 1");
  if (debater.mode != decoding::Mode::natural) {
    throw ConfigError("self_consistency: requires a natural-mode debater");
  }
  SelfConsistencyResult result;
  result.votes.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const std::uint64_t vote_seed =
        j == 0 ? seed : mix_seed({seed, static_cast<std::uint64_t>(j), kVoteStream});
    result.votes.push_back(single_answer(debater, templates, task, vote_seed));
  }
  CountingRng tie_rng(mix_seed({seed, kVoteTieStream}));
  result.final_answer = modal_answer(result.votes, tie_rng);
  return result;
}

BoundsReport run_bounds_suite(const debate::DebateConfig& base, std::span<const TaskInstance> tasks,
                              int jobs) {
  if (base.debaters.empty()) throw ConfigError("bounds suite: base config needs a debater");

  const debate::DebaterSpec& standard = base.debaters.front();
  auto paired = [&](debate::Role role) {
    debate::DebaterSpec special;
    special.role = role;
    special.mode = standard.mode;
    special.gate = standard.gate;
    special.max_new = standard.max_new;
    special.metric = standard.metric;
    // Hotter than the standard debater, so lowest-temperature aggregation
    // keeps reading the debater under measurement.
    special.temperature = standard.temperature + 1.0;
    if (role == debate::Role::random) special.model = standard.model;

    debate::DebateConfig config = base;
    config.debaters = {standard, special};
    return evaluate_debate(config, tasks, jobs);
  };

  BoundsReport report;
  report.expert = paired(debate::Role::expert);
  report.misaligned = paired(debate::Role::misaligned);
  report.random = paired(debate::Role::random);

  debate::DebateConfig control = base;
  control.debaters = {standard};
  control.rounds = 1;
  report.single_answer = evaluate_debate(control, tasks, jobs);
  return report;
}

PositionalBiasReport run_positional_bias(const debate::DebateConfig& base,
                                         std::span<const TaskInstance> tasks, int jobs) {
  if (base.debaters.size() != 2) {
    throw ConfigError("positional bias: exactly two debaters required");
  }
  PositionalBiasReport report;
  debate::DebateConfig config = base;
  config.ordering = debate::Ordering::others_first;
  report.others_first = evaluate_debate(config, tasks, jobs);
  config.ordering = debate::Ordering::self_first;
  report.self_first = evaluate_debate(config, tasks, jobs);
  report.accuracy_difference = report.others_first.accuracy - report.self_first.accuracy;
  return report;
}

std::vector<ScaleCell> run_scale_sweep(const debate::DebateConfig& base,
                                       std::span<const TaskInstance> tasks,
                                       std::span<const int> rounds_list,
                                       std::span<const int> debater_counts, int jobs) {
  if (rounds_list.empty() || debater_counts.empty()) {
    throw ConfigError("scale sweep: rounds and debater-count lists must be non-empty");
  }
  if (base.debaters.empty()) throw ConfigError("scale sweep: base config needs a debater");

  std::vector<ScaleCell> grid;
  grid.reserve(rounds_list.size() * debater_counts.size());
  for (int r : rounds_list) {
    for (int n : debater_counts) {
      if (r < 1 || n < 1) throw ConfigError("scale sweep: rounds and counts must be >= 1");
      debate::DebateConfig config = base;
      config.rounds = r;
      config.debaters.assign(base.debaters.begin(),
                             base.debaters.begin() +
                                 std::min<std::size_t>(base.debaters.size(),
                                                       static_cast<std::size_t>(n)));
      while (static_cast<int>(config.debaters.size()) < n) {
        config.debaters.push_back(base.debaters.back());
      }
      ScaleCell cell;
      cell.rounds = r;
      cell.debaters = n;
      cell.report = evaluate_debate(config, tasks, jobs);
      grid.push_back(std::move(cell));
    }
  }
  return grid;
}

}  // namespace cipher::eval
