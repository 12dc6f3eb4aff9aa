#pragma once

#include <span>
#include <string>
#include <vector>

#include "cipher/debate.hpp"
#include "cipher/tasks.hpp"

namespace cipher::eval {

struct TaskResult {
  std::string task_id;
  std::optional<std::string> final_answer;
  bool correct = false;
  bool extraction_failed = false;           // the aggregate produced no answer
  std::vector<bool> per_debater_correct;    // final-round answers, by position
};

/// Compares the aggregate answer and every final-round answer against the
/// task's ground truth, after numeric normalization. Unextractable answers
/// count as incorrect and are flagged, never thrown.
TaskResult score(const debate::DebateTranscript& transcript, const TaskInstance& task);

struct EvalReport {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;                     // exactly correct / total
  std::vector<double> per_debater_accuracy;  // final-round accuracy per position
  std::vector<TaskResult> tasks;             // in input order
  std::string config_digest;
};

/// Digest over the debate parameters (not the model weights); the CLI
/// substitutes the run-config file digest in persisted artifacts.
std::string debate_config_digest(const debate::DebateConfig& config);

/// One debate per task, task i seeded from (config.seed, i). With jobs > 1
/// tasks run on that many threads; transcripts come back in input order, so
/// the result does not depend on the thread count.
std::vector<debate::DebateTranscript> run_debates(const debate::DebateConfig& config,
                                                  std::span<const TaskInstance> tasks, int jobs = 1);

/// run_debates plus scoring.
EvalReport evaluate_debate(const debate::DebateConfig& config, std::span<const TaskInstance> tasks,
                           int jobs = 1);

/// Scoring over already-run transcripts (transcripts[i] belongs to tasks[i]).
EvalReport score_all(const debate::DebateConfig& config,
                     std::span<const debate::DebateTranscript> transcripts,
                     std::span<const TaskInstance> tasks);

/// Degenerate one-debater one-round debate: the Single Answer baseline.
std::optional<std::string> single_answer(const debate::DebaterSpec& debater,
                                         const debate::PromptTemplate& templates,
                                         const TaskInstance& task, std::uint64_t seed);

/// Modal answer over canonical forms; ties break uniformly (one rng draw over
/// the lexicographically sorted modal set); absent when nothing extractable.
std::optional<std::string> modal_answer(std::span<const std::optional<std::string>> answers,
                                        CountingRng& rng);

struct SelfConsistencyResult {
  std::optional<std::string> final_answer;
  std::vector<std::optional<std::string>> votes;  // one per sample, in draw order
};

/// Major@k: k independent samples from one model (vote 0 reuses `seed`, so
/// k = 1 is exactly the Single Answer baseline; later votes get derived
/// streams), then a majority vote with a seeded tie-break.
SelfConsistencyResult self_consistency(const debate::DebaterSpec& debater,
                                       const debate::PromptTemplate& templates,
                                       const TaskInstance& task, int k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiment harnesses
// ---------------------------------------------------------------------------

/// Upper/lower bound probes: debater 0 of `base` paired against an expert
/// (always the ground truth), a misaligned debater (foreign ground truths),
/// and a high-temperature random debater, plus the no-debate Single Answer
/// control row.
struct BoundsReport {
  EvalReport expert;
  EvalReport misaligned;
  EvalReport random;
  EvalReport single_answer;
};
BoundsReport run_bounds_suite(const debate::DebateConfig& base, std::span<const TaskInstance> tasks,
                              int jobs = 1);

/// Both response orderings under identical seeds; difference is
/// others_first minus self_first aggregate accuracy.
struct PositionalBiasReport {
  EvalReport others_first;
  EvalReport self_first;
  double accuracy_difference = 0.0;
};
PositionalBiasReport run_positional_bias(const debate::DebateConfig& base,
                                         std::span<const TaskInstance> tasks, int jobs = 1);

/// One report per (rounds, debater count) cell, all cells sharing the base
/// seed. Counts beyond the configured debaters clone the last spec.
struct ScaleCell {
  int rounds = 0;
  int debaters = 0;
  EvalReport report;
};
std::vector<ScaleCell> run_scale_sweep(const debate::DebateConfig& base,
                                       std::span<const TaskInstance> tasks,
                                       std::span<const int> rounds_list,
                                       std::span<const int> debater_counts, int jobs = 1);

}  // namespace cipher::eval
