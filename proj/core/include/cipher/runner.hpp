#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "cipher/evaluation.hpp"
#include "cipher/tuning.hpp"

namespace cipher::runner {

/// Command-line overrides; precedence is flags > config > defaults.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> mode;  // applied to every debater
  std::optional<int> rounds;
  std::optional<int> debaters;  // truncates, or clones the last spec to extend
  int jobs = 1;
};

/// A fully resolved run: models instantiated, tasks materialized, debate and
/// sweep parameters bound. Loaded from a single JSON config file.
struct RunConfig {
  std::uint64_t seed = 0;
  std::map<std::string, std::shared_ptr<const LanguageModel>> models;
  debate::DebateConfig debate;
  std::vector<eval::TaskInstance> tasks;

  std::optional<std::filesystem::path> transcript_path;
  std::optional<std::filesystem::path> report_path;
  std::optional<std::filesystem::path> embedding_dump_path;

  bool sweep_present = false;
  tuning::SweepSpec sweep;
  std::optional<std::filesystem::path> sweep_out;

  std::string config_echo_json;  // canonical dump of the parsed config file
  std::string config_digest;     // digest of the raw file bytes
};

RunConfig load_run_config(const std::filesystem::path& path, const CliOverrides& overrides);

/// JSON-Lines transcript: a config-echo record, then one response record per
/// (task, round, debater) and a final record per task.
std::string transcript_jsonl(const RunConfig& config,
                             std::span<const debate::DebateTranscript> transcripts);

/// JSON-Lines report: a config-echo record, one record per task, and a
/// summary record.
std::string report_jsonl(const RunConfig& config, const eval::EvalReport& report);

/// Fixed-width accuracy table for stdout.
std::string report_table(const eval::EvalReport& report);

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitGeneration = 3;
inline constexpr int kExitIo = 4;

int cmd_debate(const std::filesystem::path& config_path, const CliOverrides& overrides);
int cmd_sweep(const std::filesystem::path& config_path, const CliOverrides& overrides);
int cmd_decode(const std::filesystem::path& dump_path, const std::filesystem::path& table_path,
               const std::filesystem::path& vocab_path, int top_k);
int cmd_gen_tasks(int count, std::uint64_t seed, const std::filesystem::path& out_path);
int cmd_inspect(const std::filesystem::path& model_path);

}  // namespace cipher::runner
