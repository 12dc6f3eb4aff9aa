// Command-line front end: debates, temperature sweeps, embedding-dump
// decoding, task generation, and model inspection. All heavy lifting lives
// in cipher::runner so the same code paths are exercised by the test suite.

#include <CLI11.hpp>

#include "cipher/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Embedding-space multiagent debate engine"};
  app.require_subcommand(1);

  cipher::runner::CliOverrides overrides;
  std::string config_path;

  std::uint64_t seed = 0;
  std::string out, mode;
  int rounds = 0, debaters = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run configuration file (JSON)")->required();
    cmd->add_option("--seed", seed, "Override the config seed");
    cmd->add_option("--out", out, "Override the primary output path");
    cmd->add_option("--mode", mode, "Override every debater's mode (natural|cipher|partial)");
    cmd->add_option("--rounds", rounds, "Override the number of debate rounds");
    cmd->add_option("--debaters", debaters, "Override the debater count");
    cmd->add_option("--jobs", overrides.jobs, "Concurrent tasks or sweep cells")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* debate = app.add_subcommand("debate", "Run a debate over the configured tasks");
  add_common(debate);

  CLI::App* sweep = app.add_subcommand("sweep", "Evaluate a temperature-pair surface");
  add_common(sweep);

  std::string dump_path, table_path, vocab_path;
  int top_k = 0;
  CLI::App* decode = app.add_subcommand("decode", "Nearest-neighbor decode an embedding dump");
  decode->add_option("--dump", dump_path, "Embedding dump file")->required();
  decode->add_option("--table", table_path, "Embedding table file")->required();
  decode->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  decode->add_option("--top-k", top_k, "Also print the k nearest tokens per step");

  int count = 0;
  std::uint64_t task_seed = 0;
  std::string task_out;
  CLI::App* gen = app.add_subcommand("gen-tasks", "Generate arithmetic tasks");
  gen->add_option("--count", count, "Number of tasks")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", task_seed, "Generator seed");
  gen->add_option("--out", task_out, "Output task file (JSON-Lines)")->required();

  std::string model_path;
  CLI::App* inspect = app.add_subcommand("inspect", "Describe a model file");
  inspect->add_option("--model", model_path, "Weight file or analytic model JSON")->required();

  CLI11_PARSE(app, argc, argv);

  const auto fill_overrides = [&](const CLI::App* cmd) {
    if (cmd->count("--seed") > 0) overrides.seed = seed;
    if (cmd->count("--out") > 0) overrides.out = out;
    if (cmd->count("--mode") > 0) overrides.mode = mode;
    if (cmd->count("--rounds") > 0) overrides.rounds = rounds;
    if (cmd->count("--debaters") > 0) overrides.debaters = debaters;
  };

  if (debate->parsed()) {
    fill_overrides(debate);
    return cipher::runner::cmd_debate(config_path, overrides);
  }
  if (sweep->parsed()) {
    fill_overrides(sweep);
    return cipher::runner::cmd_sweep(config_path, overrides);
  }
  if (decode->parsed()) {
    return cipher::runner::cmd_decode(dump_path, table_path, vocab_path, top_k);
  }
  if (gen->parsed()) {
    return cipher::runner::cmd_gen_tasks(count, task_seed, task_out);
  }
  if (inspect->parsed()) {
    return cipher::runner::cmd_inspect(model_path);
  }
  return cipher::runner::kExitConfig;
}
