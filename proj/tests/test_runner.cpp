#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cipher/io_util.hpp"
#include "cipher/model_io.hpp"
#include "cipher/runner.hpp"
#include "temp_world.hpp"

using namespace cipher;
using namespace cipher::runner;
using fixtures::TempRun;
namespace fs = std::filesystem;

namespace {

constexpr const char* kSmallSweepBlock = R"({
    "grid1": [0.5, 1.0],
    "grid2": [0.75, 1.25],
    "objective": 0,
    "optimizer": "grid",
    "out": "{OUT}/surface.csv"
  })";

TempRun make_world_files(bool with_sweep = false) {
  return fixtures::make_world_files(6, with_sweep ? kSmallSweepBlock : "", "runner");
}

}  // namespace

TEST_CASE("cmd_debate: minimal single-debater config produces a one-record transcript") {
  TempRun run = make_world_files();
  std::string minimal = R"({
  "seed": 1,
  "models": {"oracle": {"kind": "analytic", "path": "model.json"}},
  "debate": {
    "rounds": 1,
    "templates": {"initial": "q{question}ini", "debate": "q{question}{responses}rfn",
                   "answer": "ans{answer}"},
    "debaters": [{"model": "oracle", "temperature": 1.0, "mode": "cipher"}]
  },
  "tasks": {"kind": "file", "path": "one_task.jsonl"},
  "output": {"transcript": ")" + (run.dir / "out" / "min.jsonl").string() + R"("}
})";
  run.write("one_task.jsonl", R"({"id": "t0", "question": "10", "answer": "10"})" "\n");
  run.write("minimal.json", minimal);

  CliOverrides overrides;
  CHECK(cmd_debate(run.dir / "minimal.json", overrides) == kExitOk);

  const std::string transcript = read_file(run.dir / "out" / "min.jsonl");
  int responses = 0, finals = 0, configs = 0;
  std::istringstream lines(transcript);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find("\"type\":\"response\"") != std::string::npos) ++responses;
    if (line.find("\"type\":\"final\"") != std::string::npos) ++finals;
    if (line.find("\"type\":\"config\"") != std::string::npos) ++configs;
  }
  CHECK(responses == 1);
  CHECK(finals == 1);
  CHECK(configs == 1);
}

TEST_CASE("cmd_debate: cipher runs twice to byte-identical transcripts") {
  TempRun run = make_world_files();
  CliOverrides overrides;
  REQUIRE(cmd_debate(run.dir / "config.json", overrides) == kExitOk);
  const std::string first = read_file(run.dir / "out" / "transcript.jsonl");
  const std::string first_report = read_file(run.dir / "out" / "report.jsonl");

  REQUIRE(cmd_debate(run.dir / "config.json", overrides) == kExitOk);
  CHECK(read_file(run.dir / "out" / "transcript.jsonl") == first);
  CHECK(read_file(run.dir / "out" / "report.jsonl") == first_report);
}

TEST_CASE("cmd_debate: missing model file exits with a config error and no partial output") {
  TempRun run = make_world_files();
  fs::remove(run.dir / "model.json");
  CliOverrides overrides;
  CHECK(cmd_debate(run.dir / "config.json", overrides) == kExitIo);
  CHECK_FALSE(fs::exists(run.dir / "out" / "transcript.jsonl"));
}

TEST_CASE("cmd_debate: malformed config reports the parse position") {
  TempRun run = make_world_files();
  run.write("broken.json", "{ not json");
  CliOverrides overrides;
  CHECK(cmd_debate(run.dir / "broken.json", overrides) == kExitConfig);
}

TEST_CASE("cmd_debate: flag overrides beat config values") {
  TempRun run = make_world_files();
  CliOverrides overrides;
  overrides.rounds = 1;
  overrides.debaters = 1;
  overrides.out = (run.dir / "out" / "override.jsonl").string();
  REQUIRE(cmd_debate(run.dir / "config.json", overrides) == kExitOk);
  const std::string transcript = read_file(run.dir / "out" / "override.jsonl");
  int responses = 0;
  std::istringstream lines(transcript);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find("\"type\":\"response\"") != std::string::npos) ++responses;
  }
  CHECK(responses == 6);  // 6 tasks x 1 round x 1 debater
}

TEST_CASE("cmd_sweep: grid sweep writes a parseable CSV whose argmax matches a manual scan") {
  TempRun run = make_world_files(/*with_sweep=*/true);
  CliOverrides overrides;
  REQUIRE(cmd_sweep(run.dir / "config.json", overrides) == kExitOk);

  const std::string csv = read_file(run.dir / "out" / "surface.csv");
  const auto points = tuning::parse_surface_csv(csv);
  REQUIRE(points.size() == 4);

  const auto best = tuning::best_pair(points);
  double manual = -1.0;
  for (const auto& p : points) manual = std::max(manual, p.accuracy);
  CHECK(best.accuracy == manual);

  REQUIRE(cmd_sweep(run.dir / "config.json", overrides) == kExitOk);
  CHECK(read_file(run.dir / "out" / "surface.csv") == csv);
}

TEST_CASE("cmd_decode: a clamp-floor cipher dump decodes to the transcript text") {
  TempRun run = make_world_files();
  // Re-run the debate at the temperature floor so vectors sit on rows.
  std::string config = fixtures::scripted_config_json((run.dir / "out").string());
  config.replace(config.find("0.5"), 3, "0.0001");
  run.write("config.json", config);

  CliOverrides overrides;
  REQUIRE(cmd_debate(run.dir / "config.json", overrides) == kExitOk);

  fixtures::ScriptedWorld world(6);
  const auto table_path = run.dir / "table.bin";
  save_table(table_path, world.table);
  const auto vocab_path = run.dir / "vocab.txt";
  world.vocab.save(vocab_path);

  CHECK(cmd_decode(run.dir / "out" / "vectors.bin", table_path, vocab_path, 0) == kExitOk);

  // Cross-check one record against the stored transcript line.
  const auto records = load_embedding_dump(run.dir / "out" / "vectors.bin");
  REQUIRE(!records.empty());
  const auto ids = decoding::nn_decode_seq(records[0].vectors, world.table);
  const std::string decoded = world.vocab.detokenize(ids);
  const std::string transcript = read_file(run.dir / "out" / "transcript.jsonl");
  CHECK(transcript.find("\"decoded_text\":\"" + decoded + "\"") != std::string::npos);
}

TEST_CASE("cmd_decode: empty dumps succeed with empty output") {
  TempRun run;
  save_embedding_dump(run.dir / "empty.bin", {});
  fixtures::ScriptedWorld world(6);
  save_table(run.dir / "table.bin", world.table);
  world.vocab.save(run.dir / "vocab.txt");
  CHECK(cmd_decode(run.dir / "empty.bin", run.dir / "table.bin", run.dir / "vocab.txt", 2) == kExitOk);
}

TEST_CASE("cmd_gen_tasks writes loadable, reproducible files") {
  TempRun run;
  const auto out = run.dir / "tasks.jsonl";
  REQUIRE(cmd_gen_tasks(12, 5, out) == kExitOk);
  const auto tasks = eval::load_tasks(out);
  CHECK(tasks.size() == 12);
  const std::string first = read_file(out);
  REQUIRE(cmd_gen_tasks(12, 5, out) == kExitOk);
  CHECK(read_file(out) == first);
}

TEST_CASE("cmd_inspect reports the stored header, and errors name bad tensors") {
  TempRun run;
  lm::TransformerConfig config;
  config.n_layers = 2;
  config.n_heads = 2;
  config.d_model = 8;
  config.d_ff = 16;
  config.max_seq_len = 32;
  const auto path = run.dir / "model.bin";
  lm::save_model(path, config, lm::random_weights(config, 24, 3));
  CHECK(cmd_inspect(path) == kExitOk);

  // Truncated file: exit 2 (malformed input), not a crash.
  fs::resize_file(path, fs::file_size(path) / 3);
  CHECK(cmd_inspect(path) == kExitConfig);

  CHECK(cmd_inspect(run.dir / "absent.bin") == kExitIo);
}

TEST_CASE("cmd_debate: weights-backed models run natural-mode debates") {
  TempRun run("runner");
  lm::TransformerConfig config;
  config.n_layers = 1;
  config.n_heads = 2;
  config.d_model = 8;
  config.d_ff = 16;
  config.max_seq_len = 64;
  lm::save_model(run.dir / "model.bin", config, lm::random_weights(config, 16, 9));

  std::vector<std::string> tokens = {"</s>"};
  for (int i = 1; i < 16; ++i) tokens.push_back("w" + std::to_string(i));
  SpecialIds special;
  special.eos = 0;
  Vocabulary(tokens, special).save(run.dir / "vocab.txt");

  run.write("tasks.jsonl", R"({"id": "t0", "question": "w5", "answer": "w5"})" "\n");
  run.write("run.json", R"({
  "seed": 3,
  "models": {"tiny": {"kind": "weights", "weights": "model.bin", "vocab": "vocab.txt"}},
  "debate": {
    "rounds": 2,
    "separator": "w9",
    "max_new": 4,
    "templates": {"initial": "w1{question}w2", "debate": "w1{question}{responses}w3",
                   "answer": "w4{answer}"},
    "debaters": [
      {"model": "tiny", "temperature": 0.8, "mode": "natural"},
      {"model": "tiny", "temperature": 1.4, "mode": "natural"}
    ]
  },
  "tasks": {"kind": "file", "path": "tasks.jsonl"},
  "output": {"transcript": ")" + (run.dir / "out" / "t.jsonl").string() + R"("}
})");

  CliOverrides overrides;
  CHECK(cmd_debate(run.dir / "run.json", overrides) == kExitOk);
  CHECK(fs::exists(run.dir / "out" / "t.jsonl"));

  // A vocabulary that disagrees with the weight header is a config error.
  std::vector<std::string> short_tokens = {"</s>", "a"};
  Vocabulary(short_tokens, special).save(run.dir / "vocab.txt");
  CHECK(cmd_debate(run.dir / "run.json", overrides) == kExitConfig);
}

TEST_CASE("inspect-then-debate consistency: header vocab size equals the generation vocab") {
  TempRun run = make_world_files();
  fixtures::ScriptedWorld world(6);
  const auto loaded = lm::load_analytic_model(run.dir / "model.json");
  CHECK(loaded->vocab_size() == world.vocab_size());

  CliOverrides overrides;
  REQUIRE(cmd_debate(run.dir / "config.json", overrides) == kExitOk);
  const auto records = load_embedding_dump(run.dir / "out" / "vectors.bin");
  REQUIRE(!records.empty());
  CHECK(records[0].vectors.dim() == loaded->dim());  // identity table: dim == V
}
