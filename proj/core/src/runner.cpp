#include "cipher/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "cipher/analytic.hpp"
#include "cipher/io_util.hpp"
#include "cipher/model_io.hpp"

namespace cipher::runner {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void config_fail(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) config_fail(where, std::string("missing required key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_fail(where + "." + key, e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_fail(where + "." + key, e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::shared_ptr<const LanguageModel> load_model_entry(const json& entry, const std::string& name,
                                                      const std::filesystem::path& base) {
  const std::string where = "models." + name;
  const std::string kind = require<std::string>(entry, "kind", where);
  if (kind == "analytic") {
    return lm::load_analytic_model(resolve(base, require<std::string>(entry, "path", where)));
  }
  if (kind == "weights") {
    const auto weights_path = resolve(base, require<std::string>(entry, "weights", where));
    const auto vocab_path = resolve(base, require<std::string>(entry, "vocab", where));
    lm::LoadedModel loaded = lm::load_model(weights_path);
    Vocabulary vocab = Vocabulary::load(vocab_path);
    if (vocab.size() != loaded.vocab_size) {
      config_fail(where, "vocabulary size " + std::to_string(vocab.size()) +
                             " != weight file vocab_size " + std::to_string(loaded.vocab_size));
    }
    return std::make_shared<lm::TransformerModel>(loaded.config, std::move(loaded.weights),
                                                  std::move(vocab));
  }
  config_fail(where, "unknown model kind '" + kind + "' (expected 'analytic' or 'weights')");
}

decoding::Mode parse_mode(const std::string& name, const std::string& where) {
  const auto mode = decoding::mode_from_string(name);
  if (!mode.has_value()) config_fail(where, "unknown mode '" + name + "'");
  return *mode;
}

debate::DebaterSpec parse_debater(const json& entry, const RunConfig& run, int index,
                                  int default_max_new) {
  const std::string where = "debate.debaters[" + std::to_string(index) + "]";
  debate::DebaterSpec spec;
  if (entry.contains("model")) {
    const std::string ref = entry.at("model").get<std::string>();
    const auto it = run.models.find(ref);
    if (it == run.models.end()) config_fail(where, "unknown model reference '" + ref + "'");
    spec.model = it->second;
  }
  spec.temperature = get_or<double>(entry, "temperature", 1.0, where);
  spec.mode = parse_mode(get_or<std::string>(entry, "mode", "cipher", where), where);
  spec.max_new = get_or<int>(entry, "max_new", default_max_new, where);
  spec.random_role_temperature = get_or<double>(entry, "random_role_temperature", 100.0, where);
  if (entry.contains("role")) {
    const auto role = debate::role_from_string(entry.at("role").get<std::string>());
    if (!role.has_value()) config_fail(where, "unknown role");
    spec.role = *role;
  }
  if (entry.contains("metric")) {
    const std::string metric = entry.at("metric").get<std::string>();
    if (metric == "cosine") spec.metric = decoding::Metric::cosine;
    else if (metric == "squared_euclidean") spec.metric = decoding::Metric::squared_euclidean;
    else config_fail(where, "unknown metric '" + metric + "'");
  }
  if (entry.contains("gate")) {
    const auto& g = entry.at("gate");
    decoding::UncertaintyGate gate;
    const std::string kind = require<std::string>(g, "kind", where + ".gate");
    const auto parsed = decoding::gate_kind_from_string(kind);
    if (!parsed.has_value()) config_fail(where + ".gate", "unknown kind '" + kind + "'");
    gate.kind = *parsed;
    gate.threshold = require<double>(g, "threshold", where + ".gate");
    spec.gate = gate;
  }
  return spec;
}

ordered_json config_echo_record(const RunConfig& run) {
  ordered_json rec;
  rec["type"] = "config";
  rec["config_digest"] = run.config_digest;
  rec["config"] = json::parse(run.config_echo_json);
  return rec;
}

ordered_json json_opt(const std::optional<std::string>& v) {
  return v.has_value() ? ordered_json(*v) : ordered_json(nullptr);
}

int guard(const char* command, const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const IoError& e) {
    std::cerr << ordered_json{{"error", e.what()}, {"command", command}, {"exit_code", kExitIo}}.dump()
              << "\n";
    return kExitIo;
  } catch (const GenerationError& e) {
    std::cerr << ordered_json{{"error", e.what()}, {"command", command}, {"exit_code", kExitGeneration}}
                     .dump()
              << "\n";
    return kExitGeneration;
  } catch (const Error& e) {
    std::cerr << ordered_json{{"error", e.what()}, {"command", command}, {"exit_code", kExitConfig}}.dump()
              << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << ordered_json{{"error", e.what()}, {"command", command}, {"exit_code", kExitConfig}}.dump()
              << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << ordered_json{{"error", e.what()}, {"command", command}, {"exit_code", kExitGeneration}}
                     .dump()
              << "\n";
    return kExitGeneration;
  }
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path, const CliOverrides& overrides) {
  const std::string raw = read_file(path);

  json j;
  try {
    j = json::parse(raw);
  } catch (const json::parse_error& e) {
    // nlohmann reports the byte offset; surface it as-is.
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }

  RunConfig run;
  run.config_digest = digest_hex(fnv1a64(raw.data(), raw.size()));
  run.config_echo_json = j.dump();
  run.seed = get_or<std::uint64_t>(j, "seed", 0, "config");
  if (overrides.seed.has_value()) run.seed = *overrides.seed;

  const std::filesystem::path base = path.parent_path();

  if (j.contains("models")) {
    for (const auto& [name, entry] : j.at("models").items()) {
      run.models[name] = load_model_entry(entry, name, base);
    }
  }

  if (!j.contains("debate")) config_fail("config", "missing 'debate' section");
  const json& d = j.at("debate");
  run.debate.rounds = get_or<int>(d, "rounds", 2, "debate");
  run.debate.separator = get_or<std::string>(d, "separator", "\n", "debate");
  run.debate.seed = run.seed;
  if (d.contains("ordering")) {
    const auto ordering = debate::ordering_from_string(d.at("ordering").get<std::string>());
    if (!ordering.has_value()) config_fail("debate.ordering", "unknown value");
    run.debate.ordering = *ordering;
  }
  if (d.contains("aggregation")) {
    const auto agg = debate::aggregation_from_string(d.at("aggregation").get<std::string>());
    if (!agg.has_value()) config_fail("debate.aggregation", "unknown value");
    run.debate.aggregation = *agg;
  }
  if (d.contains("templates")) {
    const json& t = d.at("templates");
    auto& templates = run.debate.templates;
    templates.initial = get_or<std::string>(t, "initial", templates.initial, "debate.templates");
    templates.debate = get_or<std::string>(t, "debate", templates.debate, "debate.templates");
    templates.answer = get_or<std::string>(t, "answer", templates.answer, "debate.templates");
  }
  const int default_max_new = get_or<int>(d, "max_new", 64, "debate");
  if (!d.contains("debaters") || !d.at("debaters").is_array() || d.at("debaters").empty()) {
    config_fail("debate.debaters", "must be a non-empty array");
  }
  int index = 0;
  for (const auto& entry : d.at("debaters")) {
    run.debate.debaters.push_back(parse_debater(entry, run, index++, default_max_new));
  }

  if (overrides.rounds.has_value()) run.debate.rounds = *overrides.rounds;
  if (overrides.mode.has_value()) {
    const auto mode = parse_mode(*overrides.mode, "--mode");
    for (auto& spec : run.debate.debaters) spec.mode = mode;
  }
  if (overrides.debaters.has_value()) {
    const int n = *overrides.debaters;
    if (n < 1) throw ConfigError("--debaters must be >= 1");
    if (static_cast<int>(run.debate.debaters.size()) > n) {
      run.debate.debaters.resize(static_cast<std::size_t>(n));
    }
    while (static_cast<int>(run.debate.debaters.size()) < n) {
      run.debate.debaters.push_back(run.debate.debaters.back());
    }
  }

  if (!j.contains("tasks")) config_fail("config", "missing 'tasks' section");
  const json& t = j.at("tasks");
  const std::string kind = require<std::string>(t, "kind", "tasks");
  if (kind == "arithmetic") {
    run.tasks = eval::gen_arithmetic(require<int>(t, "count", "tasks"),
                                     get_or<std::uint64_t>(t, "seed", run.seed, "tasks"));
  } else if (kind == "file") {
    run.tasks = eval::load_tasks(resolve(base, require<std::string>(t, "path", "tasks")));
  } else {
    config_fail("tasks.kind", "unknown value '" + kind + "' (expected 'arithmetic' or 'file')");
  }
  if (run.tasks.empty()) config_fail("tasks", "no tasks to run");

  // Input paths resolve against the config file; output paths stay relative
  // to the working directory.
  if (j.contains("output")) {
    const json& o = j.at("output");
    if (o.contains("transcript")) run.transcript_path = o.at("transcript").get<std::string>();
    if (o.contains("report")) run.report_path = o.at("report").get<std::string>();
    if (o.contains("embedding_dump")) {
      run.embedding_dump_path = o.at("embedding_dump").get<std::string>();
    }
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    run.sweep_present = true;
    run.sweep.grid1 = get_or<std::vector<double>>(s, "grid1", tuning::default_temperature_grid(), "sweep");
    run.sweep.grid2 = get_or<std::vector<double>>(s, "grid2", tuning::default_temperature_grid(), "sweep");
    run.sweep.objective_debater = get_or<int>(s, "objective", 0, "sweep");
    run.sweep.random_trials = get_or<int>(s, "random_trials", 25, "sweep");
    run.sweep.seed = run.seed;
    const std::string optimizer = get_or<std::string>(s, "optimizer", "grid", "sweep");
    if (optimizer == "grid") run.sweep.optimizer = tuning::OptimizerKind::grid;
    else if (optimizer == "random") run.sweep.optimizer = tuning::OptimizerKind::random;
    else config_fail("sweep.optimizer", "unknown value '" + optimizer + "'");
    if (s.contains("out")) run.sweep_out = s.at("out").get<std::string>();
  }

  return run;
}

std::string transcript_jsonl(const RunConfig& config,
                             std::span<const debate::DebateTranscript> transcripts) {
  std::ostringstream out;
  out << config_echo_record(config).dump() << "\n";
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    const auto& transcript = transcripts[i];
    const auto& task = config.tasks[i];
    for (const auto& rec : transcript.records) {
      ordered_json r;
      r["type"] = "response";
      r["task"] = task.id;
      r["round"] = rec.round;
      r["debater"] = rec.debater + 1;
      r["mode"] = decoding::to_string(rec.mode);
      r["role"] = debate::to_string(rec.role);
      r["temperature"] = rec.temperature;
      r["decoded_text"] = rec.decoded_text;
      r["extracted_answer"] = json_opt(rec.extracted_answer);
      r["stop_reason"] = decoding::to_string(rec.stop_reason);
      r["embedding_digest"] = rec.embedding_digest;
      r["context_length"] = rec.context_length;
      r["scaffold_length"] = rec.scaffold_length;
      out << r.dump() << "\n";
    }
    ordered_json f;
    f["type"] = "final";
    f["task"] = task.id;
    f["final_answer"] = json_opt(transcript.final_answer);
    f["aggregation"] = transcript.aggregation_trace;
    f["ordering"] = debate::to_string(transcript.ordering);
    f["generation_rng_draws"] = transcript.generation_rng_draws;
    out << f.dump() << "\n";
  }
  return out.str();
}

std::string report_jsonl(const RunConfig& config, const eval::EvalReport& report) {
  std::ostringstream out;
  out << config_echo_record(config).dump() << "\n";
  for (const auto& task : report.tasks) {
    ordered_json r;
    r["type"] = "task";
    r["id"] = task.task_id;
    r["correct"] = task.correct;
    r["final_answer"] = json_opt(task.final_answer);
    r["extraction_failed"] = task.extraction_failed;
    r["per_debater_correct"] = task.per_debater_correct;
    out << r.dump() << "\n";
  }
  ordered_json s;
  s["type"] = "summary";
  s["total"] = report.total;
  s["correct"] = report.correct;
  s["accuracy"] = report.accuracy;
  s["per_debater_accuracy"] = report.per_debater_accuracy;
  s["config_digest"] = config.config_digest;
  out << s.dump() << "\n";
  return out.str();
}

std::string report_table(const eval::EvalReport& report) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-12s %8zu\n", "tasks", report.total);
  out << line;
  std::snprintf(line, sizeof(line), "%-12s %8zu\n", "correct", report.correct);
  out << line;
  std::snprintf(line, sizeof(line), "%-12s %8.4f\n", "accuracy", report.accuracy);
  out << line;
  for (std::size_t d = 0; d < report.per_debater_accuracy.size(); ++d) {
    std::snprintf(line, sizeof(line), "debater %-4zu %8.4f\n", d + 1,
                  report.per_debater_accuracy[d]);
    out << line;
  }
  return out.str();
}

int cmd_debate(const std::filesystem::path& config_path, const CliOverrides& overrides) {
  return guard("debate", [&] {
    RunConfig run = load_run_config(config_path, overrides);
    if (overrides.out.has_value()) run.transcript_path = *overrides.out;

    const auto transcripts = eval::run_debates(run.debate, run.tasks, overrides.jobs);
    const auto report = eval::score_all(run.debate, transcripts, run.tasks);

    if (run.transcript_path.has_value()) {
      write_file_atomic(*run.transcript_path, transcript_jsonl(run, transcripts));
      std::cout << "transcript: " << run.transcript_path->string() << "\n";
    }
    if (run.report_path.has_value()) {
      write_file_atomic(*run.report_path, report_jsonl(run, report));
      std::cout << "report: " << run.report_path->string() << "\n";
    }
    if (run.embedding_dump_path.has_value()) {
      std::vector<EmbeddingDumpRecord> dump;
      for (std::size_t i = 0; i < transcripts.size(); ++i) {
        for (const auto& rec : transcripts[i].records) {
          if (rec.mode == decoding::Mode::natural) continue;
          EmbeddingDumpRecord r;
          r.task_index = static_cast<std::uint32_t>(i);
          r.round = static_cast<std::uint32_t>(rec.round);
          r.debater = static_cast<std::uint32_t>(rec.debater + 1);
          r.vectors = rec.vectors;
          dump.push_back(std::move(r));
        }
      }
      save_embedding_dump(*run.embedding_dump_path, dump);
      std::cout << "embedding dump: " << run.embedding_dump_path->string() << "\n";
    }
    std::cout << report_table(report);
  });
}

int cmd_sweep(const std::filesystem::path& config_path, const CliOverrides& overrides) {
  return guard("sweep", [&] {
    RunConfig run = load_run_config(config_path, overrides);
    if (!run.sweep_present) throw ConfigError("config: missing 'sweep' section");
    if (overrides.out.has_value()) run.sweep_out = *overrides.out;

    const auto points = tuning::sweep(run.sweep, run.debate, run.tasks, overrides.jobs);
    const std::string csv =
        "# config_digest=" + run.config_digest + "\n" + tuning::surface_csv(points);
    if (run.sweep_out.has_value()) {
      write_file_atomic(*run.sweep_out, csv);
      std::cout << "surface: " << run.sweep_out->string() << "\n";
    } else {
      std::cout << csv;
    }
    const auto best = tuning::best_pair(points);
    char line[128];
    std::snprintf(line, sizeof(line), "best: T1=%g T2=%g accuracy=%.4f\n", best.t1, best.t2,
                  best.accuracy);
    std::cout << line;
  });
}

int cmd_decode(const std::filesystem::path& dump_path, const std::filesystem::path& table_path,
               const std::filesystem::path& vocab_path, int top_k) {
  return guard("decode", [&] {
    const auto records = load_embedding_dump(dump_path);
    const EmbeddingTable table = load_table(table_path);
    const Vocabulary vocab = Vocabulary::load(vocab_path);
    if (table.vocab_size() != vocab.size()) {
      throw ShapeError("decode: table rows " + std::to_string(table.vocab_size()) +
                       " != vocabulary size " + std::to_string(vocab.size()));
    }
    for (const auto& rec : records) {
      if (!rec.vectors.empty() && rec.vectors.dim() != table.dim()) {
        throw ShapeError("decode: dump dim " + std::to_string(rec.vectors.dim()) +
                         " != table dim " + std::to_string(table.dim()));
      }
      const auto ids = decoding::nn_decode_seq(rec.vectors, table);
      std::cout << "task=" << rec.task_index << " round=" << rec.round
                << " debater=" << rec.debater << " steps=" << rec.vectors.size() << "\n";
      std::cout << "text: " << vocab.detokenize(ids) << "\n";
      if (top_k > 0) {
        for (std::size_t t = 0; t < rec.vectors.size(); ++t) {
          const auto v = rec.vectors.at(t);
          std::vector<std::pair<double, TokenId>> by_distance;
          for (TokenId id = 0; id < table.vocab_size(); ++id) {
            const auto row = table.row(id);
            double acc = 0.0;
            for (std::size_t c = 0; c < v.size(); ++c) {
              const double diff = static_cast<double>(v[c]) - static_cast<double>(row[c]);
              acc += diff * diff;
            }
            by_distance.emplace_back(acc, id);
          }
          std::sort(by_distance.begin(), by_distance.end());
          std::cout << "step " << t << ":";
          for (int k = 0; k < top_k && k < static_cast<int>(by_distance.size()); ++k) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), " %s(%.6g)", vocab.token(by_distance[static_cast<std::size_t>(k)].second).c_str(),
                          by_distance[static_cast<std::size_t>(k)].first);
            std::cout << buf;
          }
          std::cout << "\n";
        }
      }
    }
  });
}

int cmd_gen_tasks(int count, std::uint64_t seed, const std::filesystem::path& out_path) {
  return guard("gen-tasks", [&] {
    const auto tasks = eval::gen_arithmetic(count, seed);
    eval::save_tasks(out_path, tasks);
    std::cout << "wrote " << tasks.size() << " tasks to " << out_path.string() << "\n";
  });
}

int cmd_inspect(const std::filesystem::path& model_path) {
  return guard("inspect", [&] {
    if (model_path.extension() == ".json") {
      const auto model = lm::load_analytic_model(model_path);
      std::cout << "kind: analytic\n"
                << "vocab_size: " << model->vocab_size() << "\n"
                << "dim: " << model->dim() << "\n"
                << "max_seq_len: " << model->max_seq_len() << "\n"
                << "max_order: " << model->spec().max_order << "\n"
                << "rules: " << model->spec().rules.size() << "\n";
      return;
    }
    const lm::LoadedModel loaded = lm::load_model(model_path);
    const auto& cfg = loaded.config;
    std::cout << "kind: transformer\n"
              << "n_layers: " << cfg.n_layers << "\n"
              << "n_heads: " << cfg.n_heads << "\n"
              << "d_model: " << cfg.d_model << "\n"
              << "d_ff: " << cfg.d_ff << "\n"
              << "vocab_size: " << loaded.vocab_size << "\n"
              << "max_seq_len: " << cfg.max_seq_len << "\n";
    std::cout << "tensors:\n"
              << "  token_embedding [" << loaded.vocab_size << ", " << cfg.d_model << "]\n"
              << "  position_embedding [" << cfg.max_seq_len << ", " << cfg.d_model << "]\n"
              << "  " << cfg.n_layers << " x layer {ln1, wq/bq, wk/bk, wv/bv, wo/bo, ln2, "
              << "w_ff1/b_ff1 [" << cfg.d_model << ", " << cfg.d_ff << "], w_ff2/b_ff2}\n"
              << "  final_ln [" << cfg.d_model << "]\n"
              << "  output_projection [" << cfg.d_model << ", " << loaded.vocab_size << "]\n";

    const auto& table = loaded.weights.token_embedding;
    double min_norm = 0.0, max_norm = 0.0, sum_norm = 0.0;
    for (TokenId id = 0; id < table.vocab_size(); ++id) {
      double acc = 0.0;
      for (float x : table.row(id)) acc += static_cast<double>(x) * static_cast<double>(x);
      const double norm = std::sqrt(acc);
      if (id == 0 || norm < min_norm) min_norm = norm;
      if (id == 0 || norm > max_norm) max_norm = norm;
      sum_norm += norm;
    }
    char line[128];
    std::snprintf(line, sizeof(line), "embedding row norms: min=%.6g mean=%.6g max=%.6g\n", min_norm,
                  sum_norm / std::max(1, table.vocab_size()), max_norm);
    std::cout << line;
  });
}

}  // namespace cipher::runner
