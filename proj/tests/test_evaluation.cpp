#include <doctest.h>

#include "cipher/evaluation.hpp"
#include "fixtures.hpp"

using namespace cipher;
using namespace cipher::eval;
using fixtures::ScriptedWorld;

TEST_CASE("score: exact and normalized matches count as correct") {
  ScriptedWorld world(8);
  const auto model = world.half_right_copy_model();
  auto config = world.config({world.debater(model, 1.0)}, 1);
  const auto tasks = world.tasks(4);
  const auto transcripts = run_debates(config, tasks);

  // Even-indexed tasks answered correctly by construction.
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto result = score(transcripts[i], tasks[i]);
    CHECK(result.correct == (i % 2 == 0));
    REQUIRE(result.per_debater_correct.size() == 1);
    CHECK(result.per_debater_correct[0] == result.correct);
  }
}

TEST_CASE("score handles numeric normalization and missing answers") {
  ScriptedWorld world(8);
  debate::DebateTranscript transcript;
  transcript.debater_count = 1;
  transcript.rounds = 1;
  debate::ResponseRecord rec;
  rec.round = 1;
  rec.debater = 0;
  rec.extracted_answer = "14.0";
  transcript.records.push_back(rec);
  transcript.final_answer = "14.0";

  TaskInstance task;
  task.id = "t";
  task.question = "q";
  task.answer = "14";
  CHECK(score(transcript, task).correct);

  transcript.final_answer = std::nullopt;
  const auto absent = score(transcript, task);
  CHECK_FALSE(absent.correct);
  CHECK(absent.extraction_failed);
}

TEST_CASE("evaluate_debate: accuracy equals the hand-counted fraction") {
  ScriptedWorld world(10);
  const auto model = world.half_right_copy_model();
  auto config = world.config({world.debater(model, 1.0)}, 1);
  const auto tasks = world.tasks(10);
  const auto report = evaluate_debate(config, tasks);
  CHECK(report.total == 10);
  CHECK(report.correct == 5);  // even indices only
  CHECK(report.accuracy == doctest::Approx(0.5));
  REQUIRE(report.per_debater_accuracy.size() == 1);
  CHECK(report.per_debater_accuracy[0] == doctest::Approx(0.5));
}

TEST_CASE("evaluate_debate: the report does not depend on the job count") {
  ScriptedWorld world(12);
  const auto model = world.half_right_copy_model();
  auto config = world.config({world.debater(model, 0.8), world.debater(model, 1.4)}, 2);
  const auto tasks = world.tasks(9);
  const auto serial = evaluate_debate(config, tasks, 1);
  const auto parallel = evaluate_debate(config, tasks, 4);
  CHECK(serial.correct == parallel.correct);
  REQUIRE(serial.tasks.size() == parallel.tasks.size());
  for (std::size_t i = 0; i < serial.tasks.size(); ++i) {
    CHECK(serial.tasks[i].final_answer == parallel.tasks[i].final_answer);
  }
}

TEST_CASE("modal_answer: majority, unanimity, and seeded ties") {
  CountingRng rng(5);
  using A = std::optional<std::string>;
  const std::vector<A> majority = {A("6"), A("6"), A("9"), A("9"), A("6")};
  CHECK(modal_answer(majority, rng) == "6");

  const std::vector<A> with_absent = {A("4"), std::nullopt, A("4")};
  CHECK(modal_answer(with_absent, rng) == "4");

  const std::vector<A> none = {std::nullopt, std::nullopt};
  CHECK_FALSE(modal_answer(none, rng).has_value());

  const std::vector<A> tie = {A("a"), A("b")};
  CountingRng r1(99), r2(99);
  CHECK(modal_answer(tie, r1) == modal_answer(tie, r2));
  CHECK(r1.draws() == 1);
}

TEST_CASE("self_consistency: k=1 equals Single Answer, deterministic voters are unanimous") {
  ScriptedWorld world(10);
  const auto model = world.half_right_copy_model();
  auto spec = world.debater(model, 1.0, decoding::Mode::natural);
  const auto tasks = world.tasks(3);

  const auto result = self_consistency(spec, world.templates(), tasks[0], 1, 77);
  CHECK(result.votes.size() == 1);
  CHECK(result.final_answer == single_answer(spec, world.templates(), tasks[0], 77));

  const auto five = self_consistency(spec, world.templates(), tasks[2], 5, 77);
  CHECK(five.votes.size() == 5);
  for (const auto& vote : five.votes) CHECK(vote == five.votes[0]);  // scripted model
  CHECK(five.final_answer == five.votes[0]);

  CHECK_THROWS_AS(self_consistency(spec, world.templates(), tasks[0], 0, 1), ConfigError);
  auto cipher_spec = world.debater(model, 1.0);
  CHECK_THROWS_AS(self_consistency(cipher_spec, world.templates(), tasks[0], 3, 1), ConfigError);
}

TEST_CASE("self_consistency: stochastic voters disagree and the vote is modal") {
  const auto model = fixtures::toy_transformer(32, 2, 91);
  debate::DebaterSpec spec;
  spec.model = model;
  spec.temperature = 2.5;
  spec.mode = decoding::Mode::natural;
  spec.max_new = 5;

  debate::PromptTemplate templates;
  templates.initial = "w1{question}w2";
  templates.debate = "w1{question}{responses}w3";
  templates.answer = "w4{answer}";

  TaskInstance task;
  task.id = "t";
  task.question = "w5";
  task.answer = "w5";

  const auto result = self_consistency(spec, templates, task, 7, 1234);
  REQUIRE(result.votes.size() == 7);
  bool any_diff = false;
  for (const auto& vote : result.votes) any_diff = any_diff || vote != result.votes[0];
  CHECK(any_diff);  // hot sampling: the substreams disagree somewhere

  // The final answer replays the documented modal rule over the votes.
  CountingRng tie_rng(mix_seed({1234, 0x746965}));
  CHECK(result.final_answer == modal_answer(result.votes, tie_rng));

  // And the whole procedure replays under its seed.
  const auto again = self_consistency(spec, templates, task, 7, 1234);
  for (std::size_t i = 0; i < result.votes.size(); ++i) CHECK(again.votes[i] == result.votes[i]);
  CHECK(again.final_answer == result.final_answer);
}

TEST_CASE("bounds suite: expert lifts the copy debater to 1.0, misaligned sinks it to 0.0") {
  ScriptedWorld world(24);
  const auto model = world.half_right_copy_model();
  auto base = world.config({world.debater(model, 0.5)}, 2);
  const auto tasks = world.tasks(24);

  const auto report = run_bounds_suite(base, tasks);
  CHECK(report.expert.per_debater_accuracy[0] == doctest::Approx(1.0));
  CHECK(report.misaligned.per_debater_accuracy[0] == doctest::Approx(0.0));
  CHECK(report.single_answer.accuracy == doctest::Approx(0.5));
  // Control strictly between the bounds.
  CHECK(report.single_answer.accuracy > report.misaligned.per_debater_accuracy[0]);
  CHECK(report.single_answer.accuracy < report.expert.per_debater_accuracy[0]);
}

TEST_CASE("bounds suite accepts a gated partial-mode standard debater") {
  ScriptedWorld world(12);
  const auto model = world.half_right_copy_model();
  auto standard = world.debater(model, 0.5, decoding::Mode::partial);
  standard.gate = decoding::UncertaintyGate{decoding::GateKind::entropy, -1.0};  // full averaging
  auto base = world.config({standard}, 2);
  const auto tasks = world.tasks(12);

  const auto report = run_bounds_suite(base, tasks);
  CHECK(report.expert.per_debater_accuracy[0] == doctest::Approx(1.0));
  CHECK(report.misaligned.per_debater_accuracy[0] == doctest::Approx(0.0));
}

TEST_CASE("positional bias: symmetric debaters show exactly zero difference") {
  ScriptedWorld world(16);
  const auto model = world.half_right_copy_model();
  auto base = world.config({world.debater(model, 0.9), world.debater(model, 0.9)}, 2);
  const auto tasks = world.tasks(16);
  const auto report = run_positional_bias(base, tasks);
  CHECK(report.accuracy_difference == 0.0);
  CHECK(report.others_first.accuracy == report.self_first.accuracy);
}

TEST_CASE("positional bias: an order-sensitive pairing shows the enumerated difference") {
  ScriptedWorld world(16);
  const auto model = world.half_right_copy_model();
  debate::DebaterSpec expert;
  expert.role = debate::Role::expert;
  expert.temperature = 1.5;
  auto base = world.config({world.debater(model, 0.5), expert}, 2);
  const auto tasks = world.tasks(16);

  // others_first leaves the copy debater's own answer last (it re-asserts
  // itself, accuracy 0.5); self_first puts the expert's answer last (it
  // copies the truth, accuracy 1.0).
  const auto report = run_positional_bias(base, tasks);
  CHECK(report.others_first.accuracy == doctest::Approx(0.5));
  CHECK(report.self_first.accuracy == doctest::Approx(1.0));
  CHECK(report.accuracy_difference == doctest::Approx(-0.5));

  const auto rerun = run_positional_bias(base, tasks);
  CHECK(rerun.accuracy_difference == report.accuracy_difference);
}

TEST_CASE("positional bias requires exactly two debaters") {
  ScriptedWorld world(8);
  const auto model = world.half_right_copy_model();
  auto base = world.config({world.debater(model, 1.0)}, 2);
  CHECK_THROWS_AS(run_positional_bias(base, world.tasks(2)), ConfigError);
}

TEST_CASE("scale sweep: grid shape, degenerate cell, and expert monotonicity") {
  ScriptedWorld world(12);
  const auto model = world.half_right_copy_model();
  debate::DebaterSpec expert;
  expert.role = debate::Role::expert;
  expert.temperature = 1.5;
  auto base = world.config({world.debater(model, 0.5), expert}, 2);
  const auto tasks = world.tasks(12);

  const std::vector<int> rounds = {1, 2, 3};
  const std::vector<int> counts = {1, 2};
  const auto grid = run_scale_sweep(base, tasks, rounds, counts);
  REQUIRE(grid.size() == 6);

  // (R=1, n=1) equals the Single Answer baseline.
  debate::DebateConfig single = base;
  single.debaters = {base.debaters[0]};
  single.rounds = 1;
  const auto control = evaluate_debate(single, tasks);
  CHECK(grid[0].rounds == 1);
  CHECK(grid[0].debaters == 1);
  CHECK(grid[0].report.accuracy == control.accuracy);

  // The expert pairing's accuracy is monotone non-decreasing in rounds.
  double previous = -1.0;
  for (const auto& cell : grid) {
    if (cell.debaters != 2) continue;
    CHECK(cell.report.per_debater_accuracy[0] >= previous);
    previous = cell.report.per_debater_accuracy[0];
  }
  CHECK(previous == doctest::Approx(1.0));
}
