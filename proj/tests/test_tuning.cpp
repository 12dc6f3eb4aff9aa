#include <doctest.h>

#include "cipher/tuning.hpp"
#include "fixtures.hpp"

using namespace cipher;
using namespace cipher::tuning;
using fixtures::ScriptedWorld;

namespace {

struct Setup {
  ScriptedWorld world{12};
  std::shared_ptr<cipher::lm::AnalyticModel> model = world.half_right_copy_model();
  debate::DebateConfig base = world.config({world.debater(model, 1.0), world.debater(model, 1.0)}, 2);
  std::vector<eval::TaskInstance> tasks = world.tasks(8);
};

}  // namespace

TEST_CASE("sweep: a 1x1 grid equals a direct evaluation at that pair") {
  Setup s;
  SweepSpec spec;
  spec.grid1 = {0.5};
  spec.grid2 = {1.5};
  spec.objective_debater = 0;
  const auto points = sweep(spec, s.base, s.tasks);
  REQUIRE(points.size() == 1);
  CHECK(points[0].t1 == 0.5);
  CHECK(points[0].t2 == 1.5);
  CHECK_FALSE(points[0].failed);

  debate::DebateConfig direct = s.base;
  direct.debaters[0].temperature = 0.5;
  direct.debaters[1].temperature = 1.5;
  const auto report = eval::evaluate_debate(direct, s.tasks);
  CHECK(points[0].accuracy == report.per_debater_accuracy[0]);
}

TEST_CASE("sweep: grid mode is exhaustive and reruns identically") {
  Setup s;
  SweepSpec spec;
  spec.grid1 = {0.25, 0.75, 1.5};
  spec.grid2 = {0.5, 1.0};
  const auto a = sweep(spec, s.base, s.tasks);
  const auto b = sweep(spec, s.base, s.tasks);
  REQUIRE(a.size() == 6);
  REQUIRE(b.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].t1 == b[i].t1);
    CHECK(a[i].t2 == b[i].t2);
    CHECK(a[i].accuracy == b[i].accuracy);
  }
  CHECK(surface_csv(a) == surface_csv(b));
}

TEST_CASE("sweep: symmetric debaters give a surface symmetric in (T1, T2)") {
  Setup s;
  s.base.aggregation = debate::Aggregation::lowest_temperature;
  SweepSpec spec;
  spec.grid1 = {0.5, 1.0, 1.5};
  spec.grid2 = {0.5, 1.0, 1.5};
  spec.objective_debater = -1;  // aggregate objective is order-free
  const auto points = sweep(spec, s.base, s.tasks);
  auto find = [&](double t1, double t2) {
    for (const auto& p : points) {
      if (p.t1 == t1 && p.t2 == t2) return p.accuracy;
    }
    FAIL("missing point");
    return 0.0;
  };
  for (double t1 : spec.grid1) {
    for (double t2 : spec.grid2) {
      CHECK(find(t1, t2) == find(t2, t1));
    }
  }
}

TEST_CASE("sweep: failed cells are recorded without aborting") {
  Setup s;
  // A gate-less partial debater fails config validation inside the cell.
  s.base.debaters[1].mode = decoding::Mode::partial;
  SweepSpec spec;
  spec.grid1 = {0.5};
  spec.grid2 = {1.0};
  const auto points = sweep(spec, s.base, s.tasks);
  REQUIRE(points.size() == 1);
  CHECK(points[0].failed);
  CHECK_FALSE(points[0].error.empty());
  CHECK_THROWS_AS(best_pair(points), ConfigError);
}

TEST_CASE("sweep never mutates anything beyond the two temperatures") {
  Setup s;
  const auto rounds_before = s.base.rounds;
  const auto t0 = s.base.debaters[0].temperature;
  SweepSpec spec;
  spec.grid1 = {0.5, 2.0};
  spec.grid2 = {0.5};
  (void)sweep(spec, s.base, s.tasks);
  CHECK(s.base.rounds == rounds_before);
  CHECK(s.base.debaters[0].temperature == t0);
}

TEST_CASE("random optimizer visits the requested number of seeded points") {
  Setup s;
  SweepSpec spec;
  spec.optimizer = OptimizerKind::random;
  spec.random_trials = 7;
  spec.seed = 11;
  const auto a = sweep(spec, s.base, s.tasks);
  const auto b = sweep(spec, s.base, s.tasks);
  REQUIRE(a.size() == 7);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].t1 == b[i].t1);
    CHECK(a[i].t2 == b[i].t2);
  }
}

TEST_CASE("best_pair: single point, tie-breaking, manual scan") {
  std::vector<SurfacePoint> points(1);
  points[0].t1 = 1.0;
  points[0].t2 = 2.0;
  points[0].accuracy = 0.5;
  CHECK(best_pair(points).t1 == 1.0);

  SurfacePoint other;
  other.t1 = 0.5;
  other.t2 = 3.0;
  other.accuracy = 0.5;
  points.push_back(other);  // equal accuracy, lower t1 wins
  CHECK(best_pair(points).t1 == 0.5);

  SurfacePoint winner;
  winner.t1 = 2.0;
  winner.t2 = 0.1;
  winner.accuracy = 0.75;
  points.push_back(winner);
  const auto best = best_pair(points);
  CHECK(best.accuracy == 0.75);

  // Manual scan agrees.
  double max_acc = 0.0;
  for (const auto& p : points) max_acc = std::max(max_acc, p.accuracy);
  CHECK(best.accuracy == max_acc);
}

TEST_CASE("surface CSV round trips") {
  Setup s;
  SweepSpec spec;
  spec.grid1 = {0.5, 1.0};
  spec.grid2 = {0.75};
  const auto points = sweep(spec, s.base, s.tasks);
  const auto csv = surface_csv(points);
  const auto parsed = parse_surface_csv(csv);
  REQUIRE(parsed.size() == points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(parsed[i].t1 == points[i].t1);
    CHECK(parsed[i].t2 == points[i].t2);
    CHECK(parsed[i].accuracy == points[i].accuracy);
    CHECK(parsed[i].n_tasks == points[i].n_tasks);
    CHECK(parsed[i].failed == points[i].failed);
  }
}

TEST_CASE("sweep spec validation") {
  SweepSpec spec;
  spec.grid1.clear();
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = SweepSpec{};
  spec.grid2 = {0.0};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}
