#include "cipher/tuning.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace cipher::tuning {

namespace {

std::string format_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  std::string text = s.str();
  // Shortest representation that still round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    std::ostringstream t;
    t.precision(prec);
    t << v;
    double back = 0.0;
    const std::string candidate = t.str();
    if (std::from_chars(candidate.data(), candidate.data() + candidate.size(), back).ec ==
            std::errc() &&
        back == v) {
      return candidate;
    }
  }
  return text;
}

}  // namespace

GridOptimizer::GridOptimizer(std::vector<double> grid1, std::vector<double> grid2)
    : grid1_(std::move(grid1)), grid2_(std::move(grid2)) {}

void GridOptimizer::optimize(const PointEvaluator& evaluate) {
  for (double t1 : grid1_) {
    for (double t2 : grid2_) {
      evaluate(t1, t2);
    }
  }
}

RandomSearchOptimizer::RandomSearchOptimizer(std::vector<double> grid1, std::vector<double> grid2,
                                             int n_trials, std::uint64_t seed)
    : grid1_(std::move(grid1)), grid2_(std::move(grid2)), n_trials_(n_trials), seed_(seed) {}

void RandomSearchOptimizer::optimize(const PointEvaluator& evaluate) {
  CountingRng rng(mix_seed({seed_, 0x72616e64}));
  for (int i = 0; i < n_trials_; ++i) {
    const double t1 = grid1_[static_cast<std::size_t>(rng.next_below(grid1_.size()))];
    const double t2 = grid2_[static_cast<std::size_t>(rng.next_below(grid2_.size()))];
    evaluate(t1, t2);
  }
}

std::vector<double> default_temperature_grid() {
  return {0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
}

void SweepSpec::validate() const {
  if (grid1.empty() || grid2.empty()) throw ConfigError("sweep: temperature grids must be non-empty");
  for (double t : grid1) {
    if (!(t > 0.0)) throw ConfigError("sweep: grid1 temperatures must be > 0");
  }
  for (double t : grid2) {
    if (!(t > 0.0)) throw ConfigError("sweep: grid2 temperatures must be > 0");
  }
  if (objective_debater < -1) throw ConfigError("sweep: objective debater must be >= -1");
  if (random_trials < 1) throw ConfigError("sweep: random_trials must be >= 1");
}

std::vector<SurfacePoint> sweep_with_optimizer(TemperatureOptimizer& optimizer,
                                               const SweepSpec& spec,
                                               const debate::DebateConfig& base,
                                               std::span<const eval::TaskInstance> tasks,
                                               int jobs) {
  spec.validate();
  if (base.debaters.size() < 2) {
    throw ConfigError("sweep: base debate config needs at least two debaters");
  }
  if (spec.objective_debater >= static_cast<int>(base.debaters.size())) {
    throw ConfigError("sweep: objective debater index out of range");
  }

  std::vector<SurfacePoint> points;
  const PointEvaluator evaluate = [&](double t1, double t2) -> std::optional<double> {
    SurfacePoint point;
    point.t1 = t1;
    point.t2 = t2;
    point.n_tasks = static_cast<int>(tasks.size());
    try {
      // Only the two leading temperatures vary; everything else in the
      // debate config stays fixed.
      debate::DebateConfig config = base;
      config.debaters[0].temperature = t1;
      config.debaters[1].temperature = t2;
      const eval::EvalReport report = eval::evaluate_debate(config, tasks, jobs);
      double accuracy = report.accuracy;
      if (spec.objective_debater >= 0) {
        accuracy = report.per_debater_accuracy[static_cast<std::size_t>(spec.objective_debater)];
      }
      point.accuracy = accuracy;
      points.push_back(point);
      return accuracy;
    } catch (const Error& e) {
      point.failed = true;
      point.error = e.what();
      points.push_back(point);
      return std::nullopt;
    }
  };
  optimizer.optimize(evaluate);
  return points;
}

std::vector<SurfacePoint> sweep(const SweepSpec& spec, const debate::DebateConfig& base,
                                std::span<const eval::TaskInstance> tasks, int jobs) {
  spec.validate();
  if (spec.optimizer == OptimizerKind::grid) {
    GridOptimizer optimizer(spec.grid1, spec.grid2);
    return sweep_with_optimizer(optimizer, spec, base, tasks, jobs);
  }
  RandomSearchOptimizer optimizer(spec.grid1, spec.grid2, spec.random_trials, spec.seed);
  return sweep_with_optimizer(optimizer, spec, base, tasks, jobs);
}

SurfacePoint best_pair(std::span<const SurfacePoint> points) {
  const SurfacePoint* best = nullptr;
  for (const auto& p : points) {
    if (p.failed) continue;
    if (best == nullptr || p.accuracy > best->accuracy ||
        (p.accuracy == best->accuracy &&
         (p.t1 < best->t1 || (p.t1 == best->t1 && p.t2 < best->t2)))) {
      best = &p;
    }
  }
  if (best == nullptr) throw ConfigError("best_pair: every sweep cell failed");
  return *best;
}

std::string surface_csv(std::span<const SurfacePoint> points) {
  std::ostringstream out;
  out << "t1,t2,accuracy,n_tasks,failed\n";
  for (const auto& p : points) {
    out << format_double(p.t1) << "," << format_double(p.t2) << ",";
    if (!p.failed) out << format_double(p.accuracy);
    out << "," << p.n_tasks << "," << (p.failed ? 1 : 0) << "\n";
  }
  return out.str();
}

std::vector<SurfacePoint> parse_surface_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  // Leading '#' lines carry provenance comments (config digest).
  do {
    if (!std::getline(in, line)) throw FormatError("surface csv: empty");
  } while (!line.empty() && line[0] == '#');
  std::vector<SurfacePoint> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    SurfacePoint p;
    std::getline(row, field, ',');
    p.t1 = std::stod(field);
    std::getline(row, field, ',');
    p.t2 = std::stod(field);
    std::getline(row, field, ',');
    if (field.empty()) {
      p.failed = true;
    } else {
      p.accuracy = std::stod(field);
    }
    std::getline(row, field, ',');
    p.n_tasks = std::stoi(field);
    std::getline(row, field, ',');
    p.failed = field == "1" || p.failed;
    points.push_back(p);
  }
  return points;
}

}  // namespace cipher::tuning
