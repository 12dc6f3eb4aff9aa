#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "cipher/evaluation.hpp"

namespace cipher::tuning {

/// Scores one (T1, T2) cell: accuracy of the configured objective, or
/// nothing when the cell failed.
using PointEvaluator = std::function<std::optional<double>(double t1, double t2)>;

/// Search strategy behind the sweep. Implementations call evaluate for each
/// temperature pair they choose to visit; sequential, feedback-driven
/// optimizers fit the same interface.
class TemperatureOptimizer {
public:
  virtual ~TemperatureOptimizer() = default;
  virtual void optimize(const PointEvaluator& evaluate) = 0;
};

/// Exhaustive cartesian product in grid order (T1 outer, T2 inner).
class GridOptimizer final : public TemperatureOptimizer {
public:
  GridOptimizer(std::vector<double> grid1, std::vector<double> grid2);
  void optimize(const PointEvaluator& evaluate) override;

private:
  std::vector<double> grid1_, grid2_;
};

/// n_trials seeded uniform picks from the grid product (with replacement).
class RandomSearchOptimizer final : public TemperatureOptimizer {
public:
  RandomSearchOptimizer(std::vector<double> grid1, std::vector<double> grid2, int n_trials,
                        std::uint64_t seed);
  void optimize(const PointEvaluator& evaluate) override;

private:
  std::vector<double> grid1_, grid2_;
  int n_trials_;
  std::uint64_t seed_;
};

enum class OptimizerKind { grid, random };

/// Nine steps across (0, 2], bracketing the useful low/high pairings such
/// as (0.25, 1.75).
std::vector<double> default_temperature_grid();

struct SweepSpec {
  std::vector<double> grid1 = default_temperature_grid();
  std::vector<double> grid2 = default_temperature_grid();
  /// Final-round debater whose answer is scored; -1 scores the aggregate.
  int objective_debater = 0;
  OptimizerKind optimizer = OptimizerKind::grid;
  int random_trials = 25;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SurfacePoint {
  double t1 = 0.0;
  double t2 = 0.0;
  double accuracy = 0.0;
  int n_tasks = 0;
  bool failed = false;
  std::string error;  // per-cell failure reason when failed
};

/// Evaluates temperature pairs for the first two debaters of `base` over the
/// task set; every cell shares the base seed. Cell failures are recorded,
/// not propagated, and never abort the sweep. Grid mode is exhaustive:
/// one point per (grid1 x grid2) cell, in grid order.
std::vector<SurfacePoint> sweep(const SweepSpec& spec, const debate::DebateConfig& base,
                                std::span<const eval::TaskInstance> tasks, int jobs = 1);

/// Same sweep through a caller-supplied optimizer.
std::vector<SurfacePoint> sweep_with_optimizer(TemperatureOptimizer& optimizer,
                                               const SweepSpec& spec,
                                               const debate::DebateConfig& base,
                                               std::span<const eval::TaskInstance> tasks,
                                               int jobs = 1);

/// Maximal accuracy over successful points; ties break to the lower
/// (T1, then T2). Throws ConfigError when every cell failed.
SurfacePoint best_pair(std::span<const SurfacePoint> points);

/// CSV rows t1,t2,accuracy,n_tasks,failed (accuracy empty on failure).
std::string surface_csv(std::span<const SurfacePoint> points);
std::vector<SurfacePoint> parse_surface_csv(const std::string& csv);

}  // namespace cipher::tuning
