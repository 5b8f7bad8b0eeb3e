#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "aaa/image.hpp"

namespace aaa {

using Rng = std::mt19937_64;

enum class Strategy { Rand1, CurrentToBest };
enum class Direction { Maximize, Minimize };

struct DEConfig {
  int np = 40;
  double f = 0.5;
  double cr = 0.9;
  double eta = 50.0;              // max initial offset per element, intensity units
  int max_generations = 200;      // 0 evaluates the initial population only
  std::optional<double> target_fitness;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::Rand1;
  Direction direction = Direction::Maximize;
  double epsilon = 25.0;          // mean-abs perturbation budget
  bool force_one_dimension = false;  // conventional j_rand crossover
  int jobs = 1;                   // concurrent fitness evaluations

  void validate() const;
};

struct Individual {
  ImageTensor genome;
  std::optional<double> fitness;
  std::optional<std::string> output_text;

  bool evaluated() const { return fitness.has_value() && output_text.has_value(); }
};

using Population = std::vector<Individual>;

struct Evaluation {
  double fitness = 0.0;
  std::string text;
};

/// Maps a genome to (fitness, oracle output). Must be callable concurrently
/// when DEConfig::jobs > 1.
using FitnessFn = std::function<Evaluation(const ImageTensor&)>;
using Initializer = std::function<Population(const ImageTensor& clean, const DEConfig&, Rng&)>;

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  std::uint64_t queries = 0;
};

struct RunTrace {
  std::vector<GenerationRecord> records;
  Individual best;
  Population final_population;
  bool reached_target = false;

  int generations() const { return records.empty() ? 0 : records.back().generation; }
  std::uint64_t queries() const { return records.empty() ? 0 : records.back().queries; }
};

/// Optional hooks into the generation loop.
struct RunHooks {
  /// Called after generation 0 evaluation and after each selection step.
  std::function<void(int generation, const Population&)> on_generation;
  /// Stops the run when any individual satisfies it (checked like target_fitness).
  std::function<bool(const Individual&)> stop_when;
  /// Applied to each trial vector before budget projection.
  std::function<void(Eigen::ArrayXd& trial)> constrain_trial;
};

/// A fitness or oracle failure mid-run; carries everything recorded so far.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, RunTrace partial, std::exception_ptr cause = nullptr)
      : std::runtime_error(what), partial_(std::move(partial)), cause_(std::move(cause)) {}
  const RunTrace& partial_trace() const { return partial_; }
  /// The exception thrown by the fitness function, if any.
  std::exception_ptr cause() const { return cause_; }

 private:
  RunTrace partial_;
  std::exception_ptr cause_;
};

// --- Element-wise DE expressions -----------------------------------------

/// x_r1 + F (x_r2 - x_r3)
template <typename D1, typename D2, typename D3>
auto rand1_mutant(const Eigen::ArrayBase<D1>& x_r1, const Eigen::ArrayBase<D2>& x_r2,
                  const Eigen::ArrayBase<D3>& x_r3, typename D1::Scalar f) {
  return x_r1 + f * (x_r2 - x_r3);
}

/// x_j + F (x_r1 - x_r2) + F (x_best - x_j)
template <typename D1, typename D2, typename D3, typename D4>
auto current_to_best_mutant(const Eigen::ArrayBase<D1>& x_j, const Eigen::ArrayBase<D2>& x_r1,
                            const Eigen::ArrayBase<D3>& x_r2, const Eigen::ArrayBase<D4>& x_best,
                            typename D1::Scalar f) {
  return x_j + f * (x_r1 - x_r2) + f * (x_best - x_j);
}

// --- Operators ------------------------------------------------------------

/// clean + U(-1, 1) * eta per element, then projected onto the budget.
Population init_uniform(const ImageTensor& clean, const DEConfig& config, Rng& rng);

/// clean + U(-A, A) * eta per element, with A replicated over the channels.
/// Elements with A = 0 stay exactly at clean.
Population init_masked(const ImageTensor& clean, const AttentionHeatmap& heatmap, const DEConfig& config,
                       Rng& rng);

/// Draws `count` distinct indices from [0, np) excluding `exclude`.
std::vector<int> draw_distinct(int np, int exclude, int count, Rng& rng);

Eigen::ArrayXd mutate_rand1(const Population& population, int j, const DEConfig& config, Rng& rng);
Eigen::ArrayXd mutate_current_to_best(const Population& population, int j, const Individual& best,
                                      const DEConfig& config, Rng& rng);

/// Takes the mutant element where U(0,1) <= CR, the parent element otherwise.
Eigen::ArrayXd crossover_binomial(const Eigen::ArrayXd& parent, const Eigen::ArrayXd& mutant,
                                  const DEConfig& config, Rng& rng);

/// Greedy one-to-one selection; the trial wins ties.
const Individual& select(const Individual& parent, const Individual& trial, Direction direction);

/// Strictly better in the configured direction.
bool better(double a, double b, Direction direction);

/// Index of the best evaluated individual (first on ties).
int best_index(const Population& population, Direction direction);

/// The generation loop: init, then mutate, crossover, project, evaluate and
/// select until max_generations, the target fitness, or hooks.stop_when.
/// Every genome handed to `fitness` lies within the epsilon budget.
RunTrace run(const ImageTensor& clean, const Initializer& init, const FitnessFn& fitness,
             const DEConfig& config, const RunHooks& hooks = {});

}  // namespace aaa
