#include "aaa/de.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace aaa {

namespace {

constexpr double kBudgetSlack = 1e-9;

void require_population(const Population& population, int min_size, const char* who) {
  if (static_cast<int>(population.size()) < min_size)
    throw std::invalid_argument(std::string(who) + ": population of " + std::to_string(population.size()) +
                                " is smaller than " + std::to_string(min_size));
}

Population perturbed_population(const ImageTensor& clean, const Eigen::ArrayXd& scale, const DEConfig& config,
                                Rng& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Population population;
  population.reserve(std::size_t(config.np));
  for (int j = 0; j < config.np; ++j) {
    Eigen::ArrayXd genome = clean.data();
    for (Eigen::Index i = 0; i < genome.size(); ++i) genome[i] += unit(rng) * scale[i];
    population.push_back({project_to_budget(genome, clean, config.epsilon), {}, {}});
  }
  return population;
}

// Evaluates every unevaluated individual, at most `jobs` at a time. After a
// failure no new evaluations start; the first failure (lowest index) is
// rethrown once all workers stop.
std::uint64_t evaluate_all(Population& population, const ImageTensor& clean, const FitnessFn& fitness,
                           const DEConfig& config) {
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < population.size(); ++i)
    if (!population[i].evaluated()) pending.push_back(i);

  std::vector<std::exception_ptr> errors(pending.size());
  std::atomic<bool> failed{false};
  auto evaluate_one = [&](std::size_t k) {
    if (failed.load()) return;
    Individual& ind = population[pending[k]];
    try {
      const double mean_abs = perturbation_stats(ind.genome, clean).mean_abs;
      if (mean_abs > config.epsilon + kBudgetSlack)
        throw std::logic_error("genome outside perturbation budget: mean_abs " + std::to_string(mean_abs));
      Evaluation e = fitness(ind.genome);
      ind.fitness = e.fitness;
      ind.output_text = std::move(e.text);
    } catch (...) {
      errors[k] = std::current_exception();
      failed = true;
    }
  };

  const int workers = std::min<int>(std::max(1, config.jobs), static_cast<int>(pending.size()));
  if (workers <= 1) {
    for (std::size_t k = 0; k < pending.size(); ++k) evaluate_one(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k; (k = next.fetch_add(1)) < pending.size();) evaluate_one(k);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return pending.size();
}

GenerationRecord summarize(const Population& population, int generation, std::uint64_t queries,
                           Direction direction) {
  GenerationRecord rec;
  rec.generation = generation;
  rec.queries = queries;
  rec.best_fitness = *population[std::size_t(best_index(population, direction))].fitness;
  double sum = 0;
  for (const auto& ind : population) sum += *ind.fitness;
  rec.mean_fitness = sum / double(population.size());
  return rec;
}

bool should_stop(const Population& population, const DEConfig& config, const RunHooks& hooks) {
  if (config.target_fitness) {
    const double best = *population[std::size_t(best_index(population, config.direction))].fitness;
    const double target = *config.target_fitness;
    if (config.direction == Direction::Maximize ? best >= target : best <= target) return true;
  }
  if (hooks.stop_when)
    return std::any_of(population.begin(), population.end(), hooks.stop_when);
  return false;
}

}  // namespace

void DEConfig::validate() const {
  if (np < 4) throw std::invalid_argument("DEConfig: np must be >= 4");
  if (!(f > 0)) throw std::invalid_argument("DEConfig: f must be > 0");
  if (!(cr >= 0 && cr <= 1)) throw std::invalid_argument("DEConfig: cr must be within [0, 1]");
  if (!(eta > 0)) throw std::invalid_argument("DEConfig: eta must be > 0");
  if (!(epsilon > 0)) throw std::invalid_argument("DEConfig: epsilon must be > 0");
  if (max_generations < 0) throw std::invalid_argument("DEConfig: max_generations must be >= 0");
  if (jobs < 1) throw std::invalid_argument("DEConfig: jobs must be >= 1");
}

Population init_uniform(const ImageTensor& clean, const DEConfig& config, Rng& rng) {
  return perturbed_population(clean, Eigen::ArrayXd::Constant(clean.size(), config.eta), config, rng);
}

Population init_masked(const ImageTensor& clean, const AttentionHeatmap& heatmap, const DEConfig& config,
                       Rng& rng) {
  if (heatmap.width() != clean.width() || heatmap.height() != clean.height())
    throw DimensionError("init_masked: heatmap " + std::to_string(heatmap.width()) + "x" +
                         std::to_string(heatmap.height()) + " does not match image " +
                         std::to_string(clean.width()) + "x" + std::to_string(clean.height()));
  return perturbed_population(clean, per_element_mask(heatmap) * config.eta, config, rng);
}

std::vector<int> draw_distinct(int np, int exclude, int count, Rng& rng) {
  if (np - (exclude >= 0 && exclude < np ? 1 : 0) < count)
    throw std::invalid_argument("draw_distinct: not enough individuals");
  std::uniform_int_distribution<int> pick(0, np - 1);
  std::vector<int> out;
  while (static_cast<int>(out.size()) < count) {
    const int r = pick(rng);
    if (r != exclude && std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
  return out;
}

Eigen::ArrayXd mutate_rand1(const Population& population, int j, const DEConfig& config, Rng& rng) {
  require_population(population, 4, "mutate_rand1");
  const auto r = draw_distinct(static_cast<int>(population.size()), j, 3, rng);
  return rand1_mutant(population[std::size_t(r[0])].genome.data(), population[std::size_t(r[1])].genome.data(),
                      population[std::size_t(r[2])].genome.data(), config.f);
}

Eigen::ArrayXd mutate_current_to_best(const Population& population, int j, const Individual& best,
                                      const DEConfig& config, Rng& rng) {
  require_population(population, 3, "mutate_current_to_best");
  const auto r = draw_distinct(static_cast<int>(population.size()), j, 2, rng);
  return current_to_best_mutant(population[std::size_t(j)].genome.data(),
                                population[std::size_t(r[0])].genome.data(),
                                population[std::size_t(r[1])].genome.data(), best.genome.data(), config.f);
}

Eigen::ArrayXd crossover_binomial(const Eigen::ArrayXd& parent, const Eigen::ArrayXd& mutant,
                                  const DEConfig& config, Rng& rng) {
  if (parent.size() != mutant.size()) throw DimensionError("crossover_binomial: size mismatch");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::ArrayXd trial(parent.size());
  for (Eigen::Index i = 0; i < parent.size(); ++i) trial[i] = unit(rng) <= config.cr ? mutant[i] : parent[i];
  if (config.force_one_dimension && parent.size() > 0) {
    std::uniform_int_distribution<Eigen::Index> pick(0, parent.size() - 1);
    const Eigen::Index i = pick(rng);
    trial[i] = mutant[i];
  }
  return trial;
}

bool better(double a, double b, Direction direction) {
  return direction == Direction::Maximize ? a > b : a < b;
}

const Individual& select(const Individual& parent, const Individual& trial, Direction direction) {
  if (!parent.evaluated() || !trial.evaluated()) throw std::invalid_argument("select: unevaluated individual");
  return better(*parent.fitness, *trial.fitness, direction) ? parent : trial;
}

int best_index(const Population& population, Direction direction) {
  int best = -1;
  for (std::size_t i = 0; i < population.size(); ++i) {
    if (!population[i].evaluated()) throw std::invalid_argument("best_index: unevaluated individual");
    if (best < 0 || better(*population[i].fitness, *population[std::size_t(best)].fitness, direction))
      best = static_cast<int>(i);
  }
  if (best < 0) throw std::invalid_argument("best_index: empty population");
  return best;
}

RunTrace run(const ImageTensor& clean, const Initializer& init, const FitnessFn& fitness, const DEConfig& config,
             const RunHooks& hooks) {
  config.validate();
  Rng rng(config.seed);
  RunTrace trace;
  std::uint64_t queries = 0;

  Population population = init(clean, config, rng);
  if (static_cast<int>(population.size()) != config.np)
    throw std::invalid_argument("initializer returned " + std::to_string(population.size()) +
                                " individuals, expected " + std::to_string(config.np));

  auto abort = [&](const std::exception& e) {
    for (auto& ind : population)
      if (ind.evaluated() && (!trace.best.evaluated() ||
                              better(*ind.fitness, *trace.best.fitness, config.direction)))
        trace.best = ind;
    trace.final_population = population;
    return RunAborted(e.what(), trace, std::current_exception());
  };

  try {
    queries += evaluate_all(population, clean, fitness, config);
  } catch (const std::exception& e) {
    throw abort(e);
  }
  trace.records.push_back(summarize(population, 0, queries, config.direction));
  if (hooks.on_generation) hooks.on_generation(0, population);
  trace.reached_target = should_stop(population, config, hooks);

  for (int g = 1; g <= config.max_generations && !trace.reached_target; ++g) {
    const Individual& best = population[std::size_t(best_index(population, config.direction))];
    Population trials;
    trials.reserve(population.size());
    for (int j = 0; j < config.np; ++j) {
      const Eigen::ArrayXd mutant = config.strategy == Strategy::Rand1
                                        ? mutate_rand1(population, j, config, rng)
                                        : mutate_current_to_best(population, j, best, config, rng);
      Eigen::ArrayXd trial = crossover_binomial(population[std::size_t(j)].genome.data(), mutant, config, rng);
      if (hooks.constrain_trial) hooks.constrain_trial(trial);
      trials.push_back({project_to_budget(trial, clean, config.epsilon), {}, {}});
    }
    try {
      queries += evaluate_all(trials, clean, fitness, config);
    } catch (const std::exception& e) {
      throw abort(e);
    }
    for (std::size_t j = 0; j < population.size(); ++j)
      if (&select(population[j], trials[j], config.direction) == &trials[j]) population[j] = std::move(trials[j]);

    trace.records.push_back(summarize(population, g, queries, config.direction));
    if (hooks.on_generation) hooks.on_generation(g, population);
    trace.reached_target = should_stop(population, config, hooks);
  }

  trace.best = population[std::size_t(best_index(population, config.direction))];
  trace.final_population = std::move(population);
  return trace;
}

}  // namespace aaa
