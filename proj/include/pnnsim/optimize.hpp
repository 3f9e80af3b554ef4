#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pnnsim {

/// Stochastic objective: the seed selects the noise realization of one
/// measurement. Must be reentrant; evaluations may run concurrently.
using Objective = std::function<double(std::span<const double>, std::uint64_t)>;

struct Bounds {
    std::vector<double> lo, hi;
    std::size_t dim() const { return lo.size(); }
    void validate() const;
};

struct PsoConfig {
    int swarm = 30;
    int max_iter = 300;
    double inertia = 0.729;
    double c1 = 1.49445;
    double c2 = 1.49445;
    double stall_tol = 0.02;  // on the normalized loss
    int stall_iters = 15;
};

struct AdamConfig {
    double lr = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double fd_step_rel = 0.01;  // central-difference step as a fraction of each range
    int max_iter = 500;
    double stall_tol = 0.02;
    int stall_iters = 10;
};

enum class StopCause { stalled, max_iterations };

struct OptResult {
    std::vector<double> x;
    double loss = 0.0;
    std::vector<double> best_history;  // best-so-far after each iteration (index 0 = init)
    std::uint64_t evaluations = 0;
    StopCause stop = StopCause::max_iterations;
};

/// Global-best particle swarm, deterministic in seed and in evaluation order
/// (all random draws happen serially; measurement seeds are derived per
/// (iteration, particle)). Positions are clamped to the bounds.
OptResult pso_minimize(const Objective& f, const Bounds& b, const PsoConfig& cfg,
                       std::uint64_t seed);

/// Central finite differences, one common measurement seed for all probes.
std::vector<double> fd_gradient(const Objective& f, std::span<const double> x,
                                std::span<const double> h, std::uint64_t seed);

/// Adam on the finite-difference gradient with common random numbers per step.
OptResult adam_minimize(const Objective& f, std::span<const double> x0, const Bounds& b,
                        const AdamConfig& cfg, std::uint64_t seed);

enum class Strategy { adam_multistart, adam_from_btb, pso };

Strategy strategy_from_name(const std::string& name);
std::string strategy_name(Strategy s);

struct StrategyConfig {
    PsoConfig pso;
    AdamConfig adam;
    int n_starts = 20;       // adam_multistart candidate count
    int final_reevals = 20;  // measurements averaged into the reported loss
};

struct TrainingRun {
    Strategy strategy = Strategy::pso;
    std::uint64_t seed = 0;
    OptResult opt;
    double final_loss_mean = 0.0;
    double final_loss_std = 0.0;
    double wall_time_s = 0.0;
};

/// adam_multistart: best of n_starts uniform candidates, refined with Adam.
/// adam_from_btb: Adam from the supplied warm start (throws if absent).
/// pso: swarm from scratch. The reported loss is re-measured final_reevals
/// times with fresh seeds.
TrainingRun run_strategy(Strategy s, const Objective& f, const Bounds& b,
                         const StrategyConfig& cfg, std::uint64_t seed,
                         std::span<const double> warm_start = {});

}  // namespace pnnsim
