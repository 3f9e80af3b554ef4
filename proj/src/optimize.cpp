#include "pnnsim/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "pnnsim/parallel.hpp"
#include "pnnsim/rng.hpp"

namespace pnnsim {

void Bounds::validate() const {
    if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("Bounds: size mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] < hi[i])) throw std::invalid_argument("Bounds: lo must be < hi in every dimension");
}

namespace {

struct StallTracker {
    double tol;
    int limit;
    int count = 0;
    // Returns true when `limit` consecutive iterations improved by <= tol.
    bool update(double prev_best, double new_best) {
        if (prev_best - new_best > tol)
            count = 0;
        else
            ++count;
        return count >= limit;
    }
};

double eval_batch_min(const Objective& f, const std::vector<std::vector<double>>& xs,
                      std::vector<double>& out, std::uint64_t seed_base, std::uint64_t tag) {
    out.resize(xs.size());
    par::for_each_index(xs.size(), [&](std::size_t i) {
        out[i] = f(xs[i], mix_seed(seed_base, {tag, i}));
    });
    return *std::min_element(out.begin(), out.end());
}

}  // namespace

OptResult pso_minimize(const Objective& f, const Bounds& b, const PsoConfig& cfg,
                       std::uint64_t seed) {
    b.validate();
    if (cfg.swarm < 2 || cfg.max_iter < 1) throw std::invalid_argument("pso_minimize: bad config");
    const std::size_t dim = b.dim();
    const std::size_t m = std::size_t(cfg.swarm);
    Rng rng(mix_seed(seed, {0x9507ull}));

    std::vector<std::vector<double>> x(m, std::vector<double>(dim));
    std::vector<std::vector<double>> v(m, std::vector<double>(dim, 0.0));
    for (std::size_t p = 0; p < m; ++p)
        for (std::size_t d = 0; d < dim; ++d) x[p][d] = rng.uniform(b.lo[d], b.hi[d]);

    OptResult res;
    std::vector<double> loss(m);
    eval_batch_min(f, x, loss, seed, 0);
    res.evaluations = m;

    auto pbest = x;
    auto pbest_loss = loss;
    std::size_t g = std::size_t(std::min_element(loss.begin(), loss.end()) - loss.begin());
    std::vector<double> gbest = x[g];
    double gbest_loss = loss[g];
    res.best_history.push_back(gbest_loss);

    StallTracker stall{cfg.stall_tol, cfg.stall_iters};
    for (int it = 1; it <= cfg.max_iter; ++it) {
        // All stochastic draws stay on this serial path, so the parallel
        // evaluation schedule cannot perturb the trajectory.
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t d = 0; d < dim; ++d) {
                const double r1 = rng.uniform();
                const double r2 = rng.uniform();
                v[p][d] = cfg.inertia * v[p][d] + cfg.c1 * r1 * (pbest[p][d] - x[p][d]) +
                          cfg.c2 * r2 * (gbest[d] - x[p][d]);
                x[p][d] = std::clamp(x[p][d] + v[p][d], b.lo[d], b.hi[d]);
            }
        }
        eval_batch_min(f, x, loss, seed, std::uint64_t(it));
        res.evaluations += m;

        const double prev = gbest_loss;
        for (std::size_t p = 0; p < m; ++p) {
            if (loss[p] < pbest_loss[p]) {
                pbest_loss[p] = loss[p];
                pbest[p] = x[p];
            }
            if (loss[p] < gbest_loss) {
                gbest_loss = loss[p];
                gbest = x[p];
            }
        }
        res.best_history.push_back(gbest_loss);
        if (stall.update(prev, gbest_loss)) {
            res.stop = StopCause::stalled;
            break;
        }
    }

    res.x = std::move(gbest);
    res.loss = gbest_loss;
    return res;
}

std::vector<double> fd_gradient(const Objective& f, std::span<const double> x,
                                std::span<const double> h, std::uint64_t seed) {
    if (x.size() != h.size()) throw std::invalid_argument("fd_gradient: step size per dimension");
    std::vector<double> g(x.size());
    std::vector<std::vector<double>> probes(2 * x.size(), std::vector<double>(x.begin(), x.end()));
    for (std::size_t d = 0; d < x.size(); ++d) {
        probes[2 * d][d] += h[d];
        probes[2 * d + 1][d] -= h[d];
    }
    std::vector<double> vals(probes.size());
    par::for_each_index(probes.size(), [&](std::size_t i) {
        vals[i] = f(probes[i], seed);  // common random numbers across all probes
    });
    for (std::size_t d = 0; d < x.size(); ++d) g[d] = (vals[2 * d] - vals[2 * d + 1]) / (2.0 * h[d]);
    return g;
}

OptResult adam_minimize(const Objective& f, std::span<const double> x0, const Bounds& b,
                        const AdamConfig& cfg, std::uint64_t seed) {
    b.validate();
    const std::size_t dim = b.dim();
    if (x0.size() != dim) throw std::invalid_argument("adam_minimize: start point dimension mismatch");

    std::vector<double> x(x0.begin(), x0.end());
    for (std::size_t d = 0; d < dim; ++d) x[d] = std::clamp(x[d], b.lo[d], b.hi[d]);
    std::vector<double> h(dim);
    for (std::size_t d = 0; d < dim; ++d) h[d] = cfg.fd_step_rel * (b.hi[d] - b.lo[d]);

    OptResult res;
    std::vector<double> m(dim, 0.0), v(dim, 0.0);
    double best = f(x, mix_seed(seed, {0xadau, 0}));
    res.evaluations = 1;
    res.x = x;
    res.best_history.push_back(best);

    StallTracker stall{cfg.stall_tol, cfg.stall_iters};
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const std::uint64_t step_seed = mix_seed(seed, {0x57e9ull, std::uint64_t(it)});
        const auto g = fd_gradient(f, x, h, step_seed);
        res.evaluations += 2 * dim;
        const double b1t = 1.0 - std::pow(cfg.beta1, it);
        const double b2t = 1.0 - std::pow(cfg.beta2, it);
        for (std::size_t d = 0; d < dim; ++d) {
            m[d] = cfg.beta1 * m[d] + (1.0 - cfg.beta1) * g[d];
            v[d] = cfg.beta2 * v[d] + (1.0 - cfg.beta2) * g[d] * g[d];
            const double mh = m[d] / b1t;
            const double vh = v[d] / b2t;
            x[d] = std::clamp(x[d] - cfg.lr * mh / (std::sqrt(vh) + cfg.eps), b.lo[d], b.hi[d]);
        }
        const double loss = f(x, mix_seed(seed, {0xadau, std::uint64_t(it)}));
        res.evaluations += 1;
        const double prev = best;
        if (loss < best) {
            best = loss;
            res.x = x;
        }
        res.best_history.push_back(best);
        if (stall.update(prev, best)) {
            res.stop = StopCause::stalled;
            break;
        }
    }
    res.loss = best;
    return res;
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "adam_multistart" || name == "st1") return Strategy::adam_multistart;
    if (name == "adam_from_btb" || name == "st2") return Strategy::adam_from_btb;
    if (name == "pso" || name == "st3") return Strategy::pso;
    throw std::invalid_argument("unknown strategy: " + name);
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::adam_multistart: return "adam_multistart";
        case Strategy::adam_from_btb: return "adam_from_btb";
        case Strategy::pso: return "pso";
    }
    return "?";
}

TrainingRun run_strategy(Strategy s, const Objective& f, const Bounds& b,
                         const StrategyConfig& cfg, std::uint64_t seed,
                         std::span<const double> warm_start) {
    b.validate();
    const auto t0 = std::chrono::steady_clock::now();
    TrainingRun run;
    run.strategy = s;
    run.seed = seed;

    switch (s) {
        case Strategy::adam_multistart: {
            if (cfg.n_starts < 1) throw std::invalid_argument("run_strategy: n_starts must be >= 1");
            Rng rng(mix_seed(seed, {0x0157ull}));
            std::vector<std::vector<double>> starts(std::size_t(cfg.n_starts),
                                                    std::vector<double>(b.dim()));
            for (auto& x : starts)
                for (std::size_t d = 0; d < b.dim(); ++d) x[d] = rng.uniform(b.lo[d], b.hi[d]);
            std::vector<double> vals;
            eval_batch_min(f, starts, vals, seed, 0xbee5ull);
            const std::size_t best =
                std::size_t(std::min_element(vals.begin(), vals.end()) - vals.begin());
            run.opt = adam_minimize(f, starts[best], b, cfg.adam, seed);
            run.opt.evaluations += std::uint64_t(cfg.n_starts);
            break;
        }
        case Strategy::adam_from_btb: {
            if (warm_start.size() != b.dim())
                throw std::invalid_argument("run_strategy: adam_from_btb needs a stored warm start");
            run.opt = adam_minimize(f, warm_start, b, cfg.adam, seed);
            break;
        }
        case Strategy::pso:
            run.opt = pso_minimize(f, b, cfg.pso, seed);
            break;
    }

    // Report the loss as a fresh-measurement average, not the optimizer's
    // luckiest draw.
    const int n = std::max(1, cfg.final_reevals);
    std::vector<double> re(std::size_t(n), 0.0);
    par::for_each_index(re.size(), [&](std::size_t i) {
        re[i] = f(run.opt.x, mix_seed(seed, {0xf19a1ull, i}));
    });
    run.opt.evaluations += std::uint64_t(n);
    double mu = 0.0;
    for (double v : re) mu += v;
    mu /= double(n);
    double var = 0.0;
    for (double v : re) var += (v - mu) * (v - mu);
    run.final_loss_mean = mu;
    run.final_loss_std = n > 1 ? std::sqrt(var / double(n - 1)) : 0.0;
    run.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

}  // namespace pnnsim
