#include "pnnsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pnnsim/waveform.hpp"

namespace pnnsim {

std::vector<double> subsample(const ElectricalTrace& trace, int k) {
    if (trace.sps < 1 || trace.size() % std::size_t(trace.sps) != 0)
        throw std::invalid_argument("subsample: trace length must be a whole number of symbols");
    if (k < 0 || k >= trace.sps) throw std::invalid_argument("subsample: k out of the symbol slot");
    std::vector<double> y(trace.size() / std::size_t(trace.sps));
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = trace.s[i * std::size_t(trace.sps) + std::size_t(k)];
    return y;
}

LevelStats level_stats(const ElectricalTrace& trace, const SymbolSequence& target, int k,
                       TailRule rule) {
    const auto y = subsample(trace, k);
    if (y.size() != target.sym.size())
        throw std::invalid_argument("level_stats: target length must match the symbol count");

    LevelStats st;
    st.k = k;
    st.rule = rule;
    st.level.resize(std::size_t(target.n_levels));

    std::vector<std::vector<double>> groups(std::size_t(target.n_levels));
    for (std::size_t i = 0; i < y.size(); ++i) {
        const int v = target.sym[i];
        if (v < 0 || v >= target.n_levels) throw std::invalid_argument("level_stats: symbol out of range");
        groups[std::size_t(v)].push_back(y[i]);
    }

    for (int lv = 0; lv < target.n_levels; ++lv) {
        auto& g = groups[std::size_t(lv)];
        if (g.empty())
            throw std::invalid_argument("level_stats: level " + std::to_string(lv) +
                                        " has no samples in the target");
        auto& out = st.level[std::size_t(lv)];
        out.n = g.size();
        double mu = 0.0;
        for (double v : g) mu += v;
        mu /= double(g.size());
        double var = 0.0;
        for (double v : g) var += (v - mu) * (v - mu);
        var /= double(g.size());
        out.mean = mu;
        out.sigma = std::sqrt(var);
        if (rule == TailRule::sigma) {
            out.e_l = std::abs(mu - 1.28 * out.sigma);
            out.e_r = std::abs(mu + 1.28 * out.sigma);
        } else {
            const std::size_t nt = std::max<std::size_t>(1, g.size() / 10);
            std::sort(g.begin(), g.end());
            double lo = 0.0, hi = 0.0;
            for (std::size_t i = 0; i < nt; ++i) {
                lo += g[i];
                hi += g[g.size() - 1 - i];
            }
            out.e_l = std::abs(lo / double(nt));
            out.e_r = std::abs(hi / double(nt));
        }
    }
    return st;
}

double loss_l1(const LevelStats& stats) {
    if (stats.level.size() < 2) throw std::invalid_argument("loss_l1: needs at least two levels");
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n + 1 < stats.level.size(); ++n)
        worst = std::max(worst, stats.level[n].e_r - stats.level[n + 1].e_l);
    return worst;
}

double loss_l2(const ElectricalTrace& trace, const SymbolSequence& target, int k, TailRule rule) {
    if (k + 1 >= trace.sps)
        throw std::invalid_argument("loss_l2: k+1 must stay inside the symbol slot");
    return loss_l1(level_stats(trace, target, k, rule)) +
           loss_l1(level_stats(trace, target, k + 1, rule));
}

std::vector<double> decision_thresholds(const LevelStats& stats) {
    if (stats.level.size() < 2) throw std::invalid_argument("decision_thresholds: needs two levels");
    std::vector<double> t(stats.level.size() - 1);
    for (std::size_t n = 0; n + 1 < stats.level.size(); ++n)
        t[n] = 0.5 * (stats.level[n].e_r + stats.level[n + 1].e_l);
    return t;
}

BerResult measure_ber(const ElectricalTrace& trace, const SymbolSequence& target,
                      const LevelStats& stats, BitMap map) {
    const auto y = subsample(trace, stats.k);
    if (y.size() != target.sym.size())
        throw std::invalid_argument("measure_ber: target length must match the symbol count");
    const auto thr = decision_thresholds(stats);

    SymbolSequence decided;
    decided.n_levels = target.n_levels;
    decided.sym.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        int v = 0;
        for (double t : thr) v += (y[i] > t) ? 1 : 0;
        decided.sym[i] = v;
    }

    const auto got = symbols_to_bits(decided, map);
    const auto want = symbols_to_bits(target, map);
    BerResult res;
    res.bits = got.size();
    for (std::size_t i = 0; i < got.size(); ++i) res.errors += (got[i] != want[i]) ? 1u : 0u;
    if (res.errors == 0) {
        res.at_floor = true;
        res.ber = 1.0 / double(res.bits);  // "< 1/bits" sentinel
    } else {
        res.ber = double(res.errors) / double(res.bits);
    }
    return res;
}

std::vector<std::vector<double>> eye_diagram(const ElectricalTrace& trace) {
    if (trace.sps < 1 || trace.size() % std::size_t(trace.sps) != 0)
        throw std::invalid_argument("eye_diagram: trace length must be a whole number of symbols");
    const std::size_t n_sym = trace.n_symbols();
    const std::size_t n = trace.size();
    std::vector<std::vector<double>> rows(n_sym);
    for (std::size_t r = 0; r < n_sym; ++r) {
        auto& row = rows[r];
        row.resize(std::size_t(trace.sps) + 2);
        const std::ptrdiff_t base = std::ptrdiff_t(r) * trace.sps - 1;
        for (std::size_t c = 0; c < row.size(); ++c)
            row[c] = trace.s[std::size_t((base + std::ptrdiff_t(c) + std::ptrdiff_t(n)) % std::ptrdiff_t(n))];
    }
    return rows;
}

}  // namespace pnnsim
