#pragma once

#include <cstdint>
#include <vector>

#include "pnnsim/types.hpp"

namespace pnnsim {

/// One value per symbol: sample k of each symbol slot (0 <= k < sps).
std::vector<double> subsample(const ElectricalTrace& trace, int k);

/// Tail estimator for the level edges: `decile` averages the extreme 10%
/// (at least one sample); `sigma` uses mean -/+ 1.28 sigma, the Gaussian
/// equivalent of the extreme deciles.
enum class TailRule { decile, sigma };

struct LevelStats {
    struct PerLevel {
        std::size_t n = 0;
        double mean = 0.0;
        double sigma = 0.0;  // population
        double e_l = 0.0;    // |mean of the left tail|
        double e_r = 0.0;    // |mean of the right tail|
    };
    int k = 0;
    TailRule rule = TailRule::decile;
    std::vector<PerLevel> level;  // indexed by symbol value
};

/// Groups the k-th sample of every symbol slot by the aligned target symbol.
/// Throws (naming the level) if a level has no samples.
LevelStats level_stats(const ElectricalTrace& trace, const SymbolSequence& target, int k,
                       TailRule rule = TailRule::decile);

/// L1 = max_n (E_R[n] - E_L[n+1]); negative iff every adjacent pair of level
/// distributions is separated at this sampling point.
double loss_l1(const LevelStats& stats);

/// L1(k) + L1(k+1): separation held across two adjacent sampling points,
/// which is what widens the eye horizontally.
double loss_l2(const ElectricalTrace& trace, const SymbolSequence& target, int k,
               TailRule rule = TailRule::decile);

/// Midpoints T[n] = (E_R[n] + E_L[n+1]) / 2; strictly increasing when L1 < 0.
std::vector<double> decision_thresholds(const LevelStats& stats);

struct BerResult {
    double ber = 0.0;
    std::uint64_t errors = 0;
    std::uint64_t bits = 0;
    bool at_floor = false;  // zero errors: ber reports the 1/bits floor
};

/// Digitize the k-th samples by the thresholds, demap to bits, count Hamming
/// errors against the target bit stream.
BerResult measure_ber(const ElectricalTrace& trace, const SymbolSequence& target,
                      const LevelStats& stats, BitMap map);

/// Trace folded modulo the symbol period: one row per symbol, sps + 2 columns
/// (one circular margin sample on each side).
std::vector<std::vector<double>> eye_diagram(const ElectricalTrace& trace);

}  // namespace pnnsim
