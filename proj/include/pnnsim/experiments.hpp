#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pnnsim/scenario.hpp"

namespace pnnsim {

/// Long-format numeric table written as TSV plus a JSON sidecar with the
/// scenario and run provenance. Cells are formatted with shortest-round-trip
/// notation, so a table is byte-identical across runs of the same build and
/// seed; no wall-clock data goes into the files.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::map<std::string, std::string> meta;

    void append(std::vector<double> row);
    std::string to_tsv() const;
    /// Writes <name>.tsv and <name>.meta.json under dir (created if absent).
    void write(const std::filesystem::path& dir, const std::string& name) const;
};

std::string format_double(double v);  // shortest round-trip, used for all outputs

struct TrainArtifacts {
    TrainingRun run;
    PnnWeights weights;        // normalized (channel-1 phase = 0)
    Pipeline::Eval eval;       // at the scenario working point, with BER
    std::uint64_t scenario_hash = 0;
};

/// Runs the scenario's training strategy (or `strategy` if given) and, when
/// out_dir is non-empty, writes weights.json, training.json and
/// convergence.tsv. adam_from_btb derives its warm start by training the
/// same scenario at zero fiber length first.
TrainArtifacts train_scenario(const Scenario& sc, std::optional<Strategy> strategy = {},
                              const std::filesystem::path& out_dir = {});

struct BerCell {
    int curve = 0;
    double prx_dbm = 0.0;
    double ber = 0.0, ber_lo = 0.0, ber_hi = 0.0;  // 68% counting interval
    std::uint64_t errors = 0, bits = 0;
    double floor_frac = 0.0;  // fraction of repeats that counted zero errors
    double loss_mean = 0.0, loss_std = 0.0;
};

struct BerScan {
    std::vector<std::string> curve_names;
    std::vector<BerCell> cells;
    ResultTable table;
};

/// Received-power sweep over scenario.prx_grid_dbm for the unequalized link,
/// the analytic quadratic-phase profile, and the trained device.
BerScan ber_scan(const Scenario& sc, int repeats, const std::filesystem::path& out_dir = {});

struct PenaltyCurve {
    std::vector<double> freq_hz;
    std::vector<double> analytic_db, btb_db, fiber_db, pnn_fiber_db, pnn_db;
    ResultTable table;
};

/// Small-signal intensity penalty vs modulation frequency (50 MHz grid up to
/// 1.5x baud) for the bare fiber, the compensated link and the device alone;
/// device weights are the analytic profile.
PenaltyCurve penalty_sweep(const Scenario& sc, const std::filesystem::path& out_dir = {});

struct FreqSweep {
    std::vector<double> offset_hz;
    std::vector<double> loss_mean, loss_std;
    std::vector<double> autocorr;  // by lag step (offset grid spacing)
    double peak_lag_hz = 0.0;      // autocorrelation peak in the searched band
    double autocorr_at(double lag_hz) const;
    ResultTable table, autocorr_table;
};

/// Trains at zero detuning, then sweeps the laser offset over
/// [-span, +span] and measures the loss distribution per offset.
/// The loss-vs-offset autocorrelation exposes the device free spectral range.
FreqSweep frequency_sweep(const Scenario& sc, const std::filesystem::path& out_dir = {},
                          int n_seeds = 20, double span_hz = 90e9, double step_hz = 1e9);

struct HeatmapCell {
    int channels = 0;
    double delay_unit_s = 0.0;
    double span_s = 0.0;       // channels * delay_unit
    int required = 0;          // required_taps for this delay unit
    bool satisfies = false;    // channels >= required
    double loss_mean = 0.0, loss_std = 0.0;
};

struct Heatmap {
    std::vector<int> channels_grid;
    std::vector<double> delay_grid_s;
    std::vector<HeatmapCell> cells;  // row-major: channels outer, delay inner
    ResultTable table;
};

/// Trains a lossless phase-only device per (channel count, delay unit) cell
/// with the scenario's swarm settings at fixed received power.
Heatmap heatmap_scan(const Scenario& sc, const std::filesystem::path& out_dir = {},
                     std::vector<int> channels_grid = {2, 4, 8, 16},
                     std::vector<double> delay_grid_s = {2.5e-12, 5e-12, 10e-12, 20e-12});

struct IdealCompare {
    BerScan scan;                    // curves: unequalized, trained, ideal same layout, ideal dense
    std::vector<double> l2_at_top;   // normalized loss per curve at the last grid point
};

/// Trained device vs the analytic profile on the same layout vs an
/// (effectively ideal) dense lossless line covering the full dispersion
/// window, all against the unequalized link. Eye data at the top power point
/// is written per curve.
IdealCompare ideal_compare(const Scenario& sc, int repeats,
                           const std::filesystem::path& out_dir = {});

/// Deterministic end-to-end checks writing selftest.tsv; the file is
/// byte-stable for a given build, which the acceptance suite verifies by
/// running the CLI twice. Returns false if any check fails.
bool selftest(const std::filesystem::path& out_dir, std::uint64_t seed);

}  // namespace pnnsim
