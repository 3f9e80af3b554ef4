#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pnnsim/channel.hpp"
#include "pnnsim/metrics.hpp"
#include "pnnsim/optimize.hpp"
#include "pnnsim/pnn.hpp"
#include "pnnsim/types.hpp"

namespace pnnsim {

enum class WeightMode { phase_only, full, currents };

/// fixed_noise_floor: the transmitter is scaled once so the all-open reference
/// configuration lands at 0 dBm after the fiber; per-configuration insertion
/// loss then moves the received power against a fixed noise floor, as in the
/// physical training loop. fixed_prx: the received envelope is rescaled to
/// prx_dbm before noise, emulating the attenuator ahead of the receiver.
enum class PowerMode { fixed_noise_floor, fixed_prx };

struct OptimizerSettings {
    Strategy strategy = Strategy::pso;
    PsoConfig pso;
    AdamConfig adam;
    int n_starts = 20;
    int final_reevals = 20;
};

/// Everything a run needs, loadable from a unit-suffixed JSON file.
struct Scenario {
    double baud_hz = 10e9;
    int n_levels = 4;
    BitMap bit_map = BitMap::gray;
    int prbs_order = 10;
    std::uint64_t prbs_seed = 1;
    std::size_t n_symbols = 1024;
    int sps_internal = 16;
    int sps_scope = 8;
    double p_peak_mw = 1.0;
    double tx_bw_hz = 20e9;
    double pd_bw_hz = 20e9;
    double scope_bw_hz = 16e9;
    FiberSpec fiber{125e3, -0.021, 0.2};
    double osnr_db = 44.0;
    double osnr_ref_bw_hz = 12.5e9;
    PowerMode power_mode = PowerMode::fixed_noise_floor;
    double prx_dbm = 0.0;
    std::vector<double> prx_grid_dbm = {-9.0, -7.5, -6.0, -4.5, -3.0, -1.5, 0.0};
    PnnLayout layout = default_layout8();
    double delay_error_rel = 0.0;
    std::uint64_t delay_error_seed = 0;
    WeightMode mode = WeightMode::phase_only;
    HeaterCalibration calib = HeaterCalibration::uniform(8);
    std::uint64_t seed = 1;
    OptimizerSettings opt;

    /// Baseline scenario with the rate-dependent defaults scaled to baud
    /// (tx/pd bandwidth 2x baud, scope bandwidth 1.6x baud).
    static Scenario with_baud(double baud_hz);

    static Scenario from_json_file(const std::string& path);
    static Scenario from_json_text(const std::string& text);
    std::string to_json_text() const;  // canonical, key-sorted
    std::uint64_t hash() const;
};

/// Scenario compiled for repeated evaluation: fixed transmit spectrum, fiber
/// mask, per-channel delay phasors, working-point scaling and noise floor.
class Pipeline {
  public:
    explicit Pipeline(Scenario sc);

    const Scenario& scenario() const { return sc_; }
    const SymbolSequence& target() const { return target_; }
    const PnnLayout& layout() const { return layout_; }  // after any delay perturbation
    double noise_floor_mw() const { return noise_total_mw_; }

    Bounds bounds() const;
    PnnWeights weights_from_params(std::span<const double> p) const;
    std::vector<double> params_from_weights(const PnnWeights& w) const;

    struct EvalOptions {
        std::optional<double> prx_dbm;  // overrides the scenario power mode point
        double carrier_offset_hz = 0.0;
        bool with_ber = false;
        bool keep_trace = false;  // retain the aligned scope trace (eye plots)
        TailRule tail = TailRule::decile;
    };

    struct Eval {
        double loss_norm = 0.0;  // L2 per unit mean level spacing; the objective
        double l2_raw_mw = 0.0;
        double rx_power_mw = 0.0;  // mean optical power entering the receiver
        bool degenerate = false;   // collapsed levels or undefined alignment
        BerResult ber;
        LevelStats stats;
        ElectricalTrace trace;  // filled only when keep_trace is set
    };

    /// weights == nullptr evaluates the unequalized link.
    Eval evaluate(const PnnWeights* weights, std::uint64_t seed, const EvalOptions& opts) const;
    Eval evaluate(const PnnWeights* weights, std::uint64_t seed) const {
        return evaluate(weights, seed, EvalOptions{});
    }

    /// The training objective: normalized L2 of one noisy measurement.
    double objective(std::span<const double> params, std::uint64_t seed) const;
    Objective objective_fn() const;

  private:
    Scenario sc_;
    PnnLayout layout_;
    SymbolSequence target_;
    std::vector<std::uint8_t> target_bits_;
    ComplexEnvelope tx_env_;      // scaled to the 0 dBm working point
    std::vector<cplx> base_fft_;  // scaled TX spectrum times fiber mask
    std::vector<std::vector<cplx>> tap_fft_;  // base_fft_ * e^{-j w tau_i} per channel (small N)
    std::vector<double> loss_lin_;
    double rate_hz_ = 0.0;
    double noise_total_mw_ = 0.0;
    double spacing_floor_mw_ = 1e-3;
};

}  // namespace pnnsim
