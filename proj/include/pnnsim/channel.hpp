#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pnnsim/pnn.hpp"
#include "pnnsim/types.hpp"

namespace pnnsim {

/// Dispersive fiber span: group-velocity dispersion beta2 (ps^2/m, anomalous
/// is negative) and flat attenuation. Higher-order dispersion, nonlinearity
/// and the constant phase/delay terms are out of model.
struct FiberSpec {
    double length_m = 0.0;
    double beta2_ps2_per_m = -0.021;
    double atten_db_per_km = 0.2;

    double beta2_l_s2() const { return beta2_ps2_per_m * 1e-24 * length_m; }
    double atten_linear() const {  // field factor
        return std::pow(10.0, -atten_db_per_km * (length_m / 1000.0) / 20.0);
    }
};

/// H(omega) = A exp(j beta2 L omega^2 / 2), A the flat field attenuation.
/// Even in omega, so the same mask applies on either Fourier convention.
std::vector<cplx> fiber_transfer(std::span<const double> omega_rad_s, const FiberSpec& fiber);

/// Periodic (circular) propagation of the envelope through the span.
/// Rejects non-finite samples.
ComplexEnvelope propagate(const ComplexEnvelope& env, const FiberSpec& fiber);

struct NoiseSpec {
    enum class Mode { optical_awgn, electrical_awgn };
    Mode mode = Mode::optical_awgn;
    double osnr_db = 44.0;        // optical mode: OSNR in the reference bandwidth
    double ref_bw_hz = 12.5e9;    // 0.1 nm at 1550 nm
    double snr_db = 30.0;         // electrical mode: trace power / noise power
};

/// Complex white Gaussian noise across the simulation band, variance set so
/// the measured OSNR of this envelope in ref_bw_hz equals osnr_db.
/// Single injection point: receiver input. Deterministic in seed.
ComplexEnvelope add_noise(const ComplexEnvelope& env, const NoiseSpec& noise, std::uint64_t seed);

/// Same injection with an explicitly fixed total noise power (mW across the
/// whole band); used by power sweeps that scale signal against a fixed floor.
ComplexEnvelope add_noise_power(const ComplexEnvelope& env, double noise_power_mw,
                                std::uint64_t seed);

/// Real additive Gaussian noise on a detected trace at the given SNR (dB).
ElectricalTrace add_electrical_noise(const ElectricalTrace& trace, double snr_db,
                                     std::uint64_t seed);

/// Penalty sentinel used where the analytic formula diverges at a notch.
inline constexpr double kPenaltyCapDb = 300.0;

/// Small-signal intensity-modulation penalty of the bare dispersive fiber:
/// P = -20 log10 |cos(beta2 L omega_bar^2 / 2)| (dB), capped at the sentinel.
double cd_penalty_analytic_db(const FiberSpec& fiber, double omega_bar_rad_s);

/// Angular frequency of the first notch, sqrt(pi / |beta2 L|).
double cd_first_notch_rad_s(const FiberSpec& fiber);

/// A pre-compensating tapped delay line followed by a fiber span; either
/// stage may be absent (both absent = back-to-back).
struct LinkSpec {
    struct PnnStage {
        PnnLayout layout;
        PnnWeights weights;
    };
    std::optional<PnnStage> pnn;
    std::optional<FiberSpec> fiber;
    double carrier_offset_hz = 0.0;
};

struct PenaltyProbeConfig {
    std::size_t n_samples = 4096;
    double rate_hz = 204.8e9;  // 50 MHz bin spacing at the default size
    double depth = 0.05;       // modulation amplitude b relative to bias a
};

/// Measured small-signal penalty: probe a + b cos(omega_bar t) through the
/// link, detect |.|^2 at both ends, and compare modulation indices (the
/// omega_bar Fourier component over the DC component), which cancels flat
/// loss and any common receiver response. omega_bar must fall on a bin of
/// the probe grid.
double cd_penalty_measured_db(const LinkSpec& link, double omega_bar_rad_s,
                              const PenaltyProbeConfig& cfg = {});

}  // namespace pnnsim
