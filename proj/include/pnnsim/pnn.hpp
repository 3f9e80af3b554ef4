#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pnnsim/types.hpp"

namespace pnnsim {

/// Static geometry of the tapped delay line: N channels, nominal delay
/// (i-1)*delay_unit_s on channel i, fixed per-channel insertion loss in dB
/// (<= 0; 0 dB = lossless). group_index documents the spiral group index the
/// delays derive from; delays_s are authoritative.
struct PnnLayout {
    int n_channels = 0;
    double delay_unit_s = 0.0;
    std::vector<double> delays_s;
    std::vector<double> channel_loss_db;
    double group_index = 4.237;

    static PnnLayout make(int n_channels, double delay_unit_s,
                          std::vector<double> channel_loss_db = {}, double group_index = 4.237);
    std::uint64_t hash() const;
};

/// The 8-channel device: 25 ps delay unit and its characterized channel losses.
PnnLayout default_layout8();

/// Per-channel complex weight, amplitude in [0, 1] and phase in rad.
/// Phase of channel 1 is the reference (0) for trained weight sets; analytic
/// phase profiles may carry any global offset (the response is invariant).
struct PnnWeights {
    std::vector<double> amplitude;
    std::vector<double> phase_rad;
};

PnnWeights unit_weights(int n_channels);

/// Phases wrapped to (-pi, pi] and offset so channel 1 reads 0.
PnnWeights normalized(const PnnWeights& w);

/// y(t) = (1/N) sum_i k_i a_i e^{j phi_i} e^{j 2 pi f_off tau_i} x(t - tau_i),
/// delays applied circularly in the frequency domain (fractional delays exact
/// on the periodic grid). 1/N is the split/combine normalization of the
/// y-branch trees. Requires max delay < envelope duration.
ComplexEnvelope apply_pnn(const ComplexEnvelope& env, const PnnLayout& layout,
                          const PnnWeights& w);

/// H(omega) = (1/N) sum_i k_i a_i e^{j phi_i} e^{j (omega + 2 pi f_off) tau_i};
/// apply_pnn is filtering by this response (analysis convention e^{+j omega t}).
/// |H| is periodic in omega with period 2 pi / delay_unit when the delays are
/// exact multiples of the unit.
std::vector<cplx> pnn_frequency_response(const PnnLayout& layout, const PnnWeights& w,
                                         std::span<const double> omega_rad_s,
                                         double carrier_offset_hz);

/// Quadratic phase profile inverting a group-velocity dispersion of
/// beta2_l_s2 = beta2 * L (s^2): phi_i = ((i - N/2) dt)^2 / (2 beta2 L),
/// i = 1..N. Flat amplitudes are assumed. Throws if beta2_l_s2 == 0.
std::vector<double> ideal_phases(const PnnLayout& layout, double beta2_l_s2);

/// Tap count needed to cover one symbol plus the dispersion-broadened window:
/// N_T = int((1/bit_rate + |beta2_l * delta_omega|) / delay_unit).
/// delta_omega_rad_s <= 0 selects the default signal bandwidth 2 pi * bit_rate.
int required_taps(double bit_rate_hz, double beta2_l_s2, double delay_unit_s,
                  double delta_omega_rad_s = 0.0);

/// One entry per physical heater, ordered [phase heaters ch2..chN, MZI heaters
/// ch1..chN] (2N-1 total; channel 1 carries no phase heater).
struct HeaterCalibration {
    std::vector<double> alpha_rad_per_ma2;
    std::vector<double> beta_rad;
    double max_current_ma = 50.0;

    static HeaterCalibration uniform(int n_channels, double alpha = 0.05, double beta = 0.0);
};

/// Current -> weight transduction: phase heaters phi = alpha I^2 + beta,
/// MZI heaters a = sin^2((alpha I^2 + beta)/2). Currents outside
/// [0, max_current_ma] are clamped; *clamped is set when that happens.
PnnWeights currents_to_weights(std::span<const double> currents_ma,
                               const HeaterCalibration& calib, const PnnLayout& layout,
                               bool* clamped = nullptr);

/// Each channel delay is recomposed from binary spiral units (delay_unit * 2^b)
/// with an independent relative error uniform in [-rel_err, rel_err] per unit
/// instance. Channel 1 keeps exactly zero delay. Deterministic in seed.
PnnLayout perturb_delays(const PnnLayout& layout, double rel_err, std::uint64_t seed);

}  // namespace pnnsim
