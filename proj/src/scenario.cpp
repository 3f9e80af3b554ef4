#include "pnnsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "pnnsim/detection.hpp"
#include "pnnsim/fft.hpp"
#include "pnnsim/rng.hpp"
#include "pnnsim/waveform.hpp"

namespace pnnsim {

namespace {

using njson = nlohmann::json;

// Ceiling for the normalized objective.  Degenerate evaluations (collapsed
// eye, vanishing received power) sit exactly at the cap so no non-degenerate
// configuration can score worse than a degenerate one.
constexpr double kLossCap = 1e3;

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("scenario: " + msg);
}

double as_num(const njson& v, const std::string& key) {
    if (!v.is_number()) fail("\"" + key + "\" must be a number");
    return v.get<double>();
}

std::int64_t as_int(const njson& v, const std::string& key) {
    if (!v.is_number_integer()) fail("\"" + key + "\" must be an integer");
    return v.get<std::int64_t>();
}

std::uint64_t as_u64(const njson& v, const std::string& key) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        fail("\"" + key + "\" must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string as_str(const njson& v, const std::string& key) {
    if (!v.is_string()) fail("\"" + key + "\" must be a string");
    return v.get<std::string>();
}

std::vector<double> as_num_array(const njson& v, const std::string& key) {
    if (!v.is_array()) fail("\"" + key + "\" must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) out.push_back(as_num(e, key));
    return out;
}

void parse_fiber(const njson& j, FiberSpec& f) {
    for (const auto& [key, v] : j.items()) {
        if (key == "length_km")
            f.length_m = as_num(v, key) * 1e3;
        else if (key == "beta2_ps2_per_m")
            f.beta2_ps2_per_m = as_num(v, key);
        else if (key == "attenuation_db_per_km")
            f.atten_db_per_km = as_num(v, key);
        else
            fail("unknown fiber key \"" + key + "\"");
    }
}

void parse_pnn(const njson& j, Scenario& sc) {
    int channels = sc.layout.n_channels;
    double unit_ps = sc.layout.delay_unit_s * 1e12;
    double group_index = sc.layout.group_index;
    std::vector<double> delays_ps, loss_db;
    bool custom = false;
    for (const auto& [key, v] : j.items()) {
        if (key == "channels") {
            channels = int(as_int(v, key));
            custom = true;
        } else if (key == "delay_unit_ps") {
            unit_ps = as_num(v, key);
            custom = true;
        } else if (key == "delays_ps") {
            delays_ps = as_num_array(v, key);
            custom = true;
        } else if (key == "channel_loss_db") {
            loss_db = as_num_array(v, key);
            custom = true;
        } else if (key == "group_index") {
            group_index = as_num(v, key);
            custom = true;
        } else if (key == "delay_error_rel") {
            sc.delay_error_rel = as_num(v, key);
        } else if (key == "delay_error_seed") {
            sc.delay_error_seed = as_u64(v, key);
        } else {
            fail("unknown pnn key \"" + key + "\"");
        }
    }
    if (!custom) return;
    if (channels < 1) fail("\"pnn.channels\" must be >= 1");
    if (!(unit_ps > 0)) fail("\"pnn.delay_unit_ps\" must be > 0");
    if (!loss_db.empty() && int(loss_db.size()) != channels)
        fail("\"pnn.channel_loss_db\" must have one entry per channel");
    PnnLayout l = PnnLayout::make(channels, unit_ps * 1e-12, loss_db, group_index);
    if (!delays_ps.empty()) {
        if (int(delays_ps.size()) != channels)
            fail("\"pnn.delays_ps\" must have one entry per channel");
        for (int i = 0; i < channels; ++i) l.delays_s[std::size_t(i)] = delays_ps[std::size_t(i)] * 1e-12;
    }
    sc.layout = std::move(l);
}

void parse_heater(const njson& j, HeaterCalibration& c, int n_channels) {
    const std::size_t n_heaters = std::size_t(2 * n_channels - 1);
    for (const auto& [key, v] : j.items()) {
        if (key == "alpha_rad_per_ma2") {
            if (v.is_array())
                c.alpha_rad_per_ma2 = as_num_array(v, key);
            else
                c.alpha_rad_per_ma2.assign(n_heaters, as_num(v, key));
        } else if (key == "beta_rad") {
            if (v.is_array())
                c.beta_rad = as_num_array(v, key);
            else
                c.beta_rad.assign(n_heaters, as_num(v, key));
        } else if (key == "max_current_ma") {
            c.max_current_ma = as_num(v, key);
        } else {
            fail("unknown heater key \"" + key + "\"");
        }
    }
    if (c.alpha_rad_per_ma2.size() != n_heaters || c.beta_rad.size() != n_heaters)
        fail("heater calibration needs 2*channels-1 entries");
}

void parse_optimizer(const njson& j, OptimizerSettings& o) {
    for (const auto& [key, v] : j.items()) {
        if (key == "strategy") {
            const std::string s = as_str(v, key);
            try {
                o.strategy = strategy_from_name(s);
            } catch (const std::exception&) {
                fail("unknown optimizer strategy \"" + s + "\"");
            }
        } else if (key == "swarm")
            o.pso.swarm = int(as_int(v, key));
        else if (key == "pso_iterations")
            o.pso.max_iter = int(as_int(v, key));
        else if (key == "inertia")
            o.pso.inertia = as_num(v, key);
        else if (key == "cognitive")
            o.pso.c1 = as_num(v, key);
        else if (key == "social")
            o.pso.c2 = as_num(v, key);
        else if (key == "pso_stall_tol")
            o.pso.stall_tol = as_num(v, key);
        else if (key == "pso_stall_iters")
            o.pso.stall_iters = int(as_int(v, key));
        else if (key == "adam_rate")
            o.adam.lr = as_num(v, key);
        else if (key == "adam_iterations")
            o.adam.max_iter = int(as_int(v, key));
        else if (key == "fd_step_rel")
            o.adam.fd_step_rel = as_num(v, key);
        else if (key == "adam_stall_tol")
            o.adam.stall_tol = as_num(v, key);
        else if (key == "adam_stall_iters")
            o.adam.stall_iters = int(as_int(v, key));
        else if (key == "starts")
            o.n_starts = int(as_int(v, key));
        else if (key == "final_reevals")
            o.final_reevals = int(as_int(v, key));
        else
            fail("unknown optimizer key \"" + key + "\"");
    }
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

double wrap_phase(double phi) {  // into [0, 2*pi)
    double w = std::fmod(phi, kTwoPi);
    if (w < 0) w += kTwoPi;
    return w;
}

}  // namespace

Scenario Scenario::with_baud(double baud_hz) {
    Scenario sc;
    sc.baud_hz = baud_hz;
    sc.tx_bw_hz = 2.0 * baud_hz;
    sc.pd_bw_hz = 2.0 * baud_hz;
    sc.scope_bw_hz = 1.6 * baud_hz;
    return sc;
}

Scenario Scenario::from_json_text(const std::string& text) {
    njson j;
    try {
        j = njson::parse(text);
    } catch (const njson::exception& e) {
        fail(std::string("not valid JSON (") + e.what() + ")");
    }
    if (!j.is_object()) fail("top level must be an object");

    Scenario sc;
    if (j.contains("baud_gbd")) sc = with_baud(as_num(j["baud_gbd"], "baud_gbd") * 1e9);

    bool heater_given = false;
    const njson* heater_json = nullptr;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "baud_gbd") {
                // consumed above
            } else if (key == "levels")
                sc.n_levels = int(as_int(v, key));
            else if (key == "bit_map") {
                const std::string s = as_str(v, key);
                if (s == "gray")
                    sc.bit_map = BitMap::gray;
                else if (s == "natural")
                    sc.bit_map = BitMap::natural;
                else
                    fail("unknown bit_map \"" + s + "\"");
            } else if (key == "prbs_order")
                sc.prbs_order = int(as_int(v, key));
            else if (key == "prbs_seed")
                sc.prbs_seed = as_u64(v, key);
            else if (key == "n_symbols")
                sc.n_symbols = std::size_t(as_int(v, key));
            else if (key == "sps_internal")
                sc.sps_internal = int(as_int(v, key));
            else if (key == "sps_scope")
                sc.sps_scope = int(as_int(v, key));
            else if (key == "peak_power_mw")
                sc.p_peak_mw = as_num(v, key);
            else if (key == "tx_bandwidth_ghz")
                sc.tx_bw_hz = as_num(v, key) * 1e9;
            else if (key == "pd_bandwidth_ghz")
                sc.pd_bw_hz = as_num(v, key) * 1e9;
            else if (key == "scope_bandwidth_ghz")
                sc.scope_bw_hz = as_num(v, key) * 1e9;
            else if (key == "fiber")
                parse_fiber(v, sc.fiber);
            else if (key == "osnr_db")
                sc.osnr_db = as_num(v, key);
            else if (key == "osnr_ref_bandwidth_ghz")
                sc.osnr_ref_bw_hz = as_num(v, key) * 1e9;
            else if (key == "power_mode") {
                const std::string s = as_str(v, key);
                if (s == "fixed_noise_floor")
                    sc.power_mode = PowerMode::fixed_noise_floor;
                else if (s == "fixed_prx")
                    sc.power_mode = PowerMode::fixed_prx;
                else
                    fail("unknown power_mode \"" + s + "\"");
            } else if (key == "prx_dbm")
                sc.prx_dbm = as_num(v, key);
            else if (key == "prx_grid_dbm")
                sc.prx_grid_dbm = as_num_array(v, key);
            else if (key == "pnn")
                parse_pnn(v, sc);
            else if (key == "weight_mode") {
                const std::string s = as_str(v, key);
                if (s == "phase_only")
                    sc.mode = WeightMode::phase_only;
                else if (s == "full")
                    sc.mode = WeightMode::full;
                else if (s == "currents")
                    sc.mode = WeightMode::currents;
                else
                    fail("unknown weight_mode \"" + s + "\"");
            } else if (key == "heater") {
                heater_given = true;
                heater_json = &v;
            } else if (key == "seed")
                sc.seed = as_u64(v, key);
            else if (key == "optimizer")
                parse_optimizer(v, sc.opt);
            else
                fail("unknown scenario key \"" + key + "\"");
        }
    } catch (const njson::exception& e) {
        fail(std::string("malformed value (") + e.what() + ")");
    }

    sc.calib = HeaterCalibration::uniform(sc.layout.n_channels);
    if (heater_given) parse_heater(*heater_json, sc.calib, sc.layout.n_channels);
    return sc;
}

Scenario Scenario::from_json_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) fail("cannot open \"" + path + "\"");
    std::string text;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
    std::fclose(f);
    return from_json_text(text);
}

std::string Scenario::to_json_text() const {
    njson j;  // std::map storage: keys serialize sorted
    j["baud_gbd"] = baud_hz / 1e9;
    j["levels"] = n_levels;
    j["bit_map"] = bit_map == BitMap::gray ? "gray" : "natural";
    j["prbs_order"] = prbs_order;
    j["prbs_seed"] = prbs_seed;
    j["n_symbols"] = n_symbols;
    j["sps_internal"] = sps_internal;
    j["sps_scope"] = sps_scope;
    j["peak_power_mw"] = p_peak_mw;
    j["tx_bandwidth_ghz"] = tx_bw_hz / 1e9;
    j["pd_bandwidth_ghz"] = pd_bw_hz / 1e9;
    j["scope_bandwidth_ghz"] = scope_bw_hz / 1e9;
    j["fiber"] = {{"length_km", fiber.length_m / 1e3},
                  {"beta2_ps2_per_m", fiber.beta2_ps2_per_m},
                  {"attenuation_db_per_km", fiber.atten_db_per_km}};
    j["osnr_db"] = osnr_db;
    j["osnr_ref_bandwidth_ghz"] = osnr_ref_bw_hz / 1e9;
    j["power_mode"] = power_mode == PowerMode::fixed_noise_floor ? "fixed_noise_floor" : "fixed_prx";
    j["prx_dbm"] = prx_dbm;
    j["prx_grid_dbm"] = prx_grid_dbm;
    njson delays = njson::array(), losses = njson::array();
    for (double d : layout.delays_s) delays.push_back(d * 1e12);
    for (double l : layout.channel_loss_db) losses.push_back(l);
    j["pnn"] = {{"channels", layout.n_channels},
                {"delay_unit_ps", layout.delay_unit_s * 1e12},
                {"delays_ps", delays},
                {"channel_loss_db", losses},
                {"group_index", layout.group_index},
                {"delay_error_rel", delay_error_rel},
                {"delay_error_seed", delay_error_seed}};
    j["weight_mode"] = mode == WeightMode::phase_only ? "phase_only"
                       : mode == WeightMode::full     ? "full"
                                                      : "currents";
    j["heater"] = {{"alpha_rad_per_ma2", calib.alpha_rad_per_ma2},
                   {"beta_rad", calib.beta_rad},
                   {"max_current_ma", calib.max_current_ma}};
    j["seed"] = seed;
    j["optimizer"] = {{"strategy", strategy_name(opt.strategy)},
                      {"swarm", opt.pso.swarm},
                      {"pso_iterations", opt.pso.max_iter},
                      {"inertia", opt.pso.inertia},
                      {"cognitive", opt.pso.c1},
                      {"social", opt.pso.c2},
                      {"pso_stall_tol", opt.pso.stall_tol},
                      {"pso_stall_iters", opt.pso.stall_iters},
                      {"adam_rate", opt.adam.lr},
                      {"adam_iterations", opt.adam.max_iter},
                      {"fd_step_rel", opt.adam.fd_step_rel},
                      {"adam_stall_tol", opt.adam.stall_tol},
                      {"adam_stall_iters", opt.adam.stall_iters},
                      {"starts", opt.n_starts},
                      {"final_reevals", opt.final_reevals}};
    return j.dump(2) + "\n";
}

std::uint64_t Scenario::hash() const { return fnv1a64(to_json_text()); }

Pipeline::Pipeline(Scenario sc) : sc_(std::move(sc)) {
    if (!(sc_.baud_hz > 0)) fail("baud rate must be > 0");
    if (sc_.n_levels < 2 || (sc_.n_levels & (sc_.n_levels - 1)) != 0)
        fail("levels must be a power of two >= 2");
    if (sc_.n_symbols < 2) fail("n_symbols must be >= 2");
    if (sc_.sps_scope < 2 || sc_.sps_scope % 2 != 0) fail("sps_scope must be even and >= 2");
    if (sc_.sps_internal < sc_.sps_scope || sc_.sps_internal % sc_.sps_scope != 0)
        fail("sps_internal must be an integer multiple of sps_scope");
    if (!(sc_.tx_bw_hz > 0 && sc_.pd_bw_hz > 0 && sc_.scope_bw_hz > 0))
        fail("bandwidths must be > 0");
    if (!(sc_.osnr_ref_bw_hz > 0)) fail("osnr_ref_bandwidth_ghz must be > 0");
    if (sc_.layout.n_channels < 1) fail("pnn needs at least one channel");
    if (sc_.delay_error_rel < 0 || sc_.delay_error_rel >= 1)
        fail("delay_error_rel must be in [0, 1)");
    const std::size_t n_heaters = std::size_t(2 * sc_.layout.n_channels - 1);
    if (sc_.mode == WeightMode::currents &&
        (sc_.calib.alpha_rad_per_ma2.size() != n_heaters || sc_.calib.beta_rad.size() != n_heaters))
        fail("heater calibration needs 2*channels-1 entries");

    int bps = 0;
    for (int v = sc_.n_levels; v > 1; v >>= 1) ++bps;

    BitSequence bits;
    try {
        bits = generate_prbs(sc_.prbs_order, sc_.prbs_seed, sc_.n_symbols * std::size_t(bps));
    } catch (const std::exception& e) {
        fail(e.what());
    }
    target_ = map_pam(bits, sc_.n_levels, sc_.bit_map);
    target_bits_ = symbols_to_bits(target_, sc_.bit_map);

    const std::vector<double> amps = pam_amplitudes(sc_.n_levels, sc_.p_peak_mw);
    ComplexEnvelope tx = modulate(target_, sc_.baud_hz, sc_.sps_internal, sc_.tx_bw_hz, amps);
    rate_hz_ = tx.rate_hz;

    layout_ = sc_.delay_error_rel > 0
                  ? perturb_delays(sc_.layout, sc_.delay_error_rel, sc_.delay_error_seed)
                  : sc_.layout;
    if (layout_.delays_s.back() >= tx.duration_s())
        fail("pnn delay span exceeds the pattern duration");

    loss_lin_.resize(std::size_t(layout_.n_channels));
    for (std::size_t i = 0; i < loss_lin_.size(); ++i)
        loss_lin_[i] = std::pow(10.0, layout_.channel_loss_db[i] / 20.0);

    // Working point: the all-open reference configuration lands at 0 dBm
    // after the link, whatever the insertion loss of the device and span.
    {
        ComplexEnvelope ref = apply_pnn(tx, layout_, unit_weights(layout_.n_channels));
        ref = propagate(ref, sc_.fiber);
        double p_ref = 0.0;
        for (const cplx& s : ref.s) p_ref += std::norm(s);
        p_ref /= double(ref.size());
        if (!(p_ref > 0)) throw std::runtime_error("reference configuration has zero power");
        const double scale = std::sqrt(1.0 / p_ref);
        for (cplx& s : tx.s) s *= scale;
    }
    tx_env_ = tx;

    const std::vector<double> omega = fft_omega(tx.size(), rate_hz_);
    const std::vector<cplx> fib = fiber_transfer(omega, sc_.fiber);
    base_fft_ = fft(tx.s, false);
    for (std::size_t k = 0; k < base_fft_.size(); ++k) base_fft_[k] *= fib[k];

    if (layout_.n_channels <= 32) {
        tap_fft_.resize(std::size_t(layout_.n_channels));
        for (std::size_t i = 0; i < tap_fft_.size(); ++i) {
            tap_fft_[i].resize(base_fft_.size());
            const double tau = layout_.delays_s[i];
            for (std::size_t k = 0; k < base_fft_.size(); ++k)
                tap_fft_[i][k] = base_fft_[k] * std::polar(1.0, -omega[k] * tau);
        }
    }

    noise_total_mw_ = std::pow(10.0, -sc_.osnr_db / 10.0) * (rate_hz_ / sc_.osnr_ref_bw_hz);
}

Bounds Pipeline::bounds() const {
    const std::size_t n = std::size_t(layout_.n_channels);
    Bounds b;
    switch (sc_.mode) {
        case WeightMode::phase_only:
            b.lo.assign(n - 1, -kPi);
            b.hi.assign(n - 1, kPi);
            break;
        case WeightMode::full:
            b.lo.assign(n - 1, -kPi);
            b.hi.assign(n - 1, kPi);
            b.lo.insert(b.lo.end(), n, 0.0);
            b.hi.insert(b.hi.end(), n, 1.0);
            break;
        case WeightMode::currents:
            b.lo.assign(2 * n - 1, 0.0);
            b.hi.assign(2 * n - 1, sc_.calib.max_current_ma);
            break;
    }
    return b;
}

PnnWeights Pipeline::weights_from_params(std::span<const double> p) const {
    const std::size_t n = std::size_t(layout_.n_channels);
    PnnWeights w;
    switch (sc_.mode) {
        case WeightMode::phase_only:
            if (p.size() != n - 1) throw std::invalid_argument("expected channels-1 parameters");
            w.amplitude.assign(n, 1.0);
            w.phase_rad.assign(n, 0.0);
            for (std::size_t i = 1; i < n; ++i) w.phase_rad[i] = p[i - 1];
            break;
        case WeightMode::full:
            if (p.size() != 2 * n - 1) throw std::invalid_argument("expected 2*channels-1 parameters");
            w.amplitude.assign(p.begin() + std::ptrdiff_t(n - 1), p.end());
            w.phase_rad.assign(n, 0.0);
            for (std::size_t i = 1; i < n; ++i) w.phase_rad[i] = p[i - 1];
            break;
        case WeightMode::currents:
            if (p.size() != 2 * n - 1) throw std::invalid_argument("expected 2*channels-1 parameters");
            w = currents_to_weights(p, sc_.calib, layout_);
            break;
    }
    return w;
}

std::vector<double> Pipeline::params_from_weights(const PnnWeights& w) const {
    const std::size_t n = std::size_t(layout_.n_channels);
    if (w.amplitude.size() != n || w.phase_rad.size() != n)
        throw std::invalid_argument("weight vector does not match the layout");
    const PnnWeights nw = normalized(w);
    std::vector<double> p;
    switch (sc_.mode) {
        case WeightMode::phase_only:
            p.assign(nw.phase_rad.begin() + 1, nw.phase_rad.end());
            break;
        case WeightMode::full:
            p.assign(nw.phase_rad.begin() + 1, nw.phase_rad.end());
            for (double a : nw.amplitude) p.push_back(std::clamp(a, 0.0, 1.0));
            break;
        case WeightMode::currents: {
            // Smallest non-negative current reaching each heater target.
            p.assign(2 * n - 1, 0.0);
            for (std::size_t h = 0; h < 2 * n - 1; ++h) {
                const double alpha = sc_.calib.alpha_rad_per_ma2[h];
                const double beta = sc_.calib.beta_rad[h];
                if (!(alpha > 0)) throw std::invalid_argument("heater alpha must be > 0 to invert");
                double theta;
                if (h < n - 1) {
                    theta = wrap_phase(nw.phase_rad[h + 1] - beta);
                } else {
                    const double a = std::clamp(nw.amplitude[h - (n - 1)], 0.0, 1.0);
                    theta = 2.0 * std::asin(std::sqrt(a)) - beta;
                    if (theta < 0) theta = wrap_phase(theta);
                }
                p[h] = std::min(std::sqrt(theta / alpha), sc_.calib.max_current_ma);
            }
            break;
        }
    }
    return p;
}

Pipeline::Eval Pipeline::evaluate(const PnnWeights* weights, std::uint64_t seed,
                                  const EvalOptions& opts) const {
    const std::size_t n = base_fft_.size();
    const std::size_t nch = std::size_t(layout_.n_channels);

    ComplexEnvelope env;
    env.rate_hz = rate_hz_;
    env.carrier_offset_hz = opts.carrier_offset_hz;

    if (weights == nullptr) {
        env.s = fft(base_fft_, true);
    } else {
        if (weights->amplitude.size() != nch || weights->phase_rad.size() != nch)
            throw std::invalid_argument("weight vector does not match the layout");
        if (!tap_fft_.empty()) {
            std::vector<cplx> spec(n, cplx{0.0, 0.0});
            for (std::size_t i = 0; i < nch; ++i) {
                const double a = weights->amplitude[i];
                if (a == 0.0 || loss_lin_[i] == 0.0) continue;
                const cplx c =
                    std::polar(a * loss_lin_[i] / double(nch),
                               weights->phase_rad[i] +
                                   kTwoPi * opts.carrier_offset_hz * layout_.delays_s[i]);
                const std::vector<cplx>& tap = tap_fft_[i];
                for (std::size_t k = 0; k < n; ++k) spec[k] += c * tap[k];
            }
            env.s = fft(spec, true);
        } else {
            ComplexEnvelope in = tx_env_;
            in.carrier_offset_hz = opts.carrier_offset_hz;
            env = propagate(apply_pnn(in, layout_, *weights), sc_.fiber);
        }
    }

    Eval ev;
    double p_rx = 0.0;
    for (const cplx& s : env.s) p_rx += std::norm(s);
    p_rx /= double(env.size());

    std::optional<double> prx_target_mw;
    if (opts.prx_dbm)
        prx_target_mw = std::pow(10.0, *opts.prx_dbm / 10.0);
    else if (sc_.power_mode == PowerMode::fixed_prx)
        prx_target_mw = std::pow(10.0, sc_.prx_dbm / 10.0);
    if (prx_target_mw) {
        if (!(p_rx > 1e-30)) {
            ev.loss_norm = kLossCap;
            ev.degenerate = true;
            return ev;
        }
        const double s = std::sqrt(*prx_target_mw / p_rx);
        for (cplx& v : env.s) v *= s;
        p_rx = *prx_target_mw;
    }
    ev.rx_power_mw = p_rx;

    env = add_noise_power(env, noise_total_mw_, seed);

    ElectricalTrace det = photodetect(env, sc_.baud_hz);
    det = receiver_chain(det, sc_.pd_bw_hz, sc_.scope_bw_hz, double(sc_.sps_scope) * sc_.baud_hz);
    AlignResult ar = align(det, target_);
    if (!ar.defined) {
        ev.loss_norm = kLossCap;
        ev.degenerate = true;
        return ev;
    }

    const int k = sc_.sps_scope / 2;
    ev.stats = level_stats(ar.trace, target_, k, opts.tail);
    ev.l2_raw_mw = loss_l2(ar.trace, target_, k, opts.tail);

    const double spacing = (ev.stats.level.back().mean - ev.stats.level.front().mean) /
                           double(sc_.n_levels - 1);
    if (!std::isfinite(spacing) || spacing < spacing_floor_mw_) {
        ev.loss_norm = kLossCap;
        ev.degenerate = true;
        return ev;
    }
    ev.loss_norm = std::min(ev.l2_raw_mw / spacing, kLossCap);

    if (opts.with_ber) ev.ber = measure_ber(ar.trace, target_, ev.stats, sc_.bit_map);
    if (opts.keep_trace) ev.trace = std::move(ar.trace);
    return ev;
}

double Pipeline::objective(std::span<const double> params, std::uint64_t seed) const {
    const PnnWeights w = weights_from_params(params);
    return evaluate(&w, seed).loss_norm;
}

Objective Pipeline::objective_fn() const {
    return [this](std::span<const double> p, std::uint64_t s) { return objective(p, s); };
}

}  // namespace pnnsim
