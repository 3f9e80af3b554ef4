#include "pnnsim/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "pnnsim/channel.hpp"
#include "pnnsim/detection.hpp"
#include "pnnsim/fft.hpp"
#include "pnnsim/metrics.hpp"
#include "pnnsim/parallel.hpp"
#include "pnnsim/rng.hpp"
#include "pnnsim/waveform.hpp"

namespace fs = std::filesystem;

namespace pnnsim {

namespace {

using njson = nlohmann::json;

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << text;
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

void stamp(ResultTable& t, const Scenario& sc) {
    t.meta["scenario_json"] = sc.to_json_text();
    t.meta["scenario_hash"] = hex64(sc.hash());
    t.meta["seed"] = std::to_string(sc.seed);
}

PnnWeights ideal_weights(const PnnLayout& layout, double beta2_l_s2) {
    PnnWeights w;
    w.amplitude.assign(std::size_t(layout.n_channels), 1.0);
    w.phase_rad = ideal_phases(layout, beta2_l_s2);
    return w;
}

njson weights_json(const PnnLayout& layout, const PnnWeights& w) {
    njson j;
    j["channels"] = layout.n_channels;
    j["layout_hash"] = hex64(layout.hash());
    j["amplitude"] = w.amplitude;
    j["phase_rad"] = w.phase_rad;
    return j;
}

njson training_json(const TrainingRun& run) {
    njson j;
    j["strategy"] = strategy_name(run.strategy);
    j["seed"] = run.seed;
    j["final_loss_mean"] = run.final_loss_mean;
    j["final_loss_std"] = run.final_loss_std;
    j["evaluations"] = run.opt.evaluations;
    j["stop"] = run.opt.stop == StopCause::stalled ? "stalled" : "max_iterations";
    j["iterations"] = run.opt.best_history.empty() ? 0 : run.opt.best_history.size() - 1;
    j["best_loss"] = run.opt.loss;
    j["wall_time_s"] = run.wall_time_s;
    j["x"] = run.opt.x;
    return j;
}

struct RepOut {
    std::uint64_t errors = 0, bits = 0;
    bool at_floor = false;
    double loss = 0.0;
    bool degenerate = false;
};

/// Shared by ber_scan and ideal_compare: curves x grid x repeats, each cell
/// aggregated from per-repeat error counts (68% Poisson counting interval).
BerScan run_ber_grid(const Scenario& sc, const std::vector<const Pipeline*>& pipes,
                     const std::vector<const PnnWeights*>& weights,
                     const std::vector<std::string>& names, int repeats, std::uint64_t tag) {
    const std::vector<double>& grid = sc.prx_grid_dbm;
    const std::size_t nc = pipes.size(), np = grid.size(), nr = std::size_t(repeats);
    if (np == 0) throw std::invalid_argument("scenario: prx_grid_dbm is empty");
    if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");

    std::vector<RepOut> out(nc * np * nr);
    par::for_each_index(out.size(), [&](std::size_t idx) {
        const std::size_t c = idx / (np * nr);
        const std::size_t p = (idx / nr) % np;
        const std::size_t r = idx % nr;
        Pipeline::EvalOptions opts;
        opts.prx_dbm = grid[p];
        opts.with_ber = true;
        const Pipeline::Eval ev =
            pipes[c]->evaluate(weights[c], mix_seed(sc.seed, {tag, c, p, r}), opts);
        RepOut& o = out[idx];
        o.errors = ev.ber.errors;
        o.bits = ev.ber.bits;
        o.at_floor = ev.ber.at_floor;
        o.loss = ev.loss_norm;
        o.degenerate = ev.degenerate;
    });

    BerScan scan;
    scan.curve_names = names;
    scan.table.columns = {"curve",  "prx_dbm", "ber",        "ber_lo",    "ber_hi",
                          "errors", "bits",    "floor_frac", "loss_mean", "loss_std"};
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t p = 0; p < np; ++p) {
            BerCell cell;
            cell.curve = int(c);
            cell.prx_dbm = grid[p];
            double loss_sum = 0.0, loss_sq = 0.0;
            std::size_t n_floor = 0;
            for (std::size_t r = 0; r < nr; ++r) {
                const RepOut& o = out[(c * np + p) * nr + r];
                cell.errors += o.errors;
                cell.bits += o.bits;
                if (o.at_floor) ++n_floor;
                loss_sum += o.loss;
                loss_sq += o.loss * o.loss;
            }
            cell.floor_frac = double(n_floor) / double(nr);
            cell.loss_mean = loss_sum / double(nr);
            const double var =
                nr > 1 ? std::max(0.0, (loss_sq - loss_sum * loss_sum / double(nr)) / double(nr - 1))
                       : 0.0;
            cell.loss_std = std::sqrt(var);
            if (cell.bits == 0) throw std::runtime_error("ber grid produced no bits");
            if (cell.errors == 0) {
                cell.ber = 1.0 / double(cell.bits);  // floor: no error observed
                cell.ber_lo = 0.0;
                cell.ber_hi = 1.0 / double(cell.bits);
            } else {
                const double e = double(cell.errors), b = double(cell.bits);
                cell.ber = e / b;
                cell.ber_lo = std::max(0.0, (e - std::sqrt(e)) / b);
                cell.ber_hi = (e + std::sqrt(e)) / b;
            }
            scan.cells.push_back(cell);
            scan.table.append({double(c), cell.prx_dbm, cell.ber, cell.ber_lo, cell.ber_hi,
                               double(cell.errors), double(cell.bits), cell.floor_frac,
                               cell.loss_mean, cell.loss_std});
        }
    }
    stamp(scan.table, sc);
    scan.table.meta["repeats"] = std::to_string(repeats);
    for (std::size_t c = 0; c < names.size(); ++c)
        scan.table.meta["curve_" + std::to_string(c)] = names[c];
    return scan;
}

}  // namespace

void ResultTable::append(std::vector<double> row) {
    if (row.size() != columns.size())
        throw std::logic_error("result row width does not match the header");
    rows.push_back(std::move(row));
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string ResultTable::to_tsv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out += '\t';
        out += columns[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += '\t';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

void ResultTable::write(const fs::path& dir, const std::string& name) const {
    fs::create_directories(dir);
    write_text(dir / (name + ".tsv"), to_tsv());
    njson j;
    j["columns"] = columns;
    for (const auto& [k, v] : meta) {
        if (k == "scenario_json")
            j["scenario"] = njson::parse(v);
        else
            j[k] = v;
    }
    write_text(dir / (name + ".meta.json"), j.dump(2) + "\n");
}

TrainArtifacts train_scenario(const Scenario& sc, std::optional<Strategy> strategy,
                              const fs::path& out_dir) {
    const Strategy st = strategy.value_or(sc.opt.strategy);
    Pipeline pipe(sc);
    const StrategyConfig cfg{sc.opt.pso, sc.opt.adam, sc.opt.n_starts, sc.opt.final_reevals};

    std::vector<double> warm;
    if (st == Strategy::adam_from_btb) {
        Scenario btb = sc;
        btb.fiber.length_m = 0.0;
        Pipeline bp(btb);
        const TrainingRun pre = run_strategy(Strategy::adam_multistart, bp.objective_fn(),
                                             bp.bounds(), cfg, mix_seed(sc.seed, {0xb2b}));
        warm = pre.opt.x;
    }

    TrainArtifacts art;
    art.run = run_strategy(st, pipe.objective_fn(), pipe.bounds(), cfg,
                           mix_seed(sc.seed, {0x7a11}), warm);
    art.weights = normalized(pipe.weights_from_params(art.run.opt.x));
    Pipeline::EvalOptions opts;
    opts.with_ber = true;
    art.eval = pipe.evaluate(&art.weights, mix_seed(sc.seed, {0x7a11, 0xe7a1}), opts);
    art.scenario_hash = sc.hash();

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        njson wj = weights_json(pipe.layout(), art.weights);
        wj["scenario_hash"] = hex64(art.scenario_hash);
        wj["strategy"] = strategy_name(st);
        wj["final_loss_mean"] = art.run.final_loss_mean;
        wj["final_loss_std"] = art.run.final_loss_std;
        write_text(out_dir / "weights.json", wj.dump(2) + "\n");
        write_text(out_dir / "training.json", training_json(art.run).dump(2) + "\n");

        ResultTable conv;
        conv.columns = {"iteration", "best_loss"};
        for (std::size_t i = 0; i < art.run.opt.best_history.size(); ++i)
            conv.append({double(i), art.run.opt.best_history[i]});
        stamp(conv, sc);
        conv.meta["strategy"] = strategy_name(st);
        conv.write(out_dir, "convergence");
    }
    return art;
}

BerScan ber_scan(const Scenario& sc, int repeats, const fs::path& out_dir) {
    Pipeline pipe(sc);
    const TrainArtifacts art = train_scenario(sc, {}, out_dir);

    std::vector<const Pipeline*> pipes{&pipe};
    std::vector<const PnnWeights*> weights{nullptr};
    std::vector<std::string> names{"unequalized"};

    PnnWeights ideal;
    if (sc.fiber.beta2_l_s2() != 0.0) {
        ideal = ideal_weights(pipe.layout(), sc.fiber.beta2_l_s2());
        pipes.push_back(&pipe);
        weights.push_back(&ideal);
        names.push_back("ideal_phases");
    }
    pipes.push_back(&pipe);
    weights.push_back(&art.weights);
    names.push_back("trained");

    BerScan scan = run_ber_grid(sc, pipes, weights, names, repeats, 0xbe5);
    if (!out_dir.empty()) scan.table.write(out_dir, "ber");
    return scan;
}

PenaltyCurve penalty_sweep(const Scenario& sc, const fs::path& out_dir) {
    const PenaltyProbeConfig probe;
    const double step = probe.rate_hz / double(probe.n_samples);  // one probe bin
    const double f_max = std::min(1.5 * sc.baud_hz, probe.rate_hz / 4.0 - step);
    const std::size_t n = std::size_t(std::floor(f_max / step));
    if (n == 0) throw std::invalid_argument("scenario: baud too low for the penalty probe grid");

    const double b2l = sc.fiber.beta2_l_s2();
    const PnnWeights dev =
        b2l != 0.0 ? ideal_weights(sc.layout, b2l) : unit_weights(sc.layout.n_channels);

    LinkSpec btb, fiber_only, pnn_fiber, pnn_only;
    fiber_only.fiber = sc.fiber;
    pnn_fiber.fiber = sc.fiber;
    pnn_fiber.pnn = LinkSpec::PnnStage{sc.layout, dev};
    pnn_only.pnn = LinkSpec::PnnStage{sc.layout, dev};

    PenaltyCurve pc;
    pc.freq_hz.resize(n);
    pc.analytic_db.resize(n);
    pc.btb_db.resize(n);
    pc.fiber_db.resize(n);
    pc.pnn_fiber_db.resize(n);
    pc.pnn_db.resize(n);

    par::for_each_index(n, [&](std::size_t i) {
        const double f = step * double(i + 1);
        const double w = kTwoPi * f;
        pc.freq_hz[i] = f;
        pc.analytic_db[i] = cd_penalty_analytic_db(sc.fiber, w);
        pc.btb_db[i] = cd_penalty_measured_db(btb, w, probe);
        pc.fiber_db[i] = cd_penalty_measured_db(fiber_only, w, probe);
        pc.pnn_fiber_db[i] = cd_penalty_measured_db(pnn_fiber, w, probe);
        pc.pnn_db[i] = cd_penalty_measured_db(pnn_only, w, probe);
    });

    pc.table.columns = {"freq_ghz", "analytic_db", "btb_db", "fiber_db", "pnn_fiber_db", "pnn_db"};
    for (std::size_t i = 0; i < n; ++i)
        pc.table.append({pc.freq_hz[i] / 1e9, pc.analytic_db[i], pc.btb_db[i], pc.fiber_db[i],
                         pc.pnn_fiber_db[i], pc.pnn_db[i]});
    stamp(pc.table, sc);
    pc.table.meta["device_weights"] = b2l != 0.0 ? "ideal_phases" : "unit";
    if (!out_dir.empty()) pc.table.write(out_dir, "penalty");
    return pc;
}

double FreqSweep::autocorr_at(double lag_hz) const {
    if (offset_hz.size() < 2) return 0.0;
    const double step = offset_hz[1] - offset_hz[0];
    const std::size_t idx = std::size_t(std::llround(lag_hz / step));
    if (idx >= autocorr.size()) throw std::invalid_argument("autocorrelation lag out of range");
    return autocorr[idx];
}

FreqSweep frequency_sweep(const Scenario& sc, const fs::path& out_dir, int n_seeds,
                          double span_hz, double step_hz) {
    if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
    if (!(step_hz > 0) || !(span_hz >= step_hz))
        throw std::invalid_argument("need span_hz >= step_hz > 0");

    const TrainArtifacts art = train_scenario(sc, {}, out_dir);
    Pipeline pipe(sc);

    const std::int64_t half = std::llround(span_hz / step_hz);
    const std::size_t n = std::size_t(2 * half + 1);

    FreqSweep fsw;
    fsw.offset_hz.resize(n);
    fsw.loss_mean.resize(n);
    fsw.loss_std.resize(n);

    par::for_each_index(n, [&](std::size_t i) {
        const double off = step_hz * double(std::int64_t(i) - half);
        fsw.offset_hz[i] = off;
        double sum = 0.0, sq = 0.0;
        for (int s = 0; s < n_seeds; ++s) {
            Pipeline::EvalOptions opts;
            opts.carrier_offset_hz = off;
            const double loss =
                pipe.evaluate(&art.weights, mix_seed(sc.seed, {0xf5, i, std::uint64_t(s)}), opts)
                    .loss_norm;
            sum += loss;
            sq += loss * loss;
        }
        fsw.loss_mean[i] = sum / n_seeds;
        const double var =
            n_seeds > 1 ? std::max(0.0, (sq - sum * sum / n_seeds) / (n_seeds - 1)) : 0.0;
        fsw.loss_std[i] = std::sqrt(var);
    });

    // Biased autocorrelation of the mean-loss series; its first off-zero peak
    // is the free spectral range when the response is periodic.
    const double mean =
        std::accumulate(fsw.loss_mean.begin(), fsw.loss_mean.end(), 0.0) / double(n);
    double denom = 0.0;
    for (double v : fsw.loss_mean) denom += (v - mean) * (v - mean);
    fsw.autocorr.assign(n, 0.0);
    if (denom > 1e-30) {
        for (std::size_t lag = 0; lag < n; ++lag) {
            double acc = 0.0;
            for (std::size_t i = 0; i + lag < n; ++i)
                acc += (fsw.loss_mean[i] - mean) * (fsw.loss_mean[i + lag] - mean);
            fsw.autocorr[lag] = acc / denom;
        }
        const std::size_t lag_min = std::size_t(std::llround(10e9 / step_hz));
        std::size_t best = lag_min < n ? lag_min : 0;
        for (std::size_t lag = best; lag < n; ++lag)
            if (fsw.autocorr[lag] > fsw.autocorr[best]) best = lag;
        fsw.peak_lag_hz = double(best) * step_hz;
    }

    fsw.table.columns = {"offset_ghz", "loss_mean", "loss_std"};
    for (std::size_t i = 0; i < n; ++i)
        fsw.table.append({fsw.offset_hz[i] / 1e9, fsw.loss_mean[i], fsw.loss_std[i]});
    stamp(fsw.table, sc);
    fsw.table.meta["n_seeds"] = std::to_string(n_seeds);
    fsw.table.meta["peak_lag_ghz"] = format_double(fsw.peak_lag_hz / 1e9);

    fsw.autocorr_table.columns = {"lag_ghz", "autocorr"};
    for (std::size_t lag = 0; lag < n; ++lag)
        fsw.autocorr_table.append({double(lag) * step_hz / 1e9, fsw.autocorr[lag]});
    stamp(fsw.autocorr_table, sc);
    fsw.autocorr_table.meta["peak_lag_ghz"] = format_double(fsw.peak_lag_hz / 1e9);

    if (!out_dir.empty()) {
        fsw.table.write(out_dir, "sweep");
        fsw.autocorr_table.write(out_dir, "autocorr");
    }
    return fsw;
}

Heatmap heatmap_scan(const Scenario& sc, const fs::path& out_dir, std::vector<int> channels_grid,
                     std::vector<double> delay_grid_s) {
    if (channels_grid.empty() || delay_grid_s.empty())
        throw std::invalid_argument("heatmap grids must be non-empty");

    Heatmap hm;
    hm.channels_grid = channels_grid;
    hm.delay_grid_s = delay_grid_s;
    hm.table.columns = {"channels",      "delay_unit_ps", "span_ps", "required_taps",
                        "satisfies",     "loss_mean",     "loss_std"};

    const StrategyConfig cfg{sc.opt.pso, sc.opt.adam, sc.opt.n_starts, sc.opt.final_reevals};
    for (std::size_t ci = 0; ci < channels_grid.size(); ++ci) {
        for (std::size_t di = 0; di < delay_grid_s.size(); ++di) {
            const int nch = channels_grid[ci];
            const double dt = delay_grid_s[di];
            Scenario cell_sc = sc;
            cell_sc.layout = PnnLayout::make(nch, dt);  // lossless scaling study
            cell_sc.calib = HeaterCalibration::uniform(nch);
            cell_sc.mode = WeightMode::phase_only;
            cell_sc.power_mode = PowerMode::fixed_prx;
            cell_sc.delay_error_rel = 0.0;
            Pipeline pipe(cell_sc);
            const TrainingRun run =
                run_strategy(Strategy::pso, pipe.objective_fn(), pipe.bounds(), cfg,
                             mix_seed(sc.seed, {0x4ea7, ci, di}));

            HeatmapCell cell;
            cell.channels = nch;
            cell.delay_unit_s = dt;
            cell.span_s = double(nch) * dt;
            cell.required = required_taps(sc.baud_hz, sc.fiber.beta2_l_s2(), dt);
            cell.satisfies = nch >= cell.required;
            cell.loss_mean = run.final_loss_mean;
            cell.loss_std = run.final_loss_std;
            hm.cells.push_back(cell);
            hm.table.append({double(nch), dt * 1e12, cell.span_s * 1e12, double(cell.required),
                             cell.satisfies ? 1.0 : 0.0, cell.loss_mean, cell.loss_std});
        }
    }
    stamp(hm.table, sc);
    if (!out_dir.empty()) hm.table.write(out_dir, "heatmap");
    return hm;
}

IdealCompare ideal_compare(const Scenario& sc, int repeats, const fs::path& out_dir) {
    const double b2l = sc.fiber.beta2_l_s2();
    if (b2l == 0.0)
        throw std::invalid_argument("scenario: ideal comparison needs a dispersive fiber");

    Pipeline pipe(sc);
    const TrainArtifacts art = train_scenario(sc, {}, out_dir);
    const PnnWeights ideal_same = ideal_weights(pipe.layout(), b2l);

    // Dense lossless line: enough sub-symbol taps to cover the whole
    // dispersion-broadened window, the best a device of this family can do.
    Scenario dense_sc = sc;
    dense_sc.layout = PnnLayout::make(512, 0.78125e-12);
    dense_sc.calib = HeaterCalibration::uniform(512);
    dense_sc.mode = WeightMode::phase_only;
    dense_sc.delay_error_rel = 0.0;
    Pipeline dense(dense_sc);
    const PnnWeights ideal_dense = ideal_weights(dense.layout(), b2l);

    const std::vector<const Pipeline*> pipes{&pipe, &pipe, &pipe, &dense};
    const std::vector<const PnnWeights*> weights{nullptr, &art.weights, &ideal_same, &ideal_dense};
    const std::vector<std::string> names{"unequalized", "trained", "ideal_phases", "ideal_dense"};

    IdealCompare cmp;
    cmp.scan = run_ber_grid(sc, pipes, weights, names, repeats, 0xc04a);
    if (!out_dir.empty()) cmp.scan.table.write(out_dir, "compare_ber");

    // Eye traces and separation losses at the top power point.
    const double top = *std::max_element(sc.prx_grid_dbm.begin(), sc.prx_grid_dbm.end());
    ResultTable l2;
    l2.columns = {"curve", "loss_norm", "l2_raw_mw", "ber"};
    for (std::size_t c = 0; c < pipes.size(); ++c) {
        Pipeline::EvalOptions opts;
        opts.prx_dbm = top;
        opts.with_ber = true;
        opts.keep_trace = true;
        const Pipeline::Eval ev =
            pipes[c]->evaluate(weights[c], mix_seed(sc.seed, {0xc04a, 0xe7e, c}), opts);
        cmp.l2_at_top.push_back(ev.loss_norm);
        l2.append({double(c), ev.loss_norm, ev.l2_raw_mw, ev.ber.ber});
        if (!out_dir.empty() && !ev.trace.s.empty()) {
            ResultTable eye;
            const auto fold = eye_diagram(ev.trace);
            eye.columns.resize(fold.front().size());
            for (std::size_t k = 0; k < eye.columns.size(); ++k)
                eye.columns[k] = "s" + std::to_string(k);
            for (const auto& row : fold) eye.append(row);
            stamp(eye, sc);
            eye.meta["curve"] = names[c];
            eye.meta["prx_dbm"] = format_double(top);
            eye.write(out_dir, "eye_" + names[c]);
        }
    }
    stamp(l2, sc);
    for (std::size_t c = 0; c < names.size(); ++c) l2.meta["curve_" + std::to_string(c)] = names[c];
    l2.meta["prx_dbm"] = format_double(top);
    if (!out_dir.empty()) l2.write(out_dir, "l2");
    return cmp;
}

bool selftest(const fs::path& out_dir, std::uint64_t seed) {
    struct Check {
        std::string name;
        double value;
        bool pass;
    };
    std::vector<Check> checks;

    {  // transform round trip on a seeded random vector
        Rng rng(mix_seed(seed, {1}));
        std::vector<cplx> x(4096);
        for (cplx& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const std::vector<cplx> back = fft(fft(x, false), true);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            num += std::norm(back[i] - x[i]);
            den += std::norm(x[i]);
        }
        const double rel = std::sqrt(num / den);
        checks.push_back({"fft_roundtrip_rel", rel, rel < 1e-12});
    }

    const FiberSpec fiber{125e3, -0.021, 0.2};
    {  // quadratic spectral phase at 10 GHz: -5.1815 rad, wrapped by arg()
        const std::vector<double> w{kTwoPi * 10e9};
        const double phase = std::arg(fiber_transfer(w, fiber)[0]);
        const double expected = -5.18154231 + kTwoPi;
        checks.push_back({"fiber_phase_10ghz_rad", phase, std::abs(phase - expected) < 1e-4});
    }
    {  // first intensity notch of the 125 km span
        const double f = cd_first_notch_rad_s(fiber) / kTwoPi;
        checks.push_back({"first_notch_ghz", f / 1e9, std::abs(f / 1e9 - 5.5058) < 0.01});
    }
    {  // tap-count rule at 100 km / 50 ps
        const FiberSpec f100{100e3, -0.021, 0.2};
        const int nt = required_taps(10e9, f100.beta2_l_s2(), 50e-12);
        checks.push_back({"required_taps_100km_50ps", double(nt), nt == 4});
    }
    {  // analytic profile, first tap of the 8-channel device
        const double phi = ideal_phases(default_layout8(), fiber.beta2_l_s2())[0];
        checks.push_back({"ideal_phase_tap1_rad", phi, std::abs(phi - -1.0714285714) < 1e-6});
    }
    {  // maximal-length sequence balance
        const BitSequence prbs = generate_prbs(10, 1);
        std::size_t ones = 0;
        for (std::uint8_t b : prbs.bits) ones += b;
        checks.push_back({"prbs10_ones_per_period", double(ones), ones == 512});
    }

    const Scenario sc;  // default: PAM4, 10 GBd, 125 km
    Pipeline pipe(sc);
    const PnnWeights ideal = ideal_weights(pipe.layout(), sc.fiber.beta2_l_s2());
    const std::vector<double> p_ideal = pipe.params_from_weights(ideal);
    {  // one measurement must be a pure function of its seed
        const double a = pipe.objective(p_ideal, mix_seed(seed, {7}));
        const double b = pipe.objective(p_ideal, mix_seed(seed, {7}));
        checks.push_back({"objective_repeat_diff", std::abs(a - b), a == b});
        checks.push_back({"objective_ideal", a, std::isfinite(a)});
    }
    {  // a dense line covering the dispersion window must reopen this eye
        Scenario dense_sc = sc;
        dense_sc.layout = PnnLayout::make(512, 0.78125e-12);
        dense_sc.calib = HeaterCalibration::uniform(512);
        Pipeline dense(dense_sc);
        const PnnWeights w = ideal_weights(dense.layout(), sc.fiber.beta2_l_s2());
        const double with_pnn = dense.evaluate(&w, mix_seed(seed, {8}), {}).loss_norm;
        const double without = dense.evaluate(nullptr, mix_seed(seed, {8}), {}).loss_norm;
        checks.push_back(
            {"dense_ideal_minus_unequalized", with_pnn - without, with_pnn < 0 && without > 0});
    }
    {  // alignment recovers a known circular symbol shift
        const SymbolSequence& target = pipe.target();
        const std::size_t n = target.sym.size();
        const int sps = 2, shift = 37;
        ElectricalTrace t;
        t.sps = sps;
        t.rate_hz = sc.baud_hz * sps;
        t.s.assign(n * sps, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = double(target.sym[(i + n - shift) % n]);
            t.s[i * sps + 0] = v;
            t.s[i * sps + 1] = v;
        }
        const AlignResult ar = align(t, target);
        std::size_t mismatch = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (double(target.sym[i]) != ar.trace.s[i * sps + 1]) ++mismatch;
        checks.push_back({"align_roll_mismatches", double(mismatch), ar.defined && mismatch == 0});
    }
    {  // decile edges of the uniform 0.01..1.00 grid
        ElectricalTrace t;
        t.sps = 2;
        t.rate_hz = 2.0;
        SymbolSequence tgt;
        tgt.n_levels = 1;
        for (int i = 1; i <= 100; ++i) {
            t.s.push_back(0.0);
            t.s.push_back(double(i) / 100.0);
            tgt.sym.push_back(0);
        }
        const LevelStats st = level_stats(t, tgt, 1);
        const bool ok = std::abs(st.level[0].e_l - 0.055) < 1e-12 &&
                        std::abs(st.level[0].e_r - 0.955) < 1e-12;
        checks.push_back({"decile_left_edge", st.level[0].e_l, ok});
    }
    {  // dispersion inverse: propagate with beta2 then -beta2 over a lossless span
        Rng rng(mix_seed(seed, {21}));
        ComplexEnvelope x;
        x.rate_hz = 160e9;
        x.s.resize(16384);
        for (cplx& v : x.s) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const FiberSpec fwd{125e3, -0.021, 0.0}, bwd{125e3, 0.021, 0.0};
        const ComplexEnvelope y = propagate(propagate(x, fwd), bwd);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < x.s.size(); ++i) {
            num += std::norm(y.s[i] - x.s[i]);
            den += std::norm(x.s[i]);
        }
        const double rel = std::sqrt(num / den);
        checks.push_back({"propagate_roundtrip_rel", rel, rel < 1e-9});
    }
    {  // measured small-signal penalty of the bare span against the closed form
        LinkSpec link;
        link.fiber = fiber;
        std::vector<double> meas(300);
        for (int i = 1; i <= 300; ++i)
            meas[std::size_t(i - 1)] = cd_penalty_measured_db(link, kTwoPi * 50e6 * double(i));
        double notch_ghz = 0.0;
        for (int i = 1; i + 1 < 300; ++i) {
            const std::size_t s = std::size_t(i);
            if (meas[s] > 15.0 && meas[s] >= meas[s - 1] && meas[s] >= meas[s + 1]) {
                notch_ghz = 0.05 * double(i + 1);
                break;
            }
        }
        double max_dev = 0.0;
        for (int i = 1; i <= 300; ++i) {
            const double a = cd_penalty_analytic_db(fiber, kTwoPi * 50e6 * double(i));
            if (a < 20.0) max_dev = std::max(max_dev, std::abs(meas[std::size_t(i - 1)] - a));
        }
        checks.push_back({"penalty_notch_ghz", notch_ghz, std::abs(notch_ghz - 5.51) <= 0.1});
        checks.push_back({"penalty_match_max_db", max_dev, max_dev < 0.5});
    }
    {  // central differences against the analytic gradient of a quadratic
        const double qa[7] = {1.0, 2.5, 0.3, 4.0, 1.7, 0.9, 3.1};
        const double qb[7] = {0.2, -0.4, 1.1, 0.0, -0.9, 0.5, -0.1};
        const Objective quad = [&](std::span<const double> x, std::uint64_t) {
            double s = 3.0;
            for (std::size_t i = 0; i < 7; ++i) s += qa[i] * (x[i] - qb[i]) * (x[i] - qb[i]);
            return s;
        };
        const std::vector<double> x(7, 0.37), h(7, 1e-4);
        const std::vector<double> g = fd_gradient(quad, x, h, 0);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < 7; ++i) {
            const double ga = 2.0 * qa[i] * (x[i] - qb[i]);
            num += (g[i] - ga) * (g[i] - ga);
            den += ga * ga;
        }
        const double rel = std::sqrt(num / den);
        checks.push_back({"fd_quadratic_rel", rel, rel < 1e-6});
    }
    {  // swarm determinism and a nonincreasing best-loss history
        const Objective sphere = [](std::span<const double> x, std::uint64_t) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return s;
        };
        Bounds b;
        b.lo.assign(3, -2.0);
        b.hi.assign(3, 2.0);
        PsoConfig cfg;
        cfg.swarm = 10;
        cfg.max_iter = 40;
        cfg.stall_iters = 40;
        const OptResult r1 = pso_minimize(sphere, b, cfg, mix_seed(seed, {22}));
        const OptResult r2 = pso_minimize(sphere, b, cfg, mix_seed(seed, {22}));
        int viol = 0;
        for (std::size_t i = 1; i < r1.best_history.size(); ++i)
            if (r1.best_history[i] > r1.best_history[i - 1]) ++viol;
        const bool same = r1.x == r2.x && r1.best_history == r2.best_history;
        checks.push_back({"pso_monotone_violations", double(viol), viol == 0 && same});
    }
    {  // the stall rule must fire after exactly stall_iters flat iterations
        const Objective flat = [](std::span<const double>, std::uint64_t) { return 3.14; };
        Bounds b;
        b.lo.assign(2, -1.0);
        b.hi.assign(2, 1.0);
        PsoConfig cfg;
        cfg.swarm = 6;
        const OptResult r = pso_minimize(flat, b, cfg, mix_seed(seed, {23}));
        const bool ok = r.stop == StopCause::stalled && r.best_history.size() == 16 &&
                        r.evaluations == 6ull * 16ull;
        checks.push_back({"pso_stall_iterations", double(r.best_history.size() - 1), ok});
    }
    {  // level metrics against a direct re-computation on synthetic level sets
        Rng rng(mix_seed(seed, {24}));
        double max_dev = 0.0;
        std::uint64_t exact_mismatches = 0;
        for (int set = 0; set < 100; ++set) {
            const int n_levels = 1 << (1 + int(rng.raw() % 3));  // 2, 4 or 8
            const std::size_t n_sym = 40 + std::size_t(rng.raw() % 160);
            const BitMap map = (rng.raw() & 1u) ? BitMap::gray : BitMap::natural;
            SymbolSequence tgt;
            tgt.n_levels = n_levels;
            tgt.sym.resize(n_sym);
            for (std::size_t i = 0; i < n_sym; ++i)
                tgt.sym[i] = i < std::size_t(n_levels) ? int(i) : int(rng.raw() % std::uint64_t(n_levels));
            std::vector<double> center(static_cast<std::size_t>(n_levels));
            for (int v = 0; v < n_levels; ++v)
                center[std::size_t(v)] = double(v) + 0.3 * (rng.uniform() - 0.5);
            const double sigma = 0.05 + 0.45 * rng.uniform();
            ElectricalTrace t;
            t.sps = 2;
            t.rate_hz = 2.0;
            t.s.resize(n_sym * 2);
            for (std::size_t i = 0; i < n_sym; ++i) {
                double v = center[std::size_t(tgt.sym[i])];
                if (rng.uniform() > 0.1) v += sigma * rng.normal();
                if (rng.uniform() < 0.1) v = -v;
                t.s[i * 2] = v;
                t.s[i * 2 + 1] = rng.uniform(-5.0, 5.0);
            }

            const LevelStats st = level_stats(t, tgt, 0);
            const double l1 = loss_l1(st);
            const std::vector<double> thr = decision_thresholds(st);
            const BerResult ber = measure_ber(t, tgt, st, map);

            // direct recomputation from sorted per-level tails
            std::vector<std::vector<double>> groups(static_cast<std::size_t>(n_levels));
            for (std::size_t i = 0; i < n_sym; ++i)
                groups[std::size_t(tgt.sym[i])].push_back(t.s[i * 2]);
            std::vector<double> el(std::size_t(n_levels), 0.0);
            std::vector<double> er(std::size_t(n_levels), 0.0);
            for (int v = 0; v < n_levels; ++v) {
                auto& g = groups[std::size_t(v)];
                std::sort(g.begin(), g.end());
                const std::size_t nt = std::max<std::size_t>(1, g.size() / 10);
                double lo = 0.0, hi = 0.0;
                for (std::size_t i = 0; i < nt; ++i) {
                    lo += g[i];
                    hi += g[g.size() - 1 - i];
                }
                el[std::size_t(v)] = std::abs(lo / double(nt));
                er[std::size_t(v)] = std::abs(hi / double(nt));
            }
            double l1_b = -std::numeric_limits<double>::infinity();
            for (int v = 0; v + 1 < n_levels; ++v)
                l1_b = std::max(l1_b, er[std::size_t(v)] - el[std::size_t(v + 1)]);
            max_dev = std::max(max_dev, std::abs(l1 - l1_b));
            std::vector<double> thr_b(static_cast<std::size_t>(n_levels - 1));
            for (int v = 0; v + 1 < n_levels; ++v)
                thr_b[std::size_t(v)] = 0.5 * (er[std::size_t(v)] + el[std::size_t(v + 1)]);
            for (std::size_t j = 0; j < thr_b.size(); ++j)
                max_dev = std::max(max_dev, std::abs(thr[j] - thr_b[j]));
            int bps = 0;
            for (int v = n_levels; v > 1; v >>= 1) ++bps;
            std::uint64_t errors_b = 0;
            for (std::size_t i = 0; i < n_sym; ++i) {
                int d = 0;
                for (double b : thr_b) d += (t.s[i * 2] > b) ? 1 : 0;
                const int eg = map == BitMap::gray ? (d ^ (d >> 1)) : d;
                const int wg = map == BitMap::gray ? (tgt.sym[i] ^ (tgt.sym[i] >> 1)) : tgt.sym[i];
                for (int b = 0; b < bps; ++b) errors_b += ((eg >> b) & 1) != ((wg >> b) & 1) ? 1u : 0u;
            }
            if (ber.errors != errors_b || ber.bits != n_sym * std::uint64_t(bps) ||
                ber.at_floor != (errors_b == 0))
                ++exact_mismatches;
        }
        checks.push_back({"metrics_bruteforce_max_dev", max_dev,
                          max_dev < 1e-12 && exact_mismatches == 0});
    }

    bool all = true;
    std::string tsv = "check\tvalue\tpass\n";
    for (const Check& c : checks) {
        all = all && c.pass;
        tsv += c.name;
        tsv += '\t';
        tsv += format_double(c.value);
        tsv += '\t';
        tsv += c.pass ? '1' : '0';
        tsv += '\n';
    }
    fs::create_directories(out_dir);
    write_text(out_dir / "selftest.tsv", tsv);
    return all;
}

}  // namespace pnnsim
