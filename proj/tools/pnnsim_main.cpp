#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pnnsim/experiments.hpp"
#include "pnnsim/parallel.hpp"

namespace {

pnnsim::Scenario load_scenario(const std::string& path, std::optional<std::uint64_t> seed) {
    pnnsim::Scenario sc =
        path.empty() ? pnnsim::Scenario{} : pnnsim::Scenario::from_json_file(path);
    if (seed) sc.seed = *seed;
    return sc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator of a dispersive PAM4 fiber link equalized by a photonic "
                 "tapped-delay-line neural network"};
    app.require_subcommand(1);
    app.fallthrough();  // accept the global flags after the verb as well

    std::string scenario_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    int repeats = 50;
    int threads = 0;
    if (const char* env = std::getenv("PNNSIM_THREADS")) threads = std::atoi(env);

    app.add_option("--scenario", scenario_path, "Scenario JSON file (defaults built in)");
    app.add_option("--seed", seed, "Override the scenario seed");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--repeats", repeats, "Measurements per point (seeds per offset for freq-sweep)")
        ->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "Worker thread cap (0 = runtime default)");

    CLI::App* c_train = app.add_subcommand("train", "Train the device and write the weight set");
    CLI::App* c_ber = app.add_subcommand("ber-scan", "BER vs received power for the link variants");
    CLI::App* c_pen = app.add_subcommand("penalty", "Small-signal power penalty vs frequency");
    CLI::App* c_freq =
        app.add_subcommand("freq-sweep", "Loss vs laser detuning and its periodicity");
    CLI::App* c_heat =
        app.add_subcommand("heatmap", "Loss over the (channel count, delay unit) grid");
    CLI::App* c_cmp = app.add_subcommand(
        "ideal-compare", "Trained vs analytic vs dense-ideal equalizer BER curves");
    CLI::App* c_self = app.add_subcommand("selftest", "Deterministic end-to-end checks");

    bool freq_repeats_given = false;
    app.callback([&] { freq_repeats_given = app.count("--repeats") > 0; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        pnnsim::par::set_thread_limit(threads);
        const pnnsim::Scenario sc = load_scenario(scenario_path, seed);

        if (c_train->parsed()) {
            const pnnsim::TrainArtifacts art = pnnsim::train_scenario(sc, {}, out_dir);
            std::printf("strategy %s: loss %.4f +/- %.4f, ber %.3e%s (%zu evaluations, %.1f s)\n",
                        strategy_name(art.run.strategy).c_str(), art.run.final_loss_mean,
                        art.run.final_loss_std, art.eval.ber.ber,
                        art.eval.ber.at_floor ? " (floor)" : "",
                        std::size_t(art.run.opt.evaluations), art.run.wall_time_s);
            std::printf("wrote %s/weights.json\n", out_dir.c_str());
        } else if (c_ber->parsed()) {
            const pnnsim::BerScan scan = pnnsim::ber_scan(sc, repeats, out_dir);
            std::printf("wrote %s/ber.tsv (%zu rows, %d repeats)\n", out_dir.c_str(),
                        scan.table.rows.size(), repeats);
        } else if (c_pen->parsed()) {
            const pnnsim::PenaltyCurve pc = pnnsim::penalty_sweep(sc, out_dir);
            std::printf("wrote %s/penalty.tsv (%zu frequencies)\n", out_dir.c_str(),
                        pc.freq_hz.size());
        } else if (c_freq->parsed()) {
            const int n_seeds = freq_repeats_given ? repeats : 20;
            const pnnsim::FreqSweep fsw = pnnsim::frequency_sweep(sc, out_dir, n_seeds);
            std::printf("autocorrelation peak at %.1f GHz\n", fsw.peak_lag_hz / 1e9);
            std::printf("wrote %s/sweep.tsv, %s/autocorr.tsv\n", out_dir.c_str(), out_dir.c_str());
        } else if (c_heat->parsed()) {
            const pnnsim::Heatmap hm = pnnsim::heatmap_scan(sc, out_dir);
            std::printf("wrote %s/heatmap.tsv (%zu cells)\n", out_dir.c_str(), hm.cells.size());
        } else if (c_cmp->parsed()) {
            const pnnsim::IdealCompare cmp = pnnsim::ideal_compare(sc, repeats, out_dir);
            std::printf("wrote %s/compare_ber.tsv and eye/l2 tables\n", out_dir.c_str());
            for (std::size_t c = 0; c < cmp.scan.curve_names.size(); ++c)
                std::printf("  %-14s loss %.4f at top power\n", cmp.scan.curve_names[c].c_str(),
                            cmp.l2_at_top[c]);
        } else if (c_self->parsed()) {
            const bool ok = pnnsim::selftest(out_dir, sc.seed);
            std::printf("selftest: %s (%s/selftest.tsv)\n", ok ? "PASS" : "FAIL", out_dir.c_str());
            if (!ok) return 2;
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
