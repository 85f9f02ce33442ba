// Command-line front end: run, sweep, validate-ser.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nomafl/errors.hpp"
#include "nomafl/harness.hpp"

namespace {

using namespace nomafl;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

void print_round(const harness::RoundRecord& r) {
    std::printf("round %4zu  loss %.4f  acc %.4f  accepted %zu%s\n", r.round, r.train_loss,
                r.test_accuracy, r.accepted_devices, r.all_rejected ? "  (all rejected)" : "");
}

int cmd_run(const std::string& config, const std::vector<std::string>& overrides,
            const std::string& out, bool quiet) {
    const auto cfg = harness::load_config(config, overrides);
    const auto res = harness::run_experiment(cfg);
    if (!quiet) {
        for (const auto& r : res.rounds) {
            print_round(r);
        }
    }
    harness::write_outputs(out, cfg, res);
    std::printf("final accuracy %.4f, outputs %s.csv / %s.json\n", res.rounds.back().test_accuracy,
                out.c_str(), out.c_str());
    return 0;
}

int cmd_sweep(const std::string& config, const std::vector<std::string>& overrides,
              const std::string& axis_name, const std::string& values, const std::string& out) {
    const auto cfg = harness::load_config(config, overrides);
    const auto axis = harness::sweep_axis_from_string(axis_name);
    const auto list = split_list(values);
    const auto entries = harness::sweep(cfg, axis, list);
    harness::write_sweep(out, cfg, axis, entries);
    std::printf("%-24s %10s %10s\n", axis_name.c_str(), "accuracy", "accepted");
    for (const auto& e : entries) {
        const auto js = harness::summary_json(cfg, e.result);
        std::printf("%-24s %10.4f %10.2f\n", e.value.c_str(), js["final_test_accuracy"].get<double>(),
                    js["mean_accepted_devices"].get<double>());
    }
    std::printf("outputs in %s\n", out.c_str());
    return 0;
}

int cmd_validate(const std::string& config, const std::vector<std::string>& overrides,
                 std::size_t symbols, bool awgn, const std::string& targets) {
    if (awgn) {
        const auto cfg = harness::load_config(config, overrides);
        const int bits = cfg.bits_per_symbol;
        const auto order = 1u << bits;
        std::printf("single-user AWGN, M=%u, %zu symbols per point\n", order, symbols);
        std::printf("%12s %12s %12s %10s\n", "snr_db", "analytic", "empirical", "z");
        for (const auto& t : split_list(targets)) {
            const double snr = harness::snr_for_ser(std::stod(t), order);
            const auto p = harness::awgn_ser_point(bits, snr, symbols, cfg.seed);
            std::printf("%12.3f %12.4e %12.4e %10.2f\n", 10.0 * std::log10(snr), p.analytic,
                        p.empirical, p.z_score());
        }
        return 0;
    }
    const auto cfg = harness::load_config(config, overrides);
    const auto rows = harness::validate_ser(cfg, symbols);
    std::printf("%6s %6s %12s %12s %12s %10s\n", "device", "stage", "sinr_db", "analytic", "empirical",
                "errors");
    for (const auto& r : rows) {
        std::printf("%6zu %6zu %12.3f %12.4e %12.4e %10zu\n", r.device, r.stage,
                    10.0 * std::log10(r.sinr), r.analytic, r.empirical, r.errors);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated learning over a NOMA uplink: simulation and sweeps"};
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> overrides;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config,-c", config, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--override,-o", overrides, "key=value override (repeatable)");
    };

    auto* run = app.add_subcommand("run", "run one experiment");
    add_common(run);
    std::string run_out = "run";
    bool quiet = false;
    run->add_option("--out", run_out, "output stem; writes <stem>.csv and <stem>.json");
    run->add_flag("--quiet,-q", quiet, "do not print per-round progress");

    auto* sw = app.add_subcommand("sweep", "run one experiment per value of an axis");
    add_common(sw);
    std::string axis;
    std::string values;
    std::string sweep_out = "sweep";
    sw->add_option("--axis", axis, "modulation_order | tr_ser | policy")->required();
    sw->add_option("--values", values, "comma-separated values")->required();
    sw->add_option("--out", sweep_out, "output directory");

    auto* val = app.add_subcommand("validate-ser", "Monte-Carlo vs analytic SER report");
    add_common(val);
    std::size_t symbols = 200000;
    bool awgn = false;
    std::string targets = "0.3,0.1,0.03,0.01,0.003,0.001";
    val->add_option("--symbols", symbols, "symbols per device (or per AWGN point)");
    val->add_flag("--awgn", awgn, "single-user AWGN check at the configured order");
    val->add_option("--targets", targets, "analytic SER targets for --awgn");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(config, overrides, run_out, quiet);
        }
        if (*sw) {
            return cmd_sweep(config, overrides, axis, values, sweep_out);
        }
        if (*val) {
            return cmd_validate(config, overrides, symbols, awgn, targets);
        }
    } catch (const nomafl::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
