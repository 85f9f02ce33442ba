#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nomafl/errors.hpp"
#include "nomafl/harness.hpp"

using namespace nomafl;
using namespace nomafl::harness;
using nlohmann::json;

namespace {

json tiny() {
    return json::parse(R"({
      "geometry": {"devices": 4},
      "channel": {"antennas": 2},
      "training": {"rounds": 4, "hidden": 4, "learning_rate": 0.5},
      "dataset": {"dim": 6, "classes": 3, "per_class": 20, "test_per_class": 10}
    })");
}

std::string csv_of(const ExperimentResult& r) {
    std::ostringstream os;
    write_csv(os, r);
    return os.str();
}

}  // namespace

TEST_CASE("config rejects unknown keys and bad types") {
    auto j = tiny();
    j["training"]["rate"] = 1.0;
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
    auto k = tiny();
    k["training"]["rounds"] = "many";
    CHECK_THROWS_AS(config_from_json(k), ConfigError);
    auto l = tiny();
    l["selection"]["policy"] = "everyone";
    CHECK_THROWS_AS(config_from_json(l), ConfigError);
}

TEST_CASE("defaults are filled in and overrides apply") {
    auto cfg = config_from_json(json::object());
    CHECK(cfg.selection.tr_ser == 0.01);
    CHECK(cfg.path_loss.exponent == 3.76);
    auto doc = tiny();
    apply_override(doc, "selection.tr_ser=0.1");
    apply_override(doc, "selection.policy=no_selection");
    auto c2 = config_from_json(doc);
    CHECK(c2.selection.tr_ser == 0.1);
    CHECK(c2.selection.policy == selection::Policy::no_selection);
    CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
}

TEST_CASE("the error-free bypass requires a zero SER") {
    auto j = tiny();
    j["modem"]["quantize"] = false;
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
    j["ser_override"] = 0.0;
    CHECK_NOTHROW(config_from_json(j));
}

TEST_CASE("runs are deterministic") {
    auto cfg = config_from_json(tiny());
    CHECK(csv_of(run_experiment(cfg)) == csv_of(run_experiment(cfg)));
    auto other = tiny();
    other["seed"] = 2;
    CHECK(csv_of(run_experiment(cfg)) != csv_of(run_experiment(config_from_json(other))));
}

TEST_CASE("a noiseless link matches an explicitly error-free run") {
    auto j = tiny();
    j["channel"]["antennas"] = 4;
    j["channel"]["sigma2"] = 1e-30;
    j["channel"]["tx_power"] = 1.0;
    auto quiet = run_experiment(config_from_json(j));
    for (double s : quiet.setup.ser) {
        CHECK(s == 0.0);
    }
    j["ser_override"] = 0.0;
    auto forced = run_experiment(config_from_json(j));
    REQUIRE(quiet.final_params.size() == forced.final_params.size());
    CHECK(quiet.final_params == forced.final_params);
}

TEST_CASE("a zero threshold excludes every device with positive SER") {
    auto j = tiny();
    j["selection"]["tr_ser"] = 0.0;
    j["channel"]["reference_snr_db"] = 10.0;
    auto r = run_experiment(config_from_json(j));
    for (const auto& rec : r.rounds) {
        for (std::size_t k = 0; k < rec.ser.size(); ++k) {
            if (rec.ser[k] > 0.0) {
                CHECK(rec.accepted[k] == 0);
            }
        }
    }
}

TEST_CASE("all-rejected rounds keep the previous model") {
    auto j = tiny();
    j["ser_override"] = 0.5;
    auto r = run_experiment(config_from_json(j));
    for (const auto& rec : r.rounds) {
        CHECK(rec.all_rejected);
        CHECK(rec.accepted_devices == 0);
    }
    CHECK(r.final_params == r.setup.initial_params);
    CHECK(!r.events.empty());
}

TEST_CASE("full detection runs end to end") {
    auto j = tiny();
    j["error_model"] = "full_detection";
    j["training"]["rounds"] = 2;
    auto r = run_experiment(config_from_json(j));
    CHECK(r.rounds.size() == 2);
    CHECK(r.rounds.back().symbol_errors.size() == 4);
}

TEST_CASE("single-value sweep equals a plain run") {
    auto cfg = config_from_json(tiny());
    auto s = sweep(cfg, SweepAxis::tr_ser, {"0.01"});
    REQUIRE(s.size() == 1);
    CHECK(csv_of(s[0].result) == csv_of(run_experiment(cfg)));
    auto m = sweep_member(cfg, SweepAxis::modulation_order, "64");
    CHECK(m.bits_per_symbol == 6);
    CHECK(m.quantizer.bits_per_entry == 6);
    auto p = sweep_member(cfg, SweepAxis::policy, "0.001");
    CHECK(p.selection.policy == selection::Policy::ser_dsm);
    CHECK(p.selection.tr_ser == 0.001);
}

TEST_CASE("outputs are written") {
    auto cfg = config_from_json(tiny());
    auto r = run_experiment(cfg);
    const auto stem = std::filesystem::temp_directory_path() / "nomafl_test_run";
    write_outputs(stem, cfg, r);
    std::ifstream csv(stem.string() + ".csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header.rfind("round,train_loss,test_loss,test_accuracy,accepted_devices", 0) == 0);
    std::ifstream js(stem.string() + ".json");
    auto summary = json::parse(js);
    CHECK(summary.contains("final_test_accuracy"));
}

TEST_CASE("SNR bisection inverts the analytic SER") {
    for (std::uint32_t m : {4u, 16u, 64u}) {
        for (double t : {1e-3, 0.05, 0.3}) {
            CHECK(noma::analytic_ser(snr_for_ser(t, m), m) == doctest::Approx(t).epsilon(1e-8));
        }
    }
}
