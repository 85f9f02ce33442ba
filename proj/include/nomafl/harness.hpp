#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "nomafl/config.hpp"
#include "nomafl/noma_receiver.hpp"

namespace nomafl::harness {

/// Metrics for one communication round.
struct RoundRecord {
    std::size_t round = 0;  // 1-based
    double train_loss = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0;
    std::size_t accepted_devices = 0;
    double effective_data = 0.0;
    bool all_rejected = false;
    double a = 0.0;
    double bound = 0.0;
    std::vector<double> ser;
    std::vector<double> sinr;
    std::vector<std::size_t> symbol_errors;
    std::vector<int> accepted;
};

/// Everything fixed before the first round: layout, channel and link state.
struct Setup {
    std::vector<channel::Position3D> positions;
    std::vector<double> path_loss;
    channel::ChannelRealization channels;
    std::vector<double> powers;  // transmit amplitude p_k
    noma::LinkQuality link;
    std::vector<double> ser;     // SER driving selection/injection (override applied)
    std::vector<fl::Dataset> device_data;
    fl::Dataset train;           // pooled device data
    fl::Dataset test;
    fl::ModelShape shape;
    fl::Params initial_params;
    std::vector<double> data_sizes;
    std::vector<int> schedule;
    std::vector<double> xi;
    double a = 0.0;
    convergence::ConditionReport condition;
    double initial_gap = 0.0;
};

Setup prepare(const ExperimentConfig& cfg);

struct ExperimentResult {
    Setup setup;
    fl::Evaluation initial_test;
    double initial_train_loss = 0.0;
    std::vector<RoundRecord> rounds;
    fl::Params final_params;
    std::vector<std::string> events;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Threshold that plays tr_SER in Xi_k for the configured policy: tr_ser for
/// SER-DSM, 0 for the packet-error baseline, 1 when nobody is rejected.
double effective_threshold(const selection::SelectionConfig& cfg);

/// CSV with a fixed column set; see README for the columns.
void write_csv(std::ostream& out, const ExperimentResult& result);
nlohmann::json summary_json(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Writes <stem>.csv and <stem>.json.
void write_outputs(const std::filesystem::path& stem, const ExperimentConfig& cfg,
                   const ExperimentResult& result);

enum class SweepAxis { modulation_order, tr_ser, policy };

SweepAxis sweep_axis_from_string(const std::string& s);
std::string to_string(SweepAxis a);

/// Copy of `base` with the swept axis set to `value`. For the policy axis a
/// number means SER-DSM at that threshold.
ExperimentConfig sweep_member(const ExperimentConfig& base, SweepAxis axis, const std::string& value);

struct SweepEntry {
    std::string value;
    ExperimentResult result;
};

/// Runs one experiment per value with the same seed, so placement, fading
/// and data are shared and only the swept axis differs.
std::vector<SweepEntry> sweep(const ExperimentConfig& base, SweepAxis axis,
                              const std::vector<std::string>& values);

void write_sweep(const std::filesystem::path& dir, const ExperimentConfig& base, SweepAxis axis,
                 const std::vector<SweepEntry>& entries);

/// Per-device Monte-Carlo check of analytic SER against full MMSE-SIC
/// detection of random symbols over the configured channel.
struct SerCheckRow {
    std::size_t device = 0;
    std::size_t stage = 0;
    double sinr = 0.0;
    double analytic = 0.0;
    double empirical = 0.0;
    std::size_t errors = 0;
    std::size_t symbols = 0;
};

std::vector<SerCheckRow> validate_ser(const ExperimentConfig& cfg, std::size_t symbols);

/// Single-user AWGN point (K = N = 1, h = p = 1): transmit and detect
/// `symbols` random symbols at linear SNR `snr`.
struct AwgnPoint {
    std::uint32_t order = 0;
    double snr = 0.0;
    double analytic = 0.0;
    double empirical = 0.0;
    std::size_t errors = 0;
    std::size_t symbols = 0;
    /// |empirical - analytic| in binomial standard deviations.
    double z_score() const;
};

AwgnPoint awgn_ser_point(int bits_per_symbol, double snr, std::size_t symbols, std::uint64_t seed);

/// Linear SNR at which analytic_ser equals `target` (bisection).
double snr_for_ser(double target, std::uint32_t order);

}  // namespace nomafl::harness
