#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nomafl/channel.hpp"
#include "nomafl/convergence.hpp"
#include "nomafl/dataset.hpp"
#include "nomafl/fl_core.hpp"
#include "nomafl/modem.hpp"
#include "nomafl/selection.hpp"

namespace nomafl::harness {

using json = nlohmann::json;

enum class ErrorModel { analytic_injection, full_detection };

std::string to_string(ErrorModel m);

struct DatasetConfig {
    std::string source = "blobs";  // "blobs" or "idx"
    data::BlobSpec blobs;
    std::optional<std::uint64_t> seed;  // blobs only; unset => master seed
    std::size_t test_per_class = 100;
    std::string dir;  // idx only; falls back to $NOMAFL_DATA_DIR
    std::string train_images = "train-images-idx3-ubyte";
    std::string train_labels = "train-labels-idx1-ubyte";
    std::string test_images = "t10k-images-idx3-ubyte";
    std::string test_labels = "t10k-labels-idx1-ubyte";
    int classes = 10;
    std::size_t train_subset = 0;  // 0 => all
    std::size_t test_subset = 0;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;

    channel::Position3D bs{-50.0, 0.0, 10.0};
    channel::Region region;
    std::size_t devices = 12;

    channel::PathLossParams path_loss;
    channel::FadingParams fading;
    double sigma2 = 1.0;
    double reference_snr_db = 25.0;
    std::optional<double> tx_power;  // overrides reference_snr_db when set

    modem::QuantizerConfig quantizer;
    int bits_per_symbol = 4;
    bool quantize = true;

    selection::SelectionConfig selection;
    std::vector<int> schedule;  // a_k; empty => all scheduled

    fl::TrainConfig train;
    std::size_t rounds = 40;
    int hidden = 32;

    DatasetConfig dataset;

    ErrorModel error_model = ErrorModel::analytic_injection;
    std::optional<double> ser_override;

    convergence::ConvergenceParams convergence;
    std::optional<double> initial_gap;

    /// Merged document (defaults + user values) this config was built from.
    json source;

    modem::ModulationConfig modulation() const;
    std::vector<int> effective_schedule() const;
    void validate() const;
};

/// Default configuration document; doubles as the schema. Every key a user
/// file may set appears here, and values of null mark optional numbers.
json default_config_json();

/// Builds a config from a user document merged over the defaults. Unknown
/// keys and type mismatches raise ConfigError naming the offending path.
ExperimentConfig config_from_json(const json& user);

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Applies "a.b.c=value" to a document. The value is parsed as JSON when
/// possible and taken as a plain string otherwise.
void apply_override(json& doc, const std::string& assignment);

}  // namespace nomafl::harness
