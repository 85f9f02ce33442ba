#include "nomafl/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "nomafl/errors.hpp"

namespace nomafl::harness {

std::string to_string(ErrorModel m) {
    return m == ErrorModel::analytic_injection ? "analytic_injection" : "full_detection";
}

namespace {

ErrorModel error_model_from_string(const std::string& s) {
    if (s == "analytic_injection") return ErrorModel::analytic_injection;
    if (s == "full_detection") return ErrorModel::full_detection;
    throw ConfigError("unknown error_model '" + s + "'");
}

modem::ScaleMode scale_mode_from_string(const std::string& s) {
    if (s == "per_device_round") return modem::ScaleMode::per_device_round;
    if (s == "fixed") return modem::ScaleMode::fixed;
    throw ConfigError("unknown modem.scale_mode '" + s + "'");
}

// Overlays `user` onto `base`, refusing keys or types the schema lacks.
void merge_checked(json& base, const json& user, const std::string& path) {
    if (!user.is_object()) {
        throw ConfigError("config: expected an object at '" + (path.empty() ? "<root>" : path) + "'");
    }
    for (const auto& [key, value] : user.items()) {
        const std::string here = path.empty() ? key : path + "." + key;
        if (!base.contains(key)) {
            throw ConfigError("config: unknown key '" + here + "'");
        }
        json& slot = base[key];
        if (slot.is_object()) {
            merge_checked(slot, value, here);
            continue;
        }
        const bool ok = slot.is_null()      ? (value.is_null() || value.is_number())
                        : slot.is_number()  ? value.is_number()
                        : slot.is_string()  ? value.is_string()
                        : slot.is_boolean() ? value.is_boolean()
                        : slot.is_array()   ? value.is_array()
                                            : false;
        if (!ok) {
            throw ConfigError("config: wrong type for '" + here + "' (got " + value.type_name() + ")");
        }
        slot = value;
    }
}

std::optional<double> opt_number(const json& j) {
    if (j.is_null()) {
        return std::nullopt;
    }
    return j.get<double>();
}

std::size_t non_negative(const json& j, const std::string& name) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) {
        throw ConfigError("config: '" + name + "' must be an integer");
    }
    const auto v = j.get<long long>();
    if (v < 0) {
        throw ConfigError("config: '" + name + "' must be >= 0");
    }
    return static_cast<std::size_t>(v);
}

bool is_power_of_two_order(std::uint32_t m) { return m >= 4 && (m & (m - 1)) == 0; }

}  // namespace

// Calibrated values with no external reference: geometry.devices,
// channel.antennas, channel.sigma2, channel.reference_snr_db and everything
// under training and dataset. They put the per-device SER at M=16 between
// roughly 1e-6 and 0.6 and keep a run well under a second.
json default_config_json() {
    return json::parse(R"({
  "seed": 1,
  "geometry": {
    "bs": [-50.0, 0.0, 10.0],
    "region": {"x_min": 100.0, "x_max": 150.0, "y_min": -25.0, "y_max": 25.0, "z": 0.0},
    "devices": 12
  },
  "channel": {
    "antennas": 8,
    "rician_k": 0.0,
    "sigma2": 1.0,
    "reference_snr_db": 25.0,
    "tx_power": null,
    "gain_bs_dbi": 5.0,
    "gain_device_dbi": 0.0,
    "carrier_hz": 915000000.0,
    "path_loss_exponent": 3.76
  },
  "modem": {
    "bits_per_entry": 4,
    "bits_per_symbol": 4,
    "scale_mode": "per_device_round",
    "clip_max": 1.0,
    "quantize": true
  },
  "selection": {
    "policy": "ser_dsm",
    "tr_ser": 0.01,
    "acceptance": "analytic",
    "schedule": []
  },
  "training": {
    "learning_rate": 1.0,
    "rounds": 40,
    "hidden": 32,
    "local_batch": 0,
    "local_epochs": 1
  },
  "dataset": {
    "source": "blobs",
    "seed": null,
    "classes": 10,
    "dim": 32,
    "per_class": 50,
    "test_per_class": 100,
    "separation": 0.5,
    "noise": 1.0,
    "dir": "",
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
    "train_subset": 0,
    "test_subset": 0
  },
  "error_model": "analytic_injection",
  "ser_override": null,
  "convergence": {
    "mu": 0.1,
    "lipschitz": 1.0,
    "zeta1": 1.0,
    "zeta2": 0.1,
    "initial_gap": null
  }
})");
}

ExperimentConfig config_from_json(const json& user) {
    json doc = default_config_json();
    merge_checked(doc, user, "");

    ExperimentConfig c;
    c.source = doc;
    c.seed = doc["seed"].get<std::uint64_t>();

    const auto& g = doc["geometry"];
    const auto& bs = g["bs"];
    if (bs.size() != 3) {
        throw ConfigError("config: geometry.bs must have three coordinates");
    }
    c.bs = {bs[0].get<double>(), bs[1].get<double>(), bs[2].get<double>()};
    const auto& r = g["region"];
    c.region = {r["x_min"].get<double>(), r["x_max"].get<double>(), r["y_min"].get<double>(),
                r["y_max"].get<double>(), r["z"].get<double>()};
    c.devices = non_negative(g["devices"], "geometry.devices");

    const auto& ch = doc["channel"];
    c.fading.antennas = ch["antennas"].get<int>();
    c.fading.rician_k_factor = ch["rician_k"].get<double>();
    c.sigma2 = ch["sigma2"].get<double>();
    c.reference_snr_db = ch["reference_snr_db"].get<double>();
    c.tx_power = opt_number(ch["tx_power"]);
    c.path_loss = {ch["gain_bs_dbi"].get<double>(), ch["gain_device_dbi"].get<double>(),
                   ch["carrier_hz"].get<double>(), ch["path_loss_exponent"].get<double>()};

    const auto& m = doc["modem"];
    c.quantizer.bits_per_entry = m["bits_per_entry"].get<int>();
    c.quantizer.clip_max = m["clip_max"].get<double>();
    c.quantizer.scale_mode = scale_mode_from_string(m["scale_mode"].get<std::string>());
    c.bits_per_symbol = m["bits_per_symbol"].get<int>();
    c.quantize = m["quantize"].get<bool>();

    const auto& s = doc["selection"];
    c.selection.policy = selection::policy_from_string(s["policy"].get<std::string>());
    c.selection.tr_ser = s["tr_ser"].get<double>();
    c.selection.mode = selection::acceptance_mode_from_string(s["acceptance"].get<std::string>());
    c.schedule = s["schedule"].get<std::vector<int>>();

    const auto& t = doc["training"];
    c.train.learning_rate = t["learning_rate"].get<double>();
    c.train.local_batch = non_negative(t["local_batch"], "training.local_batch");
    c.train.local_epochs = t["local_epochs"].get<int>();
    c.rounds = non_negative(t["rounds"], "training.rounds");
    c.hidden = t["hidden"].get<int>();

    const auto& d = doc["dataset"];
    c.dataset.source = d["source"].get<std::string>();
    if (!d["seed"].is_null()) {
        c.dataset.seed = non_negative(d["seed"], "dataset.seed");
    }
    c.dataset.classes = d["classes"].get<int>();
    c.dataset.blobs.classes = c.dataset.classes;
    c.dataset.blobs.dim = d["dim"].get<int>();
    c.dataset.blobs.per_class = non_negative(d["per_class"], "dataset.per_class");
    c.dataset.blobs.separation = d["separation"].get<double>();
    c.dataset.blobs.noise = d["noise"].get<double>();
    c.dataset.test_per_class = non_negative(d["test_per_class"], "dataset.test_per_class");
    c.dataset.dir = d["dir"].get<std::string>();
    c.dataset.train_images = d["train_images"].get<std::string>();
    c.dataset.train_labels = d["train_labels"].get<std::string>();
    c.dataset.test_images = d["test_images"].get<std::string>();
    c.dataset.test_labels = d["test_labels"].get<std::string>();
    c.dataset.train_subset = non_negative(d["train_subset"], "dataset.train_subset");
    c.dataset.test_subset = non_negative(d["test_subset"], "dataset.test_subset");
    if (c.dataset.source == "idx" && c.dataset.dir.empty()) {
        if (const char* env = std::getenv("NOMAFL_DATA_DIR")) {
            c.dataset.dir = env;
        }
    }

    c.error_model = error_model_from_string(doc["error_model"].get<std::string>());
    c.ser_override = opt_number(doc["ser_override"]);

    const auto& cv = doc["convergence"];
    c.convergence = {cv["mu"].get<double>(), cv["lipschitz"].get<double>(), cv["zeta1"].get<double>(),
                     cv["zeta2"].get<double>()};
    c.initial_gap = opt_number(cv["initial_gap"]);

    c.validate();
    return c;
}

modem::ModulationConfig ExperimentConfig::modulation() const {
    return modem::ModulationConfig::for_codeword(quantizer.bits_per_entry, bits_per_symbol);
}

std::vector<int> ExperimentConfig::effective_schedule() const {
    return schedule.empty() ? std::vector<int>(devices, 1) : schedule;
}

void ExperimentConfig::validate() const {
    if (devices == 0) {
        throw ConfigError("config: geometry.devices must be >= 1");
    }
    if (!(region.x_min <= region.x_max) || !(region.y_min <= region.y_max)) {
        throw ConfigError("config: region bounds are inverted");
    }
    if (fading.antennas < 1) {
        throw ConfigError("config: channel.antennas must be >= 1");
    }
    if (!(fading.rician_k_factor >= 0.0)) {
        throw ConfigError("config: channel.rician_k must be >= 0");
    }
    if (!(sigma2 > 0.0)) {
        throw ConfigError("config: channel.sigma2 must be > 0");
    }
    if (tx_power && !(*tx_power >= 0.0)) {
        throw ConfigError("config: channel.tx_power must be >= 0");
    }
    if (!(path_loss.carrier_hz > 0.0) || !(path_loss.exponent > 0.0)) {
        throw ConfigError("config: carrier_hz and path_loss_exponent must be > 0");
    }
    try {
        quantizer.validate();
        const auto mod = modulation();
        if (!is_power_of_two_order(mod.order())) {
            throw ConfigError("config: modulation order must be >= 4");
        }
        selection.validate();
        train.validate();
        convergence.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!schedule.empty()) {
        if (schedule.size() != devices) {
            throw ConfigError("config: selection.schedule must list one entry per device");
        }
        for (int a : schedule) {
            if (a != 0 && a != 1) {
                throw ConfigError("config: selection.schedule entries must be 0 or 1");
            }
        }
    }
    if (rounds == 0) {
        throw ConfigError("config: training.rounds must be >= 1");
    }
    if (hidden < 0) {
        throw ConfigError("config: training.hidden must be >= 0");
    }
    if (ser_override && !(*ser_override >= 0.0 && *ser_override <= 1.0)) {
        throw ConfigError("config: ser_override must be in [0, 1]");
    }
    if (!quantize && error_model != ErrorModel::analytic_injection) {
        throw ConfigError("config: modem.quantize=false needs error_model=analytic_injection");
    }
    if (!quantize && (!ser_override || *ser_override != 0.0)) {
        throw ConfigError("config: modem.quantize=false describes an error-free link; set ser_override=0");
    }
    if (dataset.source == "idx") {
        namespace fs = std::filesystem;
        for (const auto* name : {&dataset.train_images, &dataset.train_labels, &dataset.test_images,
                                 &dataset.test_labels}) {
            const fs::path p = fs::path(dataset.dir) / *name;
            if (!fs::exists(p)) {
                throw ConfigError("config: dataset file not found: " + p.string());
            }
        }
    } else if (dataset.source == "blobs") {
        if (dataset.blobs.per_class * static_cast<std::size_t>(dataset.classes) < devices) {
            throw ConfigError("config: fewer training samples than devices");
        }
        if (dataset.test_per_class == 0) {
            throw ConfigError("config: dataset.test_per_class must be >= 1");
        }
    } else {
        throw ConfigError("config: dataset.source must be 'blobs' or 'idx'");
    }
    if (dataset.classes < 2) {
        throw ConfigError("config: dataset.classes must be >= 2");
    }
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) {
            throw ConfigError("override '" + assignment + "' has an empty key segment");
        }
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (!node->is_object()) {
            *node = json::object();
        }
        start = dot + 1;
    }
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    json doc = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("config: cannot open " + path);
        }
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config: " + path + ": " + e.what());
        }
    }
    for (const auto& o : overrides) {
        apply_override(doc, o);
    }
    return config_from_json(doc);
}

}  // namespace nomafl::harness
