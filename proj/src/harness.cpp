#include "nomafl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nomafl/errors.hpp"

namespace nomafl::harness {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

fl::Dataset load_train(const ExperimentConfig& cfg, fl::Dataset& test) {
    const auto& d = cfg.dataset;
    if (d.source == "blobs") {
        auto spec = d.blobs;
        const auto seed = d.seed.value_or(cfg.seed);
        auto train = data::make_blobs(spec, seed, 0);
        spec.per_class = d.test_per_class;
        test = data::make_blobs(spec, seed, 1);
        return train;
    }
    const std::filesystem::path dir(d.dir);
    auto train = data::load_idx(dir / d.train_images, dir / d.train_labels, d.classes);
    test = data::load_idx(dir / d.test_images, dir / d.test_labels, d.classes);
    auto train_rng = RngStream::derive(cfg.seed, "train-subset");
    auto test_rng = RngStream::derive(cfg.seed, "test-subset");
    test = data::random_subset(test, d.test_subset, test_rng);
    return data::random_subset(train, d.train_subset, train_rng);
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

}  // namespace

double effective_threshold(const selection::SelectionConfig& cfg) {
    switch (cfg.policy) {
        case selection::Policy::ser_dsm: return cfg.tr_ser;
        case selection::Policy::packet_error_baseline: return 0.0;
        case selection::Policy::no_selection: return 1.0;
    }
    return cfg.tr_ser;
}

Setup prepare(const ExperimentConfig& cfg) {
    cfg.validate();
    Setup s;
    auto placement = RngStream::derive(cfg.seed, "placement");
    s.positions = channel::place_devices(placement, cfg.region, cfg.devices);
    for (const auto& p : s.positions) {
        s.path_loss.push_back(channel::path_loss(p, cfg.bs, cfg.path_loss));
    }
    s.channels = channel::draw_channels(cfg.seed, s.positions, cfg.bs, cfg.path_loss, cfg.fading);

    const double power = cfg.tx_power ? *cfg.tx_power
                                      : channel::power_for_reference_snr(
                                            s.path_loss, cfg.fading.antennas, cfg.sigma2,
                                            cfg.reference_snr_db);
    s.powers.assign(cfg.devices, std::sqrt(power));

    const auto mod = cfg.modulation();
    s.link = noma::link_quality(s.channels, s.powers, cfg.sigma2, mod.order());
    s.ser = cfg.ser_override ? std::vector<double>(cfg.devices, *cfg.ser_override) : s.link.ser;

    auto train = load_train(cfg, s.test);
    auto part_rng = RngStream::derive(cfg.seed, "partition");
    s.device_data = data::partition(train, cfg.devices, part_rng);
    s.train = fl::Dataset::concat(s.device_data);

    s.shape = {s.train.dim(), cfg.hidden, cfg.dataset.classes};
    auto init_rng = RngStream::derive(cfg.seed, "init");
    s.initial_params = fl::init_params(s.shape, init_rng);

    for (const auto& d : s.device_data) {
        s.data_sizes.push_back(static_cast<double>(d.size()));
    }
    s.schedule = cfg.effective_schedule();

    const std::size_t symbols = s.shape.parameter_count() * static_cast<std::size_t>(mod.alpha);
    const double tr = effective_threshold(cfg.selection);
    for (double ser : s.ser) {
        s.xi.push_back(convergence::xi(ser, symbols, tr));
    }
    s.a = convergence::compute_a(cfg.convergence, s.data_sizes, s.schedule, s.xi);
    s.condition = convergence::check_condition(cfg.convergence, s.data_sizes, s.schedule, s.xi);
    s.initial_gap = cfg.initial_gap ? *cfg.initial_gap
                                    : fl::evaluate(s.shape, s.initial_params, s.train).loss;
    return s;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.setup = prepare(cfg);
    const Setup& s = res.setup;
    const auto mod = cfg.modulation();
    const auto& points = modem::constellation(mod.bits_per_symbol);
    const std::size_t devices = cfg.devices;
    const std::size_t q = s.shape.parameter_count();
    const std::size_t symbols = q * static_cast<std::size_t>(mod.alpha);
    const double lr = cfg.train.learning_rate;

    fl::Params w = s.initial_params;
    res.initial_test = fl::evaluate(s.shape, w, s.test);
    res.initial_train_loss = fl::evaluate(s.shape, w, s.train).loss;

    for (std::size_t round = 1; round <= cfg.rounds; ++round) {
        std::vector<std::vector<double>> received(devices);
        std::vector<std::size_t> errors(devices, 0);

        std::vector<std::vector<modem::Label>> labels(devices);
        std::vector<modem::QuantizerConfig> qcfg(devices, cfg.quantizer);
        std::vector<bool> zero_scale(devices, false);

        for (std::size_t k = 0; k < devices; ++k) {
            auto g = fl::local_update(s.shape, w, s.device_data[k], cfg.train);
            if (!cfg.quantize) {
                received[k] = std::move(g);
                continue;
            }
            if (cfg.quantizer.scale_mode == modem::ScaleMode::per_device_round) {
                const double scale = max_abs(g);
                zero_scale[k] = scale == 0.0;
                qcfg[k].clip_max = zero_scale[k] ? 1.0 : scale;
            }
            labels[k] = modem::to_labels(modem::quantize_vector(g, qcfg[k]), mod);
        }

        if (cfg.quantize) {
            if (cfg.error_model == ErrorModel::analytic_injection) {
                for (std::size_t k = 0; k < devices; ++k) {
                    auto rng = RngStream::derive(cfg.seed, "error-injection", round, k);
                    errors[k] = modem::inject_label_errors(labels[k], mod.order(), s.ser[k], rng);
                }
            } else {
                std::vector<modem::SymbolFrame> tx(devices);
                for (std::size_t k = 0; k < devices; ++k) {
                    tx[k].reserve(symbols);
                    for (auto l : labels[k]) {
                        tx[k].push_back(points.point(l));
                    }
                }
                auto noise_rng = RngStream::derive(cfg.seed, "noise", round);
                const auto y = channel::transmit_frame(tx, s.channels, s.powers,
                                                       channel::NoiseModel{cfg.sigma2}, noise_rng);
                auto det = noma::detect_frame(y, s.channels, s.powers, cfg.sigma2, mod, labels);
                errors = det.symbol_errors;
                for (std::size_t k = 0; k < devices; ++k) {
                    labels[k] = modem::to_labels(det.frames[k], mod);
                }
            }
            for (std::size_t k = 0; k < devices; ++k) {
                if (zero_scale[k]) {
                    received[k].assign(q, 0.0);
                    continue;
                }
                received[k] = modem::dequantize_vector(modem::from_labels(labels[k], mod), qcfg[k]);
            }
        }

        const auto decision =
            selection::decide(cfg.selection, s.ser, errors, symbols, s.data_sizes, s.schedule);

        RoundRecord rec;
        rec.round = round;
        rec.ser = s.ser;
        rec.sinr = s.link.sinr;
        rec.symbol_errors = errors;
        rec.accepted = decision.accepted;
        rec.effective_data = decision.total_weight;
        for (std::size_t k = 0; k < devices; ++k) {
            rec.accepted_devices += static_cast<std::size_t>(decision.accepted[k] * s.schedule[k]);
        }

        std::vector<std::vector<double>> local(devices);
        for (std::size_t k = 0; k < devices; ++k) {
            local[k].resize(q);
            for (std::size_t i = 0; i < q; ++i) {
                local[k][i] = w[i] - lr * received[k][i];
            }
        }
        try {
            w = selection::aggregate(local, s.data_sizes, s.schedule, decision.accepted);
        } catch (const NoParticipants&) {
            rec.all_rejected = true;
            res.events.push_back("round " + std::to_string(round) +
                                 ": no device accepted, global model kept");
        }

        rec.train_loss = fl::evaluate(s.shape, w, s.train).loss;
        const auto test = fl::evaluate(s.shape, w, s.test);
        rec.test_loss = test.loss;
        rec.test_accuracy = test.accuracy;
        rec.a = s.a;
        rec.bound = convergence::bound(round, s.a, cfg.convergence, s.data_sizes, s.schedule, s.xi,
                                       s.initial_gap);
        res.rounds.push_back(std::move(rec));
    }
    res.final_params = std::move(w);
    return res;
}

void write_csv(std::ostream& out, const ExperimentResult& result) {
    const std::size_t devices = result.setup.positions.size();
    out << "round,train_loss,test_loss,test_accuracy,accepted_devices,effective_data,all_rejected,A,bound";
    for (std::size_t k = 0; k < devices; ++k) {
        out << ",ser_" << k << ",sinr_" << k << ",errors_" << k << ",accepted_" << k;
    }
    out << '\n';
    for (const auto& r : result.rounds) {
        out << r.round << ',' << num(r.train_loss) << ',' << num(r.test_loss) << ','
            << num(r.test_accuracy) << ',' << r.accepted_devices << ',' << num(r.effective_data) << ','
            << (r.all_rejected ? 1 : 0) << ',' << num(r.a) << ',' << num(r.bound);
        for (std::size_t k = 0; k < devices; ++k) {
            out << ',' << num(r.ser[k]) << ',' << num(r.sinr[k]) << ',' << r.symbol_errors[k] << ','
                << r.accepted[k];
        }
        out << '\n';
    }
}

nlohmann::json summary_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
    const auto& s = result.setup;
    json j;
    j["seed"] = cfg.seed;
    j["config"] = cfg.source;
    j["parameters"] = s.shape.parameter_count();
    j["initial_test_accuracy"] = result.initial_test.accuracy;
    j["initial_train_loss"] = result.initial_train_loss;
    if (!result.rounds.empty()) {
        const auto& last = result.rounds.back();
        j["final_test_accuracy"] = last.test_accuracy;
        j["final_test_loss"] = last.test_loss;
        j["final_train_loss"] = last.train_loss;
    }
    double accepted = 0.0;
    std::size_t rejected_rounds = 0;
    for (const auto& r : result.rounds) {
        accepted += static_cast<double>(r.accepted_devices);
        rejected_rounds += r.all_rejected ? 1 : 0;
    }
    j["mean_accepted_devices"] = result.rounds.empty() ? 0.0 : accepted / static_cast<double>(result.rounds.size());
    j["all_rejected_rounds"] = rejected_rounds;
    j["events"] = result.events;
    json dev = json::array();
    for (std::size_t k = 0; k < s.positions.size(); ++k) {
        const auto stage = static_cast<std::size_t>(
            std::find(s.link.order.begin(), s.link.order.end(), k) - s.link.order.begin());
        dev.push_back({{"device", k},
                       {"position", {s.positions[k].x, s.positions[k].y, s.positions[k].z}},
                       {"path_loss", s.path_loss[k]},
                       {"channel_gain", s.channels.gain(k)},
                       {"sic_stage", stage},
                       {"sinr", s.link.sinr[k]},
                       {"ser", s.ser[k]},
                       {"xi", s.xi[k]},
                       {"data_size", s.data_sizes[k]}});
    }
    j["devices"] = dev;
    j["convergence"] = {{"A", s.a},
                        {"condition_holds", s.condition.converges},
                        {"condition_lhs", s.condition.lhs},
                        {"condition_rhs", s.condition.rhs},
                        {"initial_gap", s.initial_gap}};
    return j;
}

void write_outputs(const std::filesystem::path& stem, const ExperimentConfig& cfg,
                   const ExperimentResult& result) {
    if (stem.has_parent_path()) {
        std::filesystem::create_directories(stem.parent_path());
    }
    std::ofstream csv(stem.string() + ".csv", std::ios::binary);
    write_csv(csv, result);
    std::ofstream js(stem.string() + ".json", std::ios::binary);
    js << summary_json(cfg, result).dump(2) << '\n';
    if (!csv || !js) {
        throw Error("failed writing outputs for " + stem.string());
    }
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "modulation_order") return SweepAxis::modulation_order;
    if (s == "tr_ser") return SweepAxis::tr_ser;
    if (s == "policy") return SweepAxis::policy;
    throw ConfigError("unknown sweep axis '" + s + "'");
}

std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::modulation_order: return "modulation_order";
        case SweepAxis::tr_ser: return "tr_ser";
        case SweepAxis::policy: return "policy";
    }
    return "unknown";
}

namespace {

double parse_number(const std::string& v, const std::string& what) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) {
        throw ConfigError("sweep: '" + v + "' is not a valid " + what);
    }
    return x;
}

}  // namespace

ExperimentConfig sweep_member(const ExperimentConfig& base, SweepAxis axis, const std::string& value) {
    json doc = base.source;
    switch (axis) {
        case SweepAxis::modulation_order: {
            const double m = parse_number(value, "modulation order");
            const int bits = static_cast<int>(std::lround(std::log2(m)));
            if (m < 4 || std::ldexp(1.0, bits) != m) {
                throw ConfigError("sweep: modulation order must be a power of two >= 4");
            }
            const int alpha = base.modulation().alpha;
            doc["modem"]["bits_per_symbol"] = bits;
            doc["modem"]["bits_per_entry"] = alpha * bits;
            break;
        }
        case SweepAxis::tr_ser:
            doc["selection"]["policy"] = "ser_dsm";
            doc["selection"]["tr_ser"] = parse_number(value, "threshold");
            break;
        case SweepAxis::policy:
            if (value == "ser_dsm" || value == "packet_error_baseline" || value == "no_selection") {
                doc["selection"]["policy"] = value;
            } else {
                doc["selection"]["policy"] = "ser_dsm";
                doc["selection"]["tr_ser"] = parse_number(value, "policy or threshold");
            }
            break;
    }
    return config_from_json(doc);
}

std::vector<SweepEntry> sweep(const ExperimentConfig& base, SweepAxis axis,
                              const std::vector<std::string>& values) {
    if (values.empty()) {
        throw ConfigError("sweep: no values given");
    }
    std::vector<SweepEntry> out;
    out.reserve(values.size());
    for (const auto& v : values) {
        out.push_back({v, run_experiment(sweep_member(base, axis, v))});
    }
    return out;
}

void write_sweep(const std::filesystem::path& dir, const ExperimentConfig& base, SweepAxis axis,
                 const std::vector<SweepEntry>& entries) {
    std::filesystem::create_directories(dir);
    json summary;
    summary["axis"] = to_string(axis);
    summary["seed"] = base.seed;
    json runs = json::array();
    std::ofstream table(dir / "sweep_summary.csv", std::ios::binary);
    table << "value,final_test_accuracy,final_test_loss,final_train_loss,mean_accepted_devices,mean_ser\n";
    for (const auto& e : entries) {
        const auto cfg = sweep_member(base, axis, e.value);
        const std::string stem = to_string(axis) + "_" + e.value;
        write_outputs(dir / stem, cfg, e.result);
        const auto js = summary_json(cfg, e.result);
        double mean_ser = 0.0;
        for (double s : e.result.setup.ser) {
            mean_ser += s;
        }
        mean_ser /= static_cast<double>(e.result.setup.ser.size());
        table << e.value << ',' << num(js["final_test_accuracy"].get<double>()) << ','
              << num(js["final_test_loss"].get<double>()) << ','
              << num(js["final_train_loss"].get<double>()) << ','
              << num(js["mean_accepted_devices"].get<double>()) << ',' << num(mean_ser) << '\n';
        runs.push_back({{"value", e.value},
                        {"csv", stem + ".csv"},
                        {"final_test_accuracy", js["final_test_accuracy"]},
                        {"mean_accepted_devices", js["mean_accepted_devices"]},
                        {"mean_ser", mean_ser}});
    }
    summary["runs"] = runs;
    std::ofstream(dir / "sweep_summary.json", std::ios::binary) << summary.dump(2) << '\n';
}

std::vector<SerCheckRow> validate_ser(const ExperimentConfig& cfg, std::size_t symbols) {
    const Setup s = prepare(cfg);
    const auto mod = cfg.modulation();
    const auto& points = modem::constellation(mod.bits_per_symbol);
    const std::size_t devices = cfg.devices;
    auto sym_rng = RngStream::derive(cfg.seed, "validate-symbols");
    auto noise_rng = RngStream::derive(cfg.seed, "validate-noise");

    std::vector<SerCheckRow> rows(devices);
    constexpr std::size_t kChunk = 1u << 15;
    for (std::size_t done = 0; done < symbols; done += kChunk) {
        const std::size_t n = std::min(kChunk, symbols - done);
        std::vector<std::vector<modem::Label>> truth(devices, std::vector<modem::Label>(n));
        std::vector<modem::SymbolFrame> tx(devices, modem::SymbolFrame(n));
        for (std::size_t k = 0; k < devices; ++k) {
            for (std::size_t d = 0; d < n; ++d) {
                truth[k][d] = static_cast<modem::Label>(sym_rng.uniform_int(0, mod.order() - 1));
                tx[k][d] = points.point(truth[k][d]);
            }
        }
        const auto y = channel::transmit_frame(tx, s.channels, s.powers, channel::NoiseModel{cfg.sigma2},
                                               noise_rng);
        const auto det = noma::detect_frame(y, s.channels, s.powers, cfg.sigma2, mod, truth);
        for (std::size_t k = 0; k < devices; ++k) {
            rows[k].errors += det.symbol_errors[k];
        }
    }
    for (std::size_t k = 0; k < devices; ++k) {
        auto& r = rows[k];
        r.device = k;
        r.stage = static_cast<std::size_t>(
            std::find(s.link.order.begin(), s.link.order.end(), k) - s.link.order.begin());
        r.sinr = s.link.sinr[k];
        r.analytic = s.link.ser[k];
        r.symbols = symbols;
        r.empirical = static_cast<double>(r.errors) / static_cast<double>(symbols);
    }
    return rows;
}

double AwgnPoint::z_score() const {
    const double sd = std::sqrt(analytic * (1.0 - analytic) / static_cast<double>(symbols));
    if (sd == 0.0) {
        return empirical == analytic ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::abs(empirical - analytic) / sd;
}

AwgnPoint awgn_ser_point(int bits_per_symbol, double snr, std::size_t symbols, std::uint64_t seed) {
    if (!(snr > 0.0)) {
        throw InvalidArgument("awgn_ser_point: snr must be > 0");
    }
    const modem::ModulationConfig mod{bits_per_symbol, 1};
    mod.validate();
    const auto& points = modem::constellation(bits_per_symbol);
    const channel::ChannelRealization ch({channel::cvec::Ones(1)});
    const std::vector<double> powers{1.0};
    const double sigma2 = 1.0 / snr;
    auto sym_rng = RngStream::derive(seed, "awgn-symbols", static_cast<std::uint64_t>(bits_per_symbol));
    auto noise_rng = RngStream::derive(seed, "awgn-noise", static_cast<std::uint64_t>(bits_per_symbol));

    AwgnPoint p;
    p.order = mod.order();
    p.snr = snr;
    p.symbols = symbols;
    p.analytic = noma::analytic_ser(snr, mod.order());
    constexpr std::size_t kChunk = 1u << 16;
    for (std::size_t done = 0; done < symbols; done += kChunk) {
        const std::size_t n = std::min(kChunk, symbols - done);
        std::vector<std::vector<modem::Label>> truth(1, std::vector<modem::Label>(n));
        std::vector<modem::SymbolFrame> tx(1, modem::SymbolFrame(n));
        for (std::size_t d = 0; d < n; ++d) {
            truth[0][d] = static_cast<modem::Label>(sym_rng.uniform_int(0, mod.order() - 1));
            tx[0][d] = points.point(truth[0][d]);
        }
        const auto y = channel::transmit_frame(tx, ch, powers, channel::NoiseModel{sigma2}, noise_rng);
        p.errors += noma::detect_frame(y, ch, powers, sigma2, mod, truth).symbol_errors[0];
    }
    p.empirical = static_cast<double>(p.errors) / static_cast<double>(symbols);
    return p;
}

double snr_for_ser(double target, std::uint32_t order) {
    if (!(target > 0.0 && target < noma::analytic_ser(0.0, order))) {
        throw InvalidArgument("snr_for_ser: target outside the reachable SER range");
    }
    double lo = 0.0;
    double hi = 1.0;
    while (noma::analytic_ser(hi, order) > target) {
        hi *= 2.0;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (noma::analytic_ser(mid, order) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace nomafl::harness
