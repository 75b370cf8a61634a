#include "neat/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "neat/characterize.hpp"
#include "neat/checkpoint.hpp"
#include "neat/crossbar.hpp"
#include "neat/dataset.hpp"
#include "neat/device.hpp"
#include "neat/errors.hpp"
#include "neat/evaluate.hpp"
#include "neat/model.hpp"
#include "neat/numeric.hpp"
#include "neat/schedule.hpp"
#include "neat/training.hpp"

#ifndef NEAT_DATA_DIR
#define NEAT_DATA_DIR "data"
#endif
#ifndef NEAT_VERSION
#define NEAT_VERSION "0.0.0"
#endif

namespace neat {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kDeviceEnv = "NEAT_DEVICE_FILE";

struct Options {
    // shared
    std::string device;
    std::string device_mode = "analytical";
    std::string out = "out";
    unsigned threads = 1;

    // characterization
    double gm = 3.3e-5;
    double vg_point = 0.8;
    std::string vg_grid = "0.7:1.0:0.05";
    std::string power_vg_grid = "0.8,0.9,1.0";
    double tm = 0.025;
    double vsupply = 0.5;
    std::size_t points = kVinGridPoints;

    // power
    std::size_t rows = 8;
    std::size_t cols = 8;
    std::size_t samples = 1000;
    double normalize_vg = 1.0;
    double pulse_width = 1e-9;
    double c_gate = 1e-15;

    // data
    std::string train_csv;
    std::string test_csv;
    BlobConfig blobs;

    // training
    std::string hidden = "32,32";
    double lr = 1e-3;
    std::size_t epochs = 50;
    std::size_t batch = 32;
    std::uint64_t seed = 0;

    // NEAT
    std::string model;
    std::string schedule_mode = "heterogeneous";
    std::string schedule_file;
    std::optional<double> vg;
    std::string anchor = "network";
    bool shift = false;
    std::size_t iters = 30;
    double retrain_lr = 1e-5;
    std::size_t epochs_per_iter = 2;

    // mapping / evaluation
    std::string eval_mode = "crossbar";
    double percentile = 99.9;
    std::size_t tile_rows = 64;
    std::size_t tile_cols = 64;
    std::size_t energy_samples = 0;

    // report
    double baseline_vg = 1.0;
    std::string compare_vg = "0.8";

    // calibration
    double target_cutoff = 1.25e-5;
    double low_vg = 0.8;
    double high_vg = 1.0;

    // replay
    std::string manifest;
};

std::string escape(const std::string& s) {
    std::string r;
    for (char c : s) {
        if (c == '"' || c == '\\') r += '\\';
        if (c == '\n') {
            r += "\\n";
            continue;
        }
        r += c;
    }
    return r;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const ojson& j) { write_text(path, j.dump(2) + "\n"); }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be > 0");
}

void require_at_least_one(std::size_t v, const char* name) {
    if (v == 0) throw DomainError(std::string(name) + " must be >= 1");
}

/// Exclusive marker in the output directory; removed when the run ends.
class OutputLock {
public:
    explicit OutputLock(const fs::path& dir) : path_(dir / ".neat.lock") {
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0) {
            if (errno == EEXIST) {
                throw IoError("output directory " + dir.string() + " is in use (remove " + path_.string() +
                              " if no run is active)");
            }
            throw IoError("cannot create lock " + path_.string() + ": " + std::strerror(errno));
        }
        const std::string pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
        ::close(fd);
    }
    ~OutputLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    fs::path path_;
};

fs::path resolve_device_path(const Options& o) {
    if (!o.device.empty()) return o.device;
    if (const char* env = std::getenv(kDeviceEnv); env && *env) return env;
    return fs::path(NEAT_DATA_DIR) / "device_default.json";
}

DeviceConfig load_device(const Options& o) {
    DeviceConfig d = load_device_file(resolve_device_path(o));
    d.mode = parse_device_mode(o.device_mode);
    return d;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &pos);
        } catch (const std::exception&) {
            throw DomainError("'" + item + "' is not an integer");
        }
        if (pos != item.size() || v <= 0) throw DomainError("layer widths must be positive integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::pair<Dataset, Dataset> load_data(const Options& o) {
    if (!o.train_csv.empty()) {
        Dataset train = load_csv(o.train_csv);
        Dataset test = o.test_csv.empty() ? train : load_csv(o.test_csv);
        if (train.dims() != test.dims()) throw DomainError("train and test sets have different feature counts");
        const int classes = std::max(train.num_classes, test.num_classes);
        train.num_classes = test.num_classes = classes;
        return {std::move(train), std::move(test)};
    }
    return make_blobs(o.blobs);
}

ojson data_config(const Options& o) {
    if (!o.train_csv.empty()) return {{"train_csv", o.train_csv}, {"test_csv", o.test_csv}};
    return {{"generator", "blobs"},
            {"n_train", o.blobs.n_train},
            {"n_test", o.blobs.n_test},
            {"features", o.blobs.features},
            {"classes", o.blobs.classes},
            {"separation", o.blobs.separation},
            {"noise", o.blobs.noise},
            {"seed", o.blobs.seed}};
}

ojson train_config(const Options& o) {
    return {{"hidden", o.hidden}, {"learning_rate", o.lr}, {"epochs", o.epochs},
            {"batch_size", o.batch}, {"seed", o.seed}};
}

Model train_fresh(const Options& o, const Dataset& train_set, std::vector<double>* losses) {
    std::vector<std::size_t> dims{train_set.dims()};
    for (auto h : parse_sizes(o.hidden)) dims.push_back(h);
    dims.push_back(static_cast<std::size_t>(train_set.num_classes));
    TrainConfig tc;
    tc.learning_rate = o.lr;
    tc.epochs = o.epochs;
    tc.batch_size = o.batch;
    tc.seed = o.seed;
    return train(make_model(dims, o.seed), train_set, tc, losses);
}

void check_model_data(const Model& m, const Dataset& d) {
    if (m.input_dim() != d.dims()) {
        throw DomainError("model expects " + std::to_string(m.input_dim()) + " features, data has " +
                          std::to_string(d.dims()));
    }
    if (static_cast<int>(m.output_dim()) < d.num_classes) {
        throw DomainError("model has fewer outputs than the data has classes");
    }
}

MappingOptions mapping_options(const Options& o) {
    require_positive(o.vsupply, "vsupply");
    MappingOptions mo;
    mo.tile_rows = o.tile_rows;
    mo.tile_cols = o.tile_cols;
    mo.v_supply = o.vsupply;
    mo.activation_percentile = o.percentile;
    return mo;
}

EnergyConfig energy_config(const Options& o) {
    require_positive(o.pulse_width, "pulse-width");
    if (!(o.c_gate >= 0.0)) throw DomainError("c-gate must be >= 0");
    return {o.pulse_width, o.c_gate};
}

std::vector<double> sorted_grid(const std::string& spec) {
    auto g = parse_grid(spec);
    if (!std::is_sorted(g.begin(), g.end())) throw DomainError("gate-voltage grid must be ascending");
    return g;
}

Model clipped(Model m, const VgSchedule& s) {
    apply_clip(m, s);
    return m;
}

Eigen::MatrixXd head_rows(const Eigen::MatrixXd& x, std::size_t n) {
    if (n == 0 || n >= static_cast<std::size_t>(x.rows())) return x;
    return x.topRows(static_cast<Eigen::Index>(n));
}

void print_schedule(std::ostream& out, const Model& m, const VgSchedule& s) {
    for (std::size_t l = 0; l < s.entries.size(); ++l) {
        const auto& e = s.entries[l];
        out << "layer " << l << ": v_g=" << num(e.v_g) << " w_cut=" << num(e.w_cut)
            << " w_max=" << num(m.layers[l].weights.cwiseAbs().maxCoeff());
        if (e.flag != EntryFlag::none) out << " flag=" << to_string(e.flag);
        out << '\n';
    }
}

/// Schedule for eval/energy: explicit file, then a homogeneous Vg, then the
/// checkpoint's own schedule.
VgSchedule resolve_schedule(const Options& o, const Checkpoint& c, const DeviceConfig& dev) {
    if (!o.schedule_file.empty()) {
        std::ifstream f(o.schedule_file);
        if (!f) throw IoError("cannot open schedule " + o.schedule_file);
        try {
            return schedule_from_json(ojson::parse(f));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("schedule " + o.schedule_file + ": " + e.what());
        }
    }
    if (o.vg) {
        const std::vector<double> grid{*o.vg};
        const auto table = cutoff_table(grid, o.tm, o.vsupply, dev);
        return homogeneous_schedule(c.model, table, *o.vg, grid, dev.memristor, parse_scale_anchor(o.anchor));
    }
    if (c.schedule) return *c.schedule;
    throw DomainError("crossbar evaluation needs a schedule: pass --schedule-file or --vg, or use a NEAT checkpoint");
}

// ---------------------------------------------------------------- commands

void cmd_characterize(const Options& o, const fs::path& dir, std::ostream& out) {
    require_positive(o.vsupply, "vsupply");
    require_positive(o.tm, "tm");
    if (o.points < 2) throw DomainError("points must be >= 2");
    const DeviceConfig dev = load_device(o);
    const auto grid = uniform_vin_grid(o.vsupply, o.points);
    const GeffCurve curve = sweep_geff(o.gm, o.vg_point, grid, dev);
    const ToleranceResult t = tolerance_metric(curve);
    const auto range = linear_vin_range(curve, o.tm);
    write_geff_csv(dir / "geff_curve.csv", curve);

    ojson j;
    j["g_m"] = o.gm;
    j["v_g"] = o.vg_point;
    j["v_supply"] = o.vsupply;
    j["tm"] = t.tm;
    j["g_eff_max"] = t.g_eff_max;
    j["g_eff_min"] = t.g_eff_min;
    j["tm_threshold"] = o.tm;
    j["linear_vin_range"] = range ? ojson{{"v_lo", range->v_lo}, {"v_hi", range->v_hi}} : ojson(nullptr);
    write_json(dir / "characterize.json", j);

    out << "tm=" << num(t.tm) << " g_eff in [" << num(t.g_eff_min) << ", " << num(t.g_eff_max) << "] S\n";
    if (range) {
        out << "linear v_in range: [" << num(range->v_lo) << ", " << num(range->v_hi) << "] V\n";
    } else {
        out << "linear v_in range: none\n";
    }
}

void cmd_cutoff(const Options& o, const fs::path& dir, std::ostream& out) {
    require_positive(o.vsupply, "vsupply");
    require_positive(o.tm, "tm");
    const DeviceConfig dev = load_device(o);
    const auto grid = sorted_grid(o.vg_grid);
    const CutoffTable table = cutoff_table(grid, o.tm, o.vsupply, dev);
    write_cutoff_csv(dir / "cutoff_table.csv", table);
    for (const auto& e : table.entries) {
        out << "v_g=" << num(e.v_g) << " cutoff=" << (e.g_m_cutoff ? num(*e.g_m_cutoff) : "none") << '\n';
    }
}

void cmd_power(const Options& o, const fs::path& dir, std::ostream& out) {
    require_positive(o.vsupply, "vsupply");
    require_at_least_one(o.rows, "rows");
    require_at_least_one(o.cols, "cols");
    require_at_least_one(o.samples, "samples");
    const DeviceConfig dev = load_device(o);
    const EnergyConfig ec = energy_config(o);
    std::vector<PowerReport> reports;
    for (double v : parse_grid(o.power_vg_grid)) {
        reports.push_back(power_monte_carlo(o.rows, o.cols, o.samples, v, o.vsupply, o.seed, dev, ec, o.threads));
        out << "v_g=" << num(v) << " mean_power=" << num(reports.back().mean_power_per_synapse)
            << " W (se " << num(reports.back().std_error) << ")\n";
    }
    write_power_csv(dir / "power.csv", reports);

    auto ref = std::find_if(reports.begin(), reports.end(),
                            [&](const PowerReport& r) { return std::abs(r.v_g - o.normalize_vg) <= 1e-9; });
    if (ref != reports.end() && ref->mean_power_per_synapse > 0.0) {
        std::string csv = "v_g,normalized_power\n";
        for (const auto& r : reports) {
            csv += num(r.v_g) + "," + num(r.mean_power_per_synapse / ref->mean_power_per_synapse) + "\n";
        }
        write_text(dir / "power_normalized.csv", csv);
    }
}

void cmd_train(const Options& o, const fs::path& dir, std::ostream& out) {
    auto [train_set, test_set] = load_data(o);
    std::vector<double> losses;
    const Model m = train_fresh(o, train_set, &losses);

    Checkpoint c;
    c.model = m;
    c.config = {{"command", "train"}, {"data", data_config(o)}, {"train", train_config(o)}};
    save_checkpoint(dir / "checkpoint.json", c);

    std::string csv = "epoch,loss\n";
    for (std::size_t e = 0; e < losses.size(); ++e) csv += std::to_string(e + 1) + "," + num(losses[e]) + "\n";
    write_text(dir / "train_log.csv", csv);

    const double acc_train = accuracy(m, train_set);
    const double acc_test = accuracy(m, test_set);
    write_json(dir / "metrics.json", {{"train_accuracy", acc_train}, {"test_accuracy", acc_test}});
    out << "train accuracy " << num(acc_train) << ", test accuracy " << num(acc_test) << '\n';
}

void cmd_search(const Options& o, const fs::path& dir, std::ostream& out) {
    require_positive(o.vsupply, "vsupply");
    require_positive(o.tm, "tm");
    const DeviceConfig dev = load_device(o);
    const Checkpoint c = load_checkpoint(o.model);
    const auto grid = sorted_grid(o.vg_grid);
    const CutoffTable table = cutoff_table(grid, o.tm, o.vsupply, dev);
    VgSchedule s = search_heterogeneous_vg(c.model, table, grid, dev.memristor, parse_scale_anchor(o.anchor));
    if (o.shift) s = shift_schedule(s, table, dev.memristor);
    write_cutoff_csv(dir / "cutoff_table.csv", table);
    write_json(dir / "schedule.json", schedule_to_json(s));
    print_schedule(out, c.model, s);
    out << "linear fraction " << num(linear_fraction(c.model, s).overall) << '\n';
}

void cmd_neat(const Options& o, const fs::path& dir, std::ostream& out) {
    require_positive(o.vsupply, "vsupply");
    require_positive(o.tm, "tm");
    if (!(o.retrain_lr >= 0.0)) throw DomainError("retrain-lr must be >= 0");
    const DeviceConfig dev = load_device(o);
    auto [train_set, test_set] = load_data(o);
    const Model base = o.model.empty() ? train_fresh(o, train_set, nullptr) : load_checkpoint(o.model).model;
    check_model_data(base, train_set);

    const auto grid = sorted_grid(o.vg_grid);
    const CutoffTable table = cutoff_table(grid, o.tm, o.vsupply, dev);
    const ScaleAnchor anchor = parse_scale_anchor(o.anchor);
    VgSchedule s;
    if (parse_schedule_mode(o.schedule_mode) == ScheduleMode::heterogeneous) {
        s = search_heterogeneous_vg(base, table, grid, dev.memristor, anchor);
    } else {
        if (!o.vg) throw DomainError("homogeneous schedule needs --vg");
        s = homogeneous_schedule(base, table, *o.vg, grid, dev.memristor, anchor);
    }
    if (o.shift) s = shift_schedule(s, table, dev.memristor);
    print_schedule(out, base, s);

    IterativeConfig ic;
    ic.train.learning_rate = o.retrain_lr;
    ic.train.epochs = o.epochs_per_iter;
    ic.train.batch_size = o.batch;
    ic.train.seed = o.seed;
    ic.iterations = o.iters;
    const IterativeResult r = iterative_train(base, s, train_set, ic);

    const MappingOptions mo = mapping_options(o);
    const Model clip_only = clipped(base, s);
    const double xb_clip = evaluate_crossbar(map_network(clip_only, s, train_set, dev, mo), test_set);
    const double xb_final = evaluate_crossbar(map_network(r.model, s, train_set, dev, mo), test_set);

    Checkpoint c;
    c.model = r.model;
    c.schedule = s;
    c.config = {{"command", "neat"},
                {"data", data_config(o)},
                {"train", train_config(o)},
                {"base_model", o.model},
                {"neat",
                 {{"schedule", o.schedule_mode},
                  {"vg", o.vg ? ojson(*o.vg) : ojson(nullptr)},
                  {"grid", o.vg_grid},
                  {"tm", o.tm},
                  {"v_supply", o.vsupply},
                  {"anchor", o.anchor},
                  {"shift", o.shift},
                  {"iterations", o.iters},
                  {"learning_rate", o.retrain_lr},
                  {"epochs_per_iteration", o.epochs_per_iter},
                  {"batch_size", o.batch},
                  {"seed", o.seed}}}};
    save_checkpoint(dir / "checkpoint.json", c);
    write_cutoff_csv(dir / "cutoff_table.csv", table);

    std::string csv = "iteration,fraction_before_clip,loss,train_accuracy,linear_fraction\n";
    for (const auto& h : r.history) {
        csv += std::to_string(h.iteration) + "," + num(h.fraction_before_clip) + "," + num(h.loss) + "," +
               num(h.train_accuracy) + "," + num(h.linear_fraction) + "\n";
    }
    write_text(dir / "neat_history.csv", csv);

    const LinearFraction lf = linear_fraction(r.model, s);
    ojson m;
    m["software_accuracy_base"] = accuracy(base, test_set);
    m["software_accuracy_clip_only"] = accuracy(clip_only, test_set);
    m["software_accuracy_final"] = accuracy(r.model, test_set);
    m["crossbar_accuracy_clip_only"] = xb_clip;
    m["crossbar_accuracy_final"] = xb_final;
    m["linear_fraction_base"] = linear_fraction(base, s).overall;
    m["linear_fraction_final"] = lf.overall;
    m["linear_fraction_per_layer"] = lf.per_layer;
    write_json(dir / "metrics.json", m);

    out << "crossbar accuracy: clip-only " << num(xb_clip) << ", NEAT " << num(xb_final) << '\n';
    out << "linear fraction: " << num(linear_fraction(base, s).overall) << " -> " << num(lf.overall) << '\n';
}

void cmd_eval(const Options& o, const fs::path& dir, std::ostream& out) {
    const Checkpoint c = load_checkpoint(o.model);
    auto [train_set, test_set] = load_data(o);
    check_model_data(c.model, test_set);
    double acc = 0.0;
    if (o.eval_mode == "software") {
        acc = accuracy(c.model, test_set);
    } else if (o.eval_mode == "crossbar") {
        const DeviceConfig dev = load_device(o);
        const VgSchedule s = resolve_schedule(o, c, dev);
        acc = evaluate_crossbar(map_network(c.model, s, train_set, dev, mapping_options(o)), test_set);
    } else {
        throw DomainError("unknown evaluation mode '" + o.eval_mode + "'");
    }
    write_json(dir / "eval.json", {{"mode", o.eval_mode}, {"accuracy", acc}, {"samples", test_set.size()}});
    out << o.eval_mode << " accuracy " << num(acc) << '\n';
}

void cmd_energy(const Options& o, const fs::path& dir, std::ostream& out) {
    const Checkpoint c = load_checkpoint(o.model);
    auto [train_set, test_set] = load_data(o);
    check_model_data(c.model, test_set);
    const DeviceConfig dev = load_device(o);
    const VgSchedule s = resolve_schedule(o, c, dev);
    const CrossbarNetwork net = map_network(c.model, s, train_set, dev, mapping_options(o));
    const InferenceEnergy e = inference_energy(net, head_rows(test_set.features, o.energy_samples), energy_config(o));

    std::string csv = "layer,v_g,energy_J\n";
    for (std::size_t l = 0; l < e.per_layer.size(); ++l) {
        csv += std::to_string(l) + "," + num(s.entries[l].v_g) + "," + num(e.per_layer[l]) + "\n";
    }
    write_text(dir / "energy.csv", csv);
    write_json(dir / "energy.json", {{"energy_per_inference_J", e.total}, {"per_layer_J", e.per_layer}});
    out << "energy per inference " << num(e.total) << " J\n";
}

void cmd_report(const Options& o, const fs::path& dir, std::ostream& out) {
    require_positive(o.vsupply, "vsupply");
    require_positive(o.tm, "tm");
    const DeviceConfig dev = load_device(o);
    auto [train_set, test_set] = load_data(o);
    std::optional<Checkpoint> ckpt;
    if (!o.model.empty()) ckpt = load_checkpoint(o.model);
    const Model base = ckpt ? ckpt->model : train_fresh(o, train_set, nullptr);
    check_model_data(base, test_set);

    const auto compare = parse_grid(o.compare_vg);
    std::vector<double> grid = compare;
    grid.push_back(o.baseline_vg);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(), [](double a, double b) { return std::abs(a - b) <= 1e-9; }),
               grid.end());
    const CutoffTable table = cutoff_table(grid, o.tm, o.vsupply, dev);
    const ScaleAnchor anchor = parse_scale_anchor(o.anchor);
    const MappingOptions mo = mapping_options(o);
    const EnergyConfig ec = energy_config(o);
    const Eigen::MatrixXd x = head_rows(test_set.features, o.energy_samples);

    struct Row {
        std::string label;
        std::string v_g;
        double energy;
        double accuracy;
    };
    auto run = [&](const Model& m, const VgSchedule& s, std::string label, std::string vg) {
        const CrossbarNetwork net = map_network(m, s, train_set, dev, mo);
        return Row{std::move(label), std::move(vg), inference_energy(net, x, ec).total, evaluate_crossbar(net, test_set)};
    };
    auto homogeneous = [&](double v) {
        const VgSchedule s = homogeneous_schedule(base, table, v, grid, dev.memristor, anchor);
        return run(clipped(base, s), s, "homogeneous", num(v));
    };

    std::vector<Row> rows{homogeneous(o.baseline_vg)};
    for (double v : compare) rows.push_back(homogeneous(v));
    if (ckpt && ckpt->schedule) {
        std::string vgs;
        for (const auto& e : ckpt->schedule->entries) vgs += (vgs.empty() ? "" : ";") + num(e.v_g);
        rows.push_back(run(base, *ckpt->schedule, "checkpoint", vgs));
    }

    const double e_base = rows.front().energy;
    std::string csv = "schedule,v_g,energy_J,gain_pct,crossbar_accuracy\n";
    auto jrows = ojson::array();
    for (const auto& r : rows) {
        const double gain = e_base > 0.0 ? 100.0 * (e_base - r.energy) / e_base : 0.0;
        csv += r.label + "," + r.v_g + "," + num(r.energy) + "," + num(gain) + "," + num(r.accuracy) + "\n";
        jrows.push_back({{"schedule", r.label}, {"v_g", r.v_g}, {"energy_J", r.energy},
                         {"gain_pct", gain}, {"crossbar_accuracy", r.accuracy}});
        out << r.label << " v_g=" << r.v_g << ": energy " << num(r.energy) << " J, gain " << num(gain)
            << "%, crossbar accuracy " << num(r.accuracy) << '\n';
    }
    write_text(dir / "report.csv", csv);
    write_json(dir / "report.json",
               {{"baseline_vg", o.baseline_vg}, {"software_accuracy", accuracy(base, test_set)}, {"rows", jrows}});
}

void cmd_calibrate(const Options& o, const fs::path& dir, std::ostream& out) {
    require_positive(o.vsupply, "vsupply");
    require_positive(o.tm, "tm");
    require_positive(o.target_cutoff, "target-cutoff");
    const DeviceConfig base = load_device(o);
    CalibrationTarget t;
    t.v_supply = o.vsupply;
    t.tm_threshold = o.tm;
    t.low_vg = o.low_vg;
    t.high_vg = o.high_vg;
    t.low_vg_cutoff = o.target_cutoff;
    const CalibrationResult r = calibrate_transistor(base.transistor, base.memristor, t);
    DeviceConfig d = base;
    d.transistor = r.params;
    save_device_file(dir / "device.json", d,
                     "calibrated: cutoff " + num(r.low_cutoff.value_or(0.0)) + " S at Vg " + num(o.low_vg) +
                         " V, full range at Vg " + num(o.high_vg) + " V");
    out << "vth=" << num(r.params.vth) << " kp=" << num(r.params.kp) << " cutoff(" << num(o.low_vg)
        << ")=" << num(r.low_cutoff.value_or(0.0)) << " cutoff(" << num(o.high_vg)
        << ")=" << num(r.high_cutoff.value_or(0.0)) << '\n';
}

// ---------------------------------------------------------------- wiring

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--device", o.device, "Device parameter file (default: $NEAT_DEVICE_FILE or bundled defaults)");
    sub->add_option("--device-mode", o.device_mode, "analytical | ideal_switch");
    sub->add_option("--out", o.out, "Output directory");
}

void add_supply(CLI::App* sub, Options& o) {
    sub->add_option("--tm", o.tm, "Tolerance-metric threshold");
    sub->add_option("--vsupply", o.vsupply, "Supply voltage (V)");
}

void add_data(CLI::App* sub, Options& o) {
    sub->add_option("--train-data", o.train_csv, "Training CSV (features..., label); blobs when omitted");
    sub->add_option("--test-data", o.test_csv, "Test CSV");
    sub->add_option("--blob-seed", o.blobs.seed, "Blob generator seed");
    sub->add_option("--separation", o.blobs.separation, "Blob center spread");
    sub->add_option("--noise", o.blobs.noise, "Blob sample noise");
    sub->add_option("--n-train", o.blobs.n_train, "Blob training samples");
    sub->add_option("--n-test", o.blobs.n_test, "Blob test samples");
    sub->add_option("--features", o.blobs.features, "Blob feature count");
    sub->add_option("--classes", o.blobs.classes, "Blob class count");
}

void add_training(CLI::App* sub, Options& o) {
    sub->add_option("--hidden", o.hidden, "Hidden layer widths, comma separated");
    sub->add_option("--lr", o.lr, "Initial training learning rate");
    sub->add_option("--epochs", o.epochs, "Initial training epochs");
    sub->add_option("--batch", o.batch, "Mini-batch size");
    sub->add_option("--seed", o.seed, "Seed");
}

void add_mapping(CLI::App* sub, Options& o) {
    sub->add_option("--percentile", o.percentile, "Activation percentile mapped to v_supply");
    sub->add_option("--tile-rows", o.tile_rows, "Crossbar tile rows");
    sub->add_option("--tile-cols", o.tile_cols, "Crossbar tile columns");
}

void add_energy(CLI::App* sub, Options& o) {
    sub->add_option("--pulse-width", o.pulse_width, "Read pulse width (s)");
    sub->add_option("--c-gate", o.c_gate, "Gate capacitance per row (F)");
    sub->add_option("--samples", o.energy_samples, "Test samples averaged for energy (0: all)");
}

void add_schedule_source(CLI::App* sub, Options& o) {
    sub->add_option("--schedule-file", o.schedule_file, "Schedule JSON from search-vg");
    sub->add_option("--vg", o.vg, "Homogeneous gate voltage (overrides the checkpoint schedule)");
    sub->add_option("--anchor", o.anchor, "Weight-range anchor: network | layer");
    add_supply(sub, o);
}

std::string option_value(const CLI::Option* opt) {
    if (opt->get_type_size_max() == 0) return opt->count() > 0 ? "true" : "false";
    if (opt->count() == 0) return opt->get_default_str();
    std::string v;
    for (const auto& r : opt->results()) v += (v.empty() ? "" : ",") + r;
    return v;
}

struct Invocation {
    std::string command;
    ojson config = ojson::object();
    std::vector<std::string> resolved_argv;
};

Invocation describe(const CLI::App* sub, const Options& o) {
    Invocation inv;
    inv.command = sub->get_name();
    inv.resolved_argv.push_back(inv.command);
    for (const CLI::Option* opt : sub->get_options()) {
        if (opt->get_lnames().empty() && !opt->get_positional()) continue;
        const std::string name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
        if (name == "help") continue;
        std::string value = option_value(opt);
        if (name == "device") value = resolve_device_path(o).string();
        inv.config[name] = value;
        if (opt->get_type_size_max() == 0) {
            if (value == "true") inv.resolved_argv.push_back("--" + name);
            continue;
        }
        if (value.empty()) continue;
        if (!opt->get_positional()) inv.resolved_argv.push_back("--" + name);
        inv.resolved_argv.push_back(value);
    }
    return inv;
}

ojson device_echo(const Options& o) {
    const fs::path p = resolve_device_path(o);
    std::ifstream f(p);
    if (!f) throw IoError("cannot open device file " + p.string());
    try {
        return ojson::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("device file " + p.string() + ": " + e.what());
    }
}

int report_error(std::ostream& err, int code, const char* kind, const std::string& message) {
    err << "error: code=" << code << " kind=" << kind << " message=\"" << escape(message) << "\"" << std::endl;
    return code;
}

int replay(const Options& o, std::ostream& out, std::ostream& err) {
    std::ifstream f(o.manifest);
    if (!f) throw IoError("cannot open manifest " + o.manifest);
    ojson m;
    try {
        m = ojson::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("manifest " + o.manifest + ": " + e.what());
    }
    if (!m.contains("resolved_argv")) throw IoError("manifest " + o.manifest + " has no resolved_argv");
    auto args = m.at("resolved_argv").get<std::vector<std::string>>();
    if (!o.out.empty()) {
        auto it = std::find(args.begin(), args.end(), "--out");
        if (it != args.end() && std::next(it) != args.end()) {
            *std::next(it) = o.out;
        } else {
            args.push_back("--out");
            args.push_back(o.out);
        }
    }
    if (!args.empty() && args.front() == "replay") throw DomainError("manifest describes a replay run");
    return run_cli(args, out, err);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Non-linearity aware training toolkit for 1T-1R crossbars", "neat_cli"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", NEAT_VERSION);

    using Handler = void (*)(const Options&, const fs::path&, std::ostream&);
    std::map<std::string, Handler> handlers;

    auto* ch = app.add_subcommand("characterize", "G_eff sweep and tolerance metric for one cell");
    add_common(ch, o);
    add_supply(ch, o);
    ch->add_option("--gm", o.gm, "Memristor conductance (S)");
    ch->add_option("--vg", o.vg_point, "Gate voltage (V)");
    ch->add_option("--points", o.points, "Input-voltage grid points");
    handlers["characterize"] = cmd_characterize;

    auto* cu = app.add_subcommand("cutoff", "G_M cutoff per gate voltage");
    add_common(cu, o);
    add_supply(cu, o);
    cu->add_option("--vg", o.vg_grid, "Gate voltages: start:stop:step or a comma list");
    handlers["cutoff"] = cmd_cutoff;

    auto* pw = app.add_subcommand("power-mc", "Monte Carlo per-synapse power");
    add_common(pw, o);
    pw->add_option("--vg", o.power_vg_grid, "Gate voltages: start:stop:step or a comma list");
    pw->add_option("--vsupply", o.vsupply, "Supply voltage (V)");
    pw->add_option("--rows", o.rows, "Crossbar rows");
    pw->add_option("--cols", o.cols, "Crossbar columns");
    pw->add_option("--samples", o.samples, "Monte Carlo samples");
    pw->add_option("--seed", o.seed, "Seed");
    pw->add_option("--pulse-width", o.pulse_width, "Read pulse width (s)");
    pw->add_option("--c-gate", o.c_gate, "Gate capacitance (F)");
    pw->add_option("--normalize-vg", o.normalize_vg, "Gate voltage used as the power_normalized.csv reference");
    pw->add_option("--threads", o.threads, "Worker threads");
    handlers["power-mc"] = cmd_power;

    auto* tr = app.add_subcommand("train", "Train a dense network in software");
    add_common(tr, o);
    add_data(tr, o);
    add_training(tr, o);
    handlers["train"] = cmd_train;

    auto* sv = app.add_subcommand("search-vg", "Per-layer gate-voltage search for a trained model");
    add_common(sv, o);
    add_supply(sv, o);
    sv->add_option("--model", o.model, "Checkpoint JSON")->required();
    sv->add_option("--grid", o.vg_grid, "Search grid: start:stop:step or a comma list");
    sv->add_option("--anchor", o.anchor, "Weight-range anchor: network | layer");
    sv->add_flag("--shift", o.shift, "Move every layer one grid step down");
    handlers["search-vg"] = cmd_search;

    auto* ne = app.add_subcommand("neat", "Clip-and-retrain under a gate-voltage schedule");
    add_common(ne, o);
    add_supply(ne, o);
    add_data(ne, o);
    add_training(ne, o);
    add_mapping(ne, o);
    ne->add_option("--model", o.model, "Start from this checkpoint instead of training one");
    ne->add_option("--schedule", o.schedule_mode, "heterogeneous | homogeneous");
    ne->add_option("--vg", o.vg, "Gate voltage for a homogeneous schedule");
    ne->add_option("--grid", o.vg_grid, "Search grid: start:stop:step or a comma list");
    ne->add_option("--anchor", o.anchor, "Weight-range anchor: network | layer");
    ne->add_flag("--shift", o.shift, "Move every layer one grid step down");
    ne->add_option("--iters", o.iters, "Clip-and-retrain iterations");
    ne->add_option("--retrain-lr", o.retrain_lr, "Retraining learning rate");
    ne->add_option("--epochs-per-iter", o.epochs_per_iter, "Epochs per iteration");
    handlers["neat"] = cmd_neat;

    auto* ev = app.add_subcommand("eval", "Accuracy in software or on the simulated crossbar");
    add_common(ev, o);
    add_data(ev, o);
    add_mapping(ev, o);
    add_schedule_source(ev, o);
    ev->add_option("--model", o.model, "Checkpoint JSON")->required();
    ev->add_option("--mode", o.eval_mode, "software | crossbar");
    handlers["eval"] = cmd_eval;

    auto* en = app.add_subcommand("energy", "Crossbar energy per inference");
    add_common(en, o);
    add_data(en, o);
    add_mapping(en, o);
    add_schedule_source(en, o);
    add_energy(en, o);
    en->add_option("--model", o.model, "Checkpoint JSON")->required();
    handlers["energy"] = cmd_energy;

    auto* rp = app.add_subcommand("report", "Energy gain and accuracy against a baseline gate voltage");
    add_common(rp, o);
    add_supply(rp, o);
    add_data(rp, o);
    add_training(rp, o);
    add_mapping(rp, o);
    add_energy(rp, o);
    rp->add_option("--model", o.model, "Checkpoint JSON (trained from scratch when omitted)");
    rp->add_option("--baseline-vg", o.baseline_vg, "Baseline homogeneous gate voltage");
    rp->add_option("--compare-vg", o.compare_vg, "Gate voltages to compare: list or start:stop:step");
    rp->add_option("--anchor", o.anchor, "Weight-range anchor: network | layer");
    handlers["report"] = cmd_report;

    auto* ca = app.add_subcommand("calibrate", "Fit vth and kp to the cutoff targets");
    add_common(ca, o);
    add_supply(ca, o);
    ca->add_option("--target-cutoff", o.target_cutoff, "Desired G_M cutoff at the low gate voltage (S)");
    ca->add_option("--low-vg", o.low_vg, "Low gate voltage (V)");
    ca->add_option("--high-vg", o.high_vg, "Gate voltage that must cover the full range (V)");
    handlers["calibrate"] = cmd_calibrate;

    auto* re = app.add_subcommand("replay", "Re-run the command recorded in a run_manifest.json");
    re->add_option("manifest", o.manifest, "Manifest path")->required();
    std::string replay_out;
    re->add_option("--out", replay_out, "Write to this directory instead of the recorded one");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << NEAT_VERSION << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return report_error(err, kExitUsage, "usage", e.what());
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    try {
        if (name == "replay") {
            o.out = replay_out;
            return replay(o, out, err);
        }
        if (o.threads == 0) throw DomainError("threads must be >= 1");

        const fs::path dir = o.out;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
        OutputLock lock(dir);

        const Invocation inv = describe(sub, o);
        ojson manifest;
        manifest["tool"] = "neat_cli";
        manifest["version"] = NEAT_VERSION;
        manifest["command"] = inv.command;
        manifest["argv"] = args;
        manifest["resolved_argv"] = inv.resolved_argv;
        manifest["config"] = inv.config;
        manifest["seed"] = inv.config.contains("seed") ? ojson(o.seed) : ojson(nullptr);
        manifest["device"] = device_echo(o);
        write_json(dir / "run_manifest.json", manifest);

        handlers.at(name)(o, dir, out);
        return kExitOk;
    } catch (const IoError& e) {
        return report_error(err, kExitIo, "io", e.what());
    } catch (const DomainError& e) {
        return report_error(err, kExitDomain, "domain", e.what());
    } catch (const RangeError& e) {
        return report_error(err, kExitDomain, "range", e.what());
    } catch (const LookupError& e) {
        return report_error(err, kExitDomain, "lookup", e.what());
    } catch (const DegenerateLayerError& e) {
        return report_error(err, kExitDomain, "degenerate_layer", e.what());
    } catch (const TrainingDivergedError& e) {
        return report_error(err, kExitDomain, "training_diverged", e.what());
    } catch (const std::exception& e) {
        return report_error(err, kExitInternal, "internal", e.what());
    }
}

}  // namespace neat
