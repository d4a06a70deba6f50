#pragma once

// JSON configuration, run orchestration and CSV/JSON emission for the
// command-line tool.
//
// Config document (every key optional):
//   {
//     "model": "ti" | "ci" | "eci" | "custom",
//     "N": 10,
//     "params": {"J": 1, "Jprime": 0, "hz": 0.5, "hx": 1.05},
//     "initial": "neel" | "up" | "0101...",   (character i = site i, 1 = down)
//     "dt": 0.02, "t_max": 20, "base": "2" | "e",
//     "d_list": [1, 2, 3, 4, 5, 6],
//     "thresholds": {"delta_sat": 0.1, "eps_split": 1e-5, "dwell": 10, "eps_mi": 1e-8},
//     "de": 0.2,
//     "hx_list": [0.4, 0.6]
//   }

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "entprop/errors.hpp"
#include "entprop/parallel.hpp"
#include "entprop/propagation.hpp"
#include "entprop/thermalization.hpp"

#ifndef ENTPROP_VERSION
#define ENTPROP_VERSION "0.3.0"
#endif

namespace entprop {

using Json = nlohmann::json;

inline constexpr const char* kCodeVersion = ENTPROP_VERSION;

enum class Command { Thermalize, Propagate, Sweep, Dispersion };

inline const char* to_string(Command c) {
    switch (c) {
    case Command::Thermalize:
        return "thermalize";
    case Command::Propagate:
        return "propagate";
    case Command::Sweep:
        return "sweep";
    default:
        return "dispersion";
    }
}

struct RunConfig {
    Command command = Command::Propagate;
    std::string model = "ci";
    ModelParams params = ModelParams::chaotic_ising(10);
    std::string initial = "neel";
    Real dt = 0.02;
    Real t_max = 20.0;
    EntropyBase base = EntropyBase::Two;
    std::vector<int> d_list{1, 2, 3, 4, 5, 6};
    Thresholds thresholds;
    Real de = 0.2;
    std::vector<Real> hx_list;
    int threads = 1; ///< not part of the echo: results do not depend on it

    int num_sites() const { return params.num_sites; }
};

/// Command-line values that take precedence over the config document.
struct Overrides {
    std::optional<Real> dt;
    std::optional<Real> t_max;
    std::optional<EntropyBase> base;
    std::optional<int> threads;
};

namespace detail {

inline int line_of(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

/// Line of the first occurrence of "key" in the document, 0 if absent.
inline int line_of_key(const std::string& text, const std::string& key) {
    const auto pos = text.find('"' + key + '"');
    return pos == std::string::npos ? 0 : line_of(text, pos);
}

class ConfigReader {
  public:
    explicit ConfigReader(std::string text) : text_(std::move(text)) {}

    [[noreturn]] void fail(const std::string& path, const std::string& what) const {
        const auto dot = path.rfind('.');
        const int line = line_of_key(text_, dot == std::string::npos ? path : path.substr(dot + 1));
        std::string msg = "config: field '" + path + "'";
        if (line > 0) {
            msg += " (line " + std::to_string(line) + ")";
        }
        throw ConfigError(msg + ": " + what);
    }

    void allow_only(const Json& obj, const std::string& prefix,
                    std::initializer_list<const char*> keys) const {
        for (const auto& [k, v] : obj.items()) {
            if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
                fail(prefix + k, "unknown key");
            }
        }
    }

    Real number(const Json& v, const std::string& path) const {
        if (!v.is_number()) {
            fail(path, "expected a number");
        }
        return v.get<Real>();
    }

    int integer(const Json& v, const std::string& path) const {
        if (!v.is_number_integer()) {
            fail(path, "expected an integer");
        }
        return v.get<int>();
    }

    std::string string(const Json& v, const std::string& path) const {
        if (!v.is_string()) {
            fail(path, "expected a string");
        }
        return v.get<std::string>();
    }

    const Json& object(const Json& v, const std::string& path) const {
        if (!v.is_object()) {
            fail(path, "expected an object");
        }
        return v;
    }

    const Json& array(const Json& v, const std::string& path) const {
        if (!v.is_array()) {
            fail(path, "expected an array");
        }
        return v;
    }

  private:
    std::string text_;
};

inline ModelParams preset(const std::string& name, int n, Real ti_hx) {
    if (name == "ti") {
        return ModelParams::transverse_ising(n, ti_hx);
    }
    if (name == "ci") {
        return ModelParams::chaotic_ising(n);
    }
    if (name == "eci") {
        return ModelParams::extended_chaotic_ising(n);
    }
    return {1.0, 0.0, 0.0, 0.0, n};
}

} // namespace detail

/// "neel", "up", or an explicit N-character 0/1 string.
inline BasisState parse_initial(const std::string& s, int n) {
    if (s == "neel") {
        return neel_bits(n);
    }
    if (s == "up") {
        return {0};
    }
    if (static_cast<int>(s.size()) != n ||
        s.find_first_not_of("01") != std::string::npos) {
        throw std::invalid_argument("initial state must be 'neel', 'up' or " + std::to_string(n) +
                                    " characters of 0/1");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < n; ++i) {
        if (s[static_cast<std::size_t>(i)] == '1') {
            bits |= std::uint64_t{1} << i;
        }
    }
    return {bits};
}

inline RunConfig default_config(Command c) {
    RunConfig cfg;
    cfg.command = c;
    if (c == Command::Thermalize) {
        cfg.model = "eci";
        cfg.params = ModelParams::extended_chaotic_ising(12);
        cfg.t_max = 10.0;
    }
    if (c == Command::Sweep) {
        cfg.model = "ti";
        cfg.params = ModelParams::transverse_ising(10, 1.05);
        cfg.hx_list = {0.4, 0.6, 0.8, 1.0, 1.25, 1.5};
    }
    if (c == Command::Dispersion) {
        cfg.model = "ti";
        cfg.params = ModelParams::transverse_ising(10, 1.05);
        cfg.hx_list = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
    }
    return cfg;
}

/// Parse a config document for `command`, then apply command-line overrides.
/// Every failure is a ConfigError carrying the field and, where known, line.
inline RunConfig parse_config(const std::string& text, Command command, const Overrides& ov = {}) {
    RunConfig cfg = default_config(command);
    Json doc;
    try {
        doc = text.empty() ? Json::object() : Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config: JSON syntax error at line " +
                          std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
    }
    const detail::ConfigReader rd(text);
    rd.object(doc, "<root>");
    rd.allow_only(doc, "", {"model", "N", "params", "initial", "dt", "t_max", "base", "d_list",
                            "thresholds", "de", "hx_list"});

    int n = cfg.params.num_sites;
    if (doc.contains("N")) {
        n = rd.integer(doc["N"], "N");
        if (n < 2 || n > kMaxDenseSites) {
            rd.fail("N", "must lie in [2, " + std::to_string(kMaxDenseSites) + "]");
        }
    }
    if (doc.contains("model")) {
        cfg.model = rd.string(doc["model"], "model");
        if (cfg.model != "ti" && cfg.model != "ci" && cfg.model != "eci" && cfg.model != "custom") {
            rd.fail("model", "expected one of ti, ci, eci, custom");
        }
    }
    cfg.params = detail::preset(cfg.model, n, 1.05);
    if (doc.contains("params")) {
        const Json& p = rd.object(doc["params"], "params");
        rd.allow_only(p, "params.", {"J", "Jprime", "hz", "hx"});
        if (p.contains("J")) cfg.params.J = rd.number(p["J"], "params.J");
        if (p.contains("Jprime")) cfg.params.Jprime = rd.number(p["Jprime"], "params.Jprime");
        if (p.contains("hz")) cfg.params.hz = rd.number(p["hz"], "params.hz");
        if (p.contains("hx")) cfg.params.hx = rd.number(p["hx"], "params.hx");
    } else if (cfg.model == "custom") {
        rd.fail("params", "required when model is custom");
    }
    if (doc.contains("initial")) {
        cfg.initial = rd.string(doc["initial"], "initial");
    }
    if (doc.contains("dt")) cfg.dt = rd.number(doc["dt"], "dt");
    if (doc.contains("t_max")) cfg.t_max = rd.number(doc["t_max"], "t_max");
    if (doc.contains("base")) {
        const std::string b = rd.string(doc["base"], "base");
        if (b != "2" && b != "e") {
            rd.fail("base", "expected \"2\" or \"e\"");
        }
        cfg.base = b == "2" ? EntropyBase::Two : EntropyBase::E;
    }
    if (doc.contains("d_list")) {
        cfg.d_list.clear();
        for (const Json& v : rd.array(doc["d_list"], "d_list")) {
            cfg.d_list.push_back(rd.integer(v, "d_list"));
        }
    }
    if (doc.contains("thresholds")) {
        const Json& t = rd.object(doc["thresholds"], "thresholds");
        rd.allow_only(t, "thresholds.", {"delta_sat", "eps_split", "dwell", "eps_mi"});
        Thresholds& th = cfg.thresholds;
        if (t.contains("delta_sat")) th.delta_sat = rd.number(t["delta_sat"], "thresholds.delta_sat");
        if (t.contains("eps_split")) th.eps_split = rd.number(t["eps_split"], "thresholds.eps_split");
        if (t.contains("dwell")) th.dwell = rd.integer(t["dwell"], "thresholds.dwell");
        if (t.contains("eps_mi")) th.eps_mi = rd.number(t["eps_mi"], "thresholds.eps_mi");
    }
    if (doc.contains("de")) cfg.de = rd.number(doc["de"], "de");
    if (doc.contains("hx_list")) {
        cfg.hx_list.clear();
        for (const Json& v : rd.array(doc["hx_list"], "hx_list")) {
            cfg.hx_list.push_back(rd.number(v, "hx_list"));
        }
    }

    if (ov.dt) cfg.dt = *ov.dt;
    if (ov.t_max) cfg.t_max = *ov.t_max;
    if (ov.base) cfg.base = *ov.base;
    if (ov.threads) {
        if (*ov.threads < 1) {
            throw ConfigError("--threads must be at least 1");
        }
        cfg.threads = *ov.threads;
    }

    // Semantic checks through the module validators.
    const auto check = [&](const std::string& field, auto&& fn) {
        try {
            fn();
        } catch (const std::invalid_argument& e) {
            rd.fail(field, e.what());
        } catch (const std::out_of_range& e) {
            rd.fail(field, e.what());
        }
    };
    check("params", [&] { cfg.params.validate(); });
    check("initial", [&] { (void)parse_initial(cfg.initial, n); });
    check("dt", [&] { (void)uniform_grid(cfg.dt, cfg.t_max); });
    if (command == Command::Thermalize && !(cfg.de > 0.0)) {
        rd.fail("de", "must be positive");
    }
    if (command == Command::Propagate || command == Command::Sweep) {
        check("thresholds", [&] { cfg.thresholds.validate(); });
        check("d_list", [&] {
            ProtocolConfig pc;
            pc.bulk = cfg.params;
            pc.bulk_initial = parse_initial(cfg.initial, n);
            pc.d_list = cfg.d_list;
            pc.dt = cfg.dt;
            pc.t_max = cfg.t_max;
            pc.thresholds = cfg.thresholds;
            pc.validate();
        });
    }
    if (command == Command::Sweep || command == Command::Dispersion) {
        if (cfg.hx_list.empty()) {
            rd.fail("hx_list", "must not be empty");
        }
        if (command == Command::Dispersion) {
            for (Real h : cfg.hx_list) {
                if (!(h >= 0.0)) {
                    rd.fail("hx_list", "values must be >= 0");
                }
            }
        }
    }
    return cfg;
}

/// The configuration as a document that parse_config maps back to `cfg`.
inline Json echo_config(const RunConfig& cfg) {
    Json j;
    j["model"] = cfg.model;
    j["N"] = cfg.params.num_sites;
    j["params"] = {{"J", cfg.params.J}, {"Jprime", cfg.params.Jprime}, {"hz", cfg.params.hz},
                   {"hx", cfg.params.hx}};
    j["initial"] = cfg.initial;
    j["dt"] = cfg.dt;
    j["t_max"] = cfg.t_max;
    j["base"] = to_string(cfg.base);
    switch (cfg.command) {
    case Command::Thermalize:
        j["de"] = cfg.de;
        j["thresholds"] = {{"delta_sat", cfg.thresholds.delta_sat},
                           {"dwell", cfg.thresholds.dwell}};
        break;
    case Command::Sweep:
        j["hx_list"] = cfg.hx_list;
        [[fallthrough]];
    case Command::Propagate:
        j["d_list"] = cfg.d_list;
        j["thresholds"] = {{"delta_sat", cfg.thresholds.delta_sat},
                           {"eps_split", cfg.thresholds.eps_split},
                           {"dwell", cfg.thresholds.dwell},
                           {"eps_mi", cfg.thresholds.eps_mi}};
        break;
    case Command::Dispersion:
        j["hx_list"] = cfg.hx_list;
        break;
    }
    return j;
}

inline ProtocolConfig protocol_config(const RunConfig& cfg) {
    ProtocolConfig pc;
    pc.bulk = cfg.params;
    pc.bulk_initial = parse_initial(cfg.initial, cfg.num_sites());
    pc.d_list = cfg.d_list;
    pc.dt = cfg.dt;
    pc.t_max = cfg.t_max;
    pc.thresholds = cfg.thresholds;
    pc.base = cfg.base;
    pc.threads = cfg.threads;
    return pc;
}

// Serialization

inline std::string format_real(Real x) { return fmt::format("{:.15g}", x); }

/// Comma-separated, LF-terminated, header first.
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) {
        row_strings(header);
    }

    void row(const std::vector<Real>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (Real v : values) {
            cells.push_back(format_real(v));
        }
        row_strings(cells);
    }

    void row_strings(const std::vector<std::string>& cells) {
        if (cells.size() != cols_) {
            throw std::logic_error("csv row width does not match header");
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) {
                out_ += ',';
            }
            out_ += cells[i];
        }
        out_ += '\n';
    }

    const std::string& str() const { return out_; }

  private:
    std::size_t cols_;
    std::string out_;
};

inline void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw ConfigError("cannot open output file " + path.string());
    }
    f << body;
    if (!f) {
        throw ConfigError("failed writing " + path.string());
    }
}

/// Pretty-printed, keys sorted (nlohmann objects are ordered maps).
inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

inline void prepare_out_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw ConfigError("cannot create output directory " + dir.string());
    }
}

inline Json to_json(const Extraction& e) {
    if (e.found()) {
        return {{"value", *e.time}, {"reason", nullptr}};
    }
    return {{"value", nullptr}, {"reason", e.reason}};
}

inline Json to_json(const std::optional<Real>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json to_json(const DecompositionQuality& q) {
    return {{"max_residual", q.max_residual},
            {"orthonormality_error", q.orthonormality_error},
            {"trace_error", q.trace_error}};
}

inline Json to_json(const std::optional<VelocityFit>& f) {
    if (!f) {
        return nullptr;
    }
    Json pts = Json::array();
    for (const auto& [t, ell] : f->points) {
        pts.push_back({{"t", t}, {"ell", ell}});
    }
    return {{"slope", f->slope},
            {"intercept", f->intercept},
            {"r_squared", f->r_squared},
            {"slope_through_origin", f->slope_through_origin},
            {"points", pts}};
}

inline Json to_json(const ProtocolAnalysis& a) {
    Json rows = Json::array();
    for (const ScaleRow& r : a.rows) {
        rows.push_back({{"d", r.d},
                        {"ell", r.ell},
                        {"plateau", r.plateau},
                        {"t_star", to_json(r.t_star)},
                        {"t_diff", to_json(r.t_diff)},
                        {"t_mi", to_json(r.t_mi)},
                        {"growth_rate", to_json(r.growth_rate)},
                        {"xi", to_json(r.xi)}});
    }
    return {{"thresholds",
             {{"delta_sat", a.thresholds.delta_sat},
              {"eps_split", a.thresholds.eps_split},
              {"dwell", a.thresholds.dwell},
              {"eps_mi", a.thresholds.eps_mi}}},
            {"scales", rows},
            {"fit_ee", to_json(a.ee_fit)},
            {"fit_ee_even", to_json(a.ee_even)},
            {"fit_ee_odd", to_json(a.ee_odd)},
            {"fit_mi", to_json(a.mi_fit)},
            {"mean_t_diff_even", to_json(a.mean_t_diff_even)},
            {"mean_t_diff_odd", to_json(a.mean_t_diff_odd)},
            {"notes", a.notes}};
}

inline Json manifest_header(const RunConfig& cfg) {
    return {{"command", to_string(cfg.command)},
            {"code_version", kCodeVersion},
            {"config", echo_config(cfg)}};
}

struct CommandResult {
    Json manifest;
    std::vector<std::filesystem::path> files;
};

// Commands

inline CommandResult cmd_thermalize(const RunConfig& cfg, const std::filesystem::path& out) {
    ThermalizationConfig tc;
    tc.model = cfg.params;
    tc.initial = parse_initial(cfg.initial, cfg.num_sites());
    tc.dt = cfg.dt;
    tc.t_max = cfg.t_max;
    tc.de = cfg.de;
    tc.delta_sat = cfg.thresholds.delta_sat;
    tc.dwell = cfg.thresholds.dwell;
    tc.base = cfg.base;
    tc.threads = cfg.threads;
    const ThermalizationRun run = run_thermalization(tc);

    prepare_out_dir(out);
    CsvWriter csv({"t", "M_z", "S_half"});
    const auto& mz = run.magnetization.series;
    for (std::size_t k = 0; k < mz.size(); ++k) {
        csv.row({mz.t[k], mz.y[k], run.half_chain_entropy.y[k]});
    }
    CommandResult res;
    res.files = {out / "thermalize.csv", out / "thermalize.json"};
    write_file(res.files[0], csv.str());

    const EnsembleReport& rep = run.magnetization;
    Json m = manifest_header(cfg);
    Json rec = {{"found", run.recurrence.found},
                {"t_enter", to_json(run.recurrence.t_enter)},
                {"t_exit", to_json(run.recurrence.t_exit)},
                {"t_reenter", to_json(run.recurrence.t_reenter)}};
    m["derived"] = {
        {"E0", rep.e0},
        {"shell_count", rep.shell_count},
        {"diagonal_average", rep.diagonal_avg},
        {"microcanonical_average", std::isnan(rep.microcanonical_avg) ? Json(nullptr)
                                                                      : Json(rep.microcanonical_avg)},
        {"ensemble_gap", std::isnan(rep.microcanonical_avg)
                             ? Json(nullptr)
                             : Json(std::abs(rep.diagonal_avg - rep.microcanonical_avg))},
        {"long_time_average", long_time_average(rep.series)},
        {"entropy_t_star", to_json(run.entropy_t_star)},
        {"recurrence", rec},
        {"decomposition", to_json(run.quality)}};
    if (rep.shell_count == 0) {
        m["derived"]["notes"] = {"energy shell is empty; widen de"};
    }
    m["outputs"] = {"thermalize.csv", "thermalize.json"};
    res.manifest = m;
    write_file(res.files[1], dump_json(m));
    return res;
}

inline Json sensitivity_json(const RunRecord& run) {
    Json out = Json::array();
    for (const SensitivityCase& c : threshold_sensitivity(run)) {
        Json rows = Json::array();
        for (const ScaleRow& r : c.analysis.rows) {
            rows.push_back({{"d", r.d},
                            {"t_star", to_json(r.t_star.time)},
                            {"t_diff", to_json(r.t_diff.time)},
                            {"t_mi", to_json(r.t_mi.time)}});
        }
        out.push_back(
            {{"parameter", c.parameter},
             {"factor", c.factor},
             {"v_ee", c.analysis.ee_fit ? Json(c.analysis.ee_fit->slope) : Json(nullptr)},
             {"v_mi", c.analysis.mi_fit ? Json(c.analysis.mi_fit->slope) : Json(nullptr)},
             {"scales", rows}});
    }
    return out;
}

inline CommandResult cmd_propagate(const RunConfig& cfg, const std::filesystem::path& out) {
    const RunRecord run = run_protocol(protocol_config(cfg));
    prepare_out_dir(out);
    CommandResult res;
    Json outputs = Json::array();
    for (const SubsystemRecord& sub : run.subsystems) {
        CsvWriter csv({"t", "S_a", "S_b", "dS", "I_0R"});
        for (std::size_t k = 0; k < run.t.size(); ++k) {
            csv.row({run.t[k], sub.s_a.y[k], sub.s_b.y[k], sub.s_b.y[k] - sub.s_a.y[k],
                     sub.mutual_info.y[k]});
        }
        const std::string name = fmt::format("propagate_d{}.csv", sub.d);
        res.files.push_back(out / name);
        outputs.push_back(name);
        write_file(res.files.back(), csv.str());
    }
    Real s0_dev = 0.0;
    for (Real s : run.site0_entropy.y) {
        s0_dev = std::max(s0_dev, std::abs(s - (cfg.base == EntropyBase::Two ? 1.0 : std::log(2.0))));
    }
    Json m = manifest_header(cfg);
    m["derived"] = to_json(run.analysis);
    m["derived"]["E0"] = expectation(product_state(protocol_config(cfg).bulk_initial, cfg.num_sites()),
                                     build_hamiltonian(cfg.params));
    m["derived"]["max_norm_error"] = run.max_norm_error;
    m["derived"]["site0_entropy_max_deviation"] = s0_dev;
    m["derived"]["decomposition"] = to_json(run.quality);
    m["derived"]["lieb_robinson_bound"] = kLiebRobinsonBound;
    m["derived"]["sensitivity"] = sensitivity_json(run);
    outputs.push_back("propagate.json");
    m["outputs"] = outputs;
    res.files.push_back(out / "propagate.json");
    res.manifest = m;
    write_file(res.files.back(), dump_json(m));
    return res;
}

struct SweepPoint {
    Real hx = 0.0;
    std::optional<VelocityFit> fit;
    std::string error;
};

inline std::vector<SweepPoint> run_sweep(const RunConfig& cfg) {
    std::vector<SweepPoint> points(cfg.hx_list.size());
    parallel_for(points.size(), cfg.threads, [&](std::size_t i) {
        SweepPoint& p = points[i];
        p.hx = cfg.hx_list[i];
        try {
            ProtocolConfig pc = protocol_config(cfg);
            pc.bulk.hx = p.hx;
            pc.threads = 1;
            const RunRecord run = run_protocol(pc);
            p.fit = run.analysis.ee_fit;
            if (!p.fit) {
                p.error = run.analysis.notes.empty() ? "no fit" : run.analysis.notes.front();
            }
        } catch (const std::exception& e) {
            p.error = e.what();
        }
    });
    return points;
}

inline CommandResult cmd_sweep(const RunConfig& cfg, const std::filesystem::path& out) {
    if (cfg.hx_list.empty()) {
        throw ConfigError("sweep needs a non-empty hx_list");
    }
    const std::vector<SweepPoint> points = run_sweep(cfg);
    prepare_out_dir(out);
    CsvWriter csv({"h_x", "v_fit", "intercept", "r_squared", "v_through_origin", "v_max",
                   "ratio", "points", "status"});
    Json rows = Json::array();
    for (const SweepPoint& p : points) {
        Json vmax = nullptr;
        std::string vmax_s = "nan";
        if (p.hx >= 0.0) {
            vmax = ti_vmax(p.hx);
            vmax_s = format_real(ti_vmax(p.hx));
        }
        if (p.fit) {
            const Real ratio = p.hx >= 0.0 ? p.fit->slope / ti_vmax(p.hx) : std::nan("");
            csv.row_strings({format_real(p.hx), format_real(p.fit->slope),
                             format_real(p.fit->intercept), format_real(p.fit->r_squared),
                             format_real(p.fit->slope_through_origin), vmax_s, format_real(ratio),
                             std::to_string(p.fit->points.size()), "ok"});
        } else {
            std::string status = p.error;
            std::replace(status.begin(), status.end(), ',', ';');
            std::replace(status.begin(), status.end(), '\n', ' ');
            csv.row_strings({format_real(p.hx), "nan", "nan", "nan", "nan", vmax_s, "nan", "0",
                             status});
        }
        rows.push_back({{"h_x", p.hx},
                        {"v_max", vmax},
                        {"fit", to_json(p.fit)},
                        {"error", p.error.empty() ? Json(nullptr) : Json(p.error)}});
    }
    CommandResult res;
    res.files = {out / "sweep.csv", out / "sweep.json"};
    write_file(res.files[0], csv.str());
    Json m = manifest_header(cfg);
    m["derived"] = {{"points", rows}, {"lieb_robinson_bound", kLiebRobinsonBound}};
    m["outputs"] = {"sweep.csv", "sweep.json"};
    res.manifest = m;
    write_file(res.files[1], dump_json(m));
    return res;
}

/// Dispersion table on a k grid, then the velocity table, as CSV text.
inline std::string dispersion_tables(const std::vector<Real>& hx_list, int k_points = 33) {
    std::vector<std::string> header{"k"};
    for (Real h : hx_list) {
        header.push_back("eps_h" + format_real(h));
    }
    CsvWriter eps(header);
    for (int i = 0; i < k_points; ++i) {
        const Real k = std::numbers::pi * i / (k_points - 1);
        std::vector<Real> row{k};
        for (Real h : hx_list) {
            row.push_back(ti_dispersion(h, k));
        }
        eps.row(row);
    }
    CsvWriter vel({"h_x", "v_max", "v_max_numeric"});
    for (Real h : hx_list) {
        vel.row({h, ti_vmax(h), ti_vmax_numeric(h)});
    }
    return eps.str() + "\n" + vel.str();
}

} // namespace entprop
