#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "entprop/entprop.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

std::string read_text(const std::string& path) {
    if (path.empty()) {
        return {};
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw entprop::ConfigError("cannot read config file " + path);
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::filesystem::path default_out_dir() {
    const char* env = std::getenv("ENTPROP_OUT_DIR");
    return env && *env ? std::filesystem::path(env) : std::filesystem::path("entprop_out");
}

struct Options {
    std::string config;
    std::string out;
    int threads = entprop::default_thread_count();
    double dt = 0.0;
    double tmax = 0.0;
    std::string base;
    int k_points = 33;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entanglement propagation in spin chains"};
    app.set_version_flag("--version", std::string(entprop::kCodeVersion));
    app.require_subcommand(1);

    Options opt;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "Output directory (default $ENTPROP_OUT_DIR or ./entprop_out)");
        sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--dt", opt.dt, "Time step");
        sub->add_option("--tmax", opt.tmax, "Final time");
        sub->add_option("--base", opt.base, "Entropy base")->check(CLI::IsMember({"2", "e"}));
    };
    CLI::App* therm = app.add_subcommand("thermalize", "M_z(t), half-chain EE, ensemble averages");
    CLI::App* prop = app.add_subcommand("propagate", "Two-state protocol, time scales, velocity fits");
    CLI::App* sweep = app.add_subcommand("sweep", "Velocity fit for each h_x of the TI chain");
    CLI::App* disp = app.add_subcommand("dispersion", "Quasi-particle dispersion and v_max tables");
    for (CLI::App* sub : {therm, prop, sweep}) {
        add_common(sub);
    }
    disp->add_option("--config", opt.config, "JSON config file (hx_list)")->check(CLI::ExistingFile);
    disp->add_option("--k-points", opt.k_points, "k samples on [0, pi]")->check(CLI::Range(2, 100000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    CLI::App* used = app.get_subcommands().front();
    try {
        entprop::Command cmd = entprop::Command::Dispersion;
        if (used == therm) cmd = entprop::Command::Thermalize;
        if (used == prop) cmd = entprop::Command::Propagate;
        if (used == sweep) cmd = entprop::Command::Sweep;

        entprop::Overrides ov;
        if (cmd != entprop::Command::Dispersion) {
            if (used->count("--dt")) ov.dt = opt.dt;
            if (used->count("--tmax")) ov.t_max = opt.tmax;
            if (used->count("--base")) {
                ov.base = opt.base == "2" ? entprop::EntropyBase::Two : entprop::EntropyBase::E;
            }
            ov.threads = opt.threads;
        }
        const entprop::RunConfig cfg = entprop::parse_config(read_text(opt.config), cmd, ov);
        const std::filesystem::path out = opt.out.empty() ? default_out_dir() : std::filesystem::path(opt.out);

        entprop::CommandResult res;
        switch (cmd) {
        case entprop::Command::Thermalize:
            res = entprop::cmd_thermalize(cfg, out);
            break;
        case entprop::Command::Propagate:
            res = entprop::cmd_propagate(cfg, out);
            break;
        case entprop::Command::Sweep:
            res = entprop::cmd_sweep(cfg, out);
            break;
        case entprop::Command::Dispersion:
            std::cout << entprop::dispersion_tables(cfg.hx_list, opt.k_points);
            return kExitOk;
        }
        for (const auto& f : res.files) {
            std::cerr << "wrote " << f.string() << "\n";
        }
    } catch (const entprop::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const entprop::NumericalContractError& e) {
        std::cerr << "numerical contract violation: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
