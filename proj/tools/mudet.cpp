#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "mudet/harness.hpp"

namespace {

double parse_threshold(const std::string& text)
{
    if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw mudet::ConfigError("dth: cannot parse '" + text + "'");
    return v;
}

// Fills every option not given on the command line from a flat TOML/INI
// file whose keys are the long flag names ('_' and '-' both accepted).
void apply_config_file(CLI::App& cmd, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw mudet::ConfigError("cannot read config file " + path);
    const CLI::ConfigTOML format;
    for (const CLI::ConfigItem& item : format.from_config(in)) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        if (!item.parents.empty()) throw mudet::ConfigError("config file must be flat; found section key " + item.fullname());
        std::string key = item.name;
        std::replace(key.begin(), key.end(), '_', '-');
        CLI::Option* opt = cmd.get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config") throw mudet::ConfigError("unknown config key '" + item.name + "'");
        if (opt->count() > 0) continue;
        opt->add_result(item.inputs);
        opt->run_callback();
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Adaptive multiuser MIMO detection simulator"};
    app.require_subcommand(1);
    auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo BER sweep and write CSV");

    mudet::ExperimentConfig cfg;
    std::string detector = "pdfcc";
    std::string channel = "block";
    std::string stage1 = "linear";
    std::string code = "conv-7-5";
    std::string bcjr = "maxlog";
    std::string dth = "0.05";
    std::string out_path;
    std::string config_path;

    sim->add_option("--detector", detector, "ml, sdf, pdf or pdfcc")->capture_default_str();
    sim->add_option("--users", cfg.users, "Number of users K")->capture_default_str();
    sim->add_option("--rx", cfg.rx, "Receive antennas N_R")->capture_default_str();
    sim->add_option("--modulation", cfg.modulation, "qpsk or 16qam")->capture_default_str();
    sim->add_option("--channel", channel, "block or jakes")->capture_default_str();
    sim->add_option("--fdt", cfg.fdt, "Normalized Doppler for Jakes channels")->capture_default_str();
    sim->add_option("--ebn0", cfg.ebn0_db, "Eb/N0 points in dB")->delimiter(',')->capture_default_str();
    sim->add_option("--frames", cfg.frames, "Frames per Eb/N0 point")->capture_default_str();
    sim->add_option("--frame-length", cfg.frame_length, "Vectors per uncoded frame, pilots included")
        ->capture_default_str();
    sim->add_option("--pilots", cfg.pilots, "Training vectors per frame")->capture_default_str();
    sim->add_option("--lambda", cfg.lambda, "RLS forgetting factor")->capture_default_str();
    sim->add_option("--delta", cfg.delta, "RLS regularization delta")->capture_default_str();
    sim->add_option("--dth", dth, "Reliability threshold (a number or inf)")->capture_default_str();
    sim->add_option("--tau-max", cfg.tau_max, "Per-user candidate list cap")->capture_default_str();
    sim->add_option("--gamma-cap", cfg.gamma_cap, "Cap on combined candidate vectors")->capture_default_str();
    sim->add_flag("--recancel", cfg.recancel, "Recompute soft outputs from the selected vector");
    sim->add_option("--stage1", stage1, "P-DF first pass: forward, linear or sdf")->capture_default_str();
    sim->add_flag("--coded", cfg.coded, "Coded transmission with iterative detection and decoding");
    sim->add_option("--code", code, "Channel code")->check(CLI::IsMember({"conv-7-5"}))->capture_default_str();
    sim->add_option("--block-bits", cfg.block_bits, "Message bits per user block")->capture_default_str();
    sim->add_option("--turbo-iters", cfg.turbo_iters, "Turbo iterations")->capture_default_str();
    sim->add_option("--bcjr", bcjr, "maxlog or logmap")->check(CLI::IsMember({"maxlog", "logmap"}))
        ->capture_default_str();
    sim->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
    sim->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
    sim->add_option("--out", out_path, "CSV output path (stdout when omitted)");
    sim->add_option("--config", config_path, "Flat key = value config file; flags override it");

    try {
        app.parse(argc, argv);
        if (!config_path.empty()) apply_config_file(*sim, config_path);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const mudet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    try {
        cfg.detector = mudet::parse_detector(detector);
        if (channel == "block") {
            cfg.channel = mudet::FadingModel::BlockFading;
        } else if (channel == "jakes") {
            cfg.channel = mudet::FadingModel::Jakes;
        } else {
            throw mudet::ConfigError("channel must be block or jakes");
        }
        cfg.stage1 = mudet::parse_stage1(stage1);
        cfg.bcjr = bcjr == "logmap" ? mudet::BcjrMetric::LogMap : mudet::BcjrMetric::MaxLog;
        cfg.d_th = parse_threshold(dth);
        cfg.validate();

        const mudet::ResultRecord record = cfg.coded ? mudet::run_coded_sweep(cfg) : mudet::run_uncoded_sweep(cfg);
        if (out_path.empty()) {
            mudet::write_csv(std::cout, record);
        } else {
            std::ofstream os(out_path);
            if (!os) throw mudet::ConfigError("cannot open output file " + out_path);
            mudet::write_csv(os, record);
        }
        for (const auto& p : record.points) {
            std::cerr << "ebn0 " << p.ebn0_db << " dB: ber " << p.ber << " (" << p.trials << " frames, "
                      << p.wall_seconds << " s)\n";
        }
    } catch (const mudet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const mudet::UsageError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const mudet::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
