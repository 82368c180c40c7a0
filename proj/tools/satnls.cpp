// Command line front end. Subcommands: classify, solve, profile, sp,
// soliton, scan. Exit codes: 0 ok, 2 config/argument error, 3 solver
// non-convergence (partial artifacts are still written), 4 invalid regime.

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <satnls/runner.hpp>

namespace {

struct CommonArgs {
    std::string config;
    std::string preset;
    std::string out;
    int refine = 0;
};

void add_common(CLI::App* sub, CommonArgs& c) {
    sub->add_option("--config", c.config, "path to a key = value config file");
    sub->add_option("--preset", c.preset, "built-in preset name")
        ->check(CLI::IsMember(satnls::preset_names()));
    sub->add_option("--out", c.out,
                    "output directory (default: the config's output.dir)");
    sub->add_option("--refine", c.refine, "halve the mesh width this many times")
        ->check(CLI::Range(0, 8));
}

satnls::ExperimentConfig load_config(const CommonArgs& c) {
    if (c.config.empty() == c.preset.empty())
        throw satnls::ConfigError("arguments", 0,
                                  "exactly one of --config or --preset is required");
    satnls::ExperimentConfig cfg = c.config.empty()
        ? satnls::ExperimentConfig::from_string(satnls::preset_text(c.preset),
                                                "preset:" + c.preset)
        : satnls::ExperimentConfig::from_file(c.config);
    cfg.refine(c.refine);
    return cfg;
}

std::vector<double> parse_times(const std::string& text) {
    std::vector<double> t;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ',')) {
        token = satnls::detail::trim(token);
        if (token.empty()) continue;
        if (token == "pi") {
            t.push_back(M_PI);
            continue;
        }
        size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size())
            throw std::invalid_argument("bad time sample '" + token + "'");
        t.push_back(v);
    }
    if (t.empty())
        throw std::invalid_argument("--times: no samples given");
    return t;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for the saturated stationary "
                 "Schrodinger equation"};
    app.require_subcommand(1);

    CommonArgs ca;
    auto* cmd_classify = app.add_subcommand(
        "classify", "report existence/uniqueness admissibility, no solve");
    auto* cmd_solve = app.add_subcommand("solve", "run one stationary solve");
    auto* cmd_profile = app.add_subcommand(
        "profile", "solve, then ball-energy profiles and vanishing-radius data");
    auto* cmd_sp = app.add_subcommand(
        "sp", "coupled solve with the self-consistent potential");
    auto* cmd_soliton = app.add_subcommand(
        "soliton", "standing-wave residual invariance check");
    for (auto* sub : {cmd_classify, cmd_solve, cmd_profile, cmd_sp, cmd_soliton})
        add_common(sub, ca);

    std::string lambda_str = "1";
    double mu = 1.0;
    std::string times_str = "0,0.7,pi,10";
    cmd_soliton->add_option("--lambda", lambda_str, "phase coefficient: 1, i or -i")
        ->check(CLI::IsMember(std::vector<std::string>{"1", "i", "-i"}));
    cmd_soliton->add_option("--mu", mu, "frequency (positive)");
    cmd_soliton->add_option("--times", times_str,
                            "comma-separated sample times; the token pi is allowed");

    auto* cmd_scan = app.add_subcommand(
        "scan", "admissibility booleans over a rectangle of b for fixed a");
    satnls::ScanGrid grid;
    std::string a_str = "1";
    std::string scan_out = "out";
    cmd_scan->add_option("--a", a_str, "fixed coefficient a (complex literal)");
    cmd_scan->add_option("--re-lo", grid.re_lo, "lower bound for Re(b)");
    cmd_scan->add_option("--re-hi", grid.re_hi, "upper bound for Re(b)");
    cmd_scan->add_option("--im-lo", grid.im_lo, "lower bound for Im(b)");
    cmd_scan->add_option("--im-hi", grid.im_hi, "upper bound for Im(b)");
    cmd_scan->add_option("--n", grid.nre, "grid points per axis")
        ->check(CLI::Range(2, 2001));
    cmd_scan->add_option("--f-inf", grid.f_inf,
                         "sup-norm bound on the source, used for the "
                         "null-regime flag");
    cmd_scan->add_option("--out", scan_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        satnls::RunStatus status = satnls::RunStatus::ok;
        if (cmd_scan->parsed()) {
            grid.nim = grid.nre;
            grid.a = satnls::parse_complex(a_str);
            status = satnls::run_scan(grid, scan_out);
        } else {
            const satnls::ExperimentConfig cfg = load_config(ca);
            const std::string dir = ca.out.empty() ? cfg.out_dir : ca.out;
            if (cmd_classify->parsed()) {
                status = satnls::run_classify(cfg, dir);
            } else if (cmd_solve->parsed()) {
                status = satnls::run_solve(cfg, dir, ca.preset);
            } else if (cmd_profile->parsed()) {
                status = satnls::run_profile(cfg, dir, ca.preset);
            } else if (cmd_sp->parsed()) {
                status = satnls::run_sp(cfg, dir, ca.preset);
            } else if (cmd_soliton->parsed()) {
                satnls::Complex lambda{1.0, 0.0};
                if (lambda_str == "i") lambda = {0.0, 1.0};
                else if (lambda_str == "-i") lambda = {0.0, -1.0};
                if (!(mu > 0.0))
                    throw std::invalid_argument("--mu must be positive");
                status = satnls::run_soliton(cfg, dir, lambda, mu,
                                             parse_times(times_str), ca.preset);
            }
        }
        if (status == satnls::RunStatus::solver_failure)
            std::cerr << "satnls: solver did not converge "
                         "(partial artifacts written)\n";
        if (status == satnls::RunStatus::regime_error)
            std::cerr << "satnls: coefficients fail the admissibility "
                         "conditions (see regime.csv)\n";
        return static_cast<int>(status);
    } catch (const satnls::ConfigError& e) {
        std::cerr << "satnls: " << e.what() << "\n";
        return static_cast<int>(satnls::RunStatus::parse_error);
    } catch (const satnls::RegimeError& e) {
        std::cerr << "satnls: " << e.what() << "\n";
        return static_cast<int>(satnls::RunStatus::regime_error);
    } catch (const std::invalid_argument& e) {
        std::cerr << "satnls: " << e.what() << "\n";
        return static_cast<int>(satnls::RunStatus::parse_error);
    } catch (const std::exception& e) {
        std::cerr << "satnls: fatal: " << e.what() << "\n";
        return 1;
    }
}
