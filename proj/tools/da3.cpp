#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "da3/cli.hpp"

namespace {

struct Flag {
    const char* name;
    const char* help;
};

// Long flag name (also the config-file key) and its help text.
const Flag flags[] = {
    {"k", "k or range lo..hi (default 20)"},
    {"theta", "override of b/a inside (1/a, 1/lambda_c] (default midpoint)"},
    {"seed", "RNG seed (default 1)"},
    {"samples", "sample count (verify 100000, usection 1000)"},
    {"orbits", "number of orbits (default 20)"},
    {"n", "orbit length (lyapunov 1000000, hyptimes 100000)"},
    {"burn-in", "discarded iterates before each orbit (default 1000)"},
    {"L", "leaf length (default 1000)"},
    {"grid", "grid nodes per side (leaf 64, lattice coarsest admissible)"},
    {"step", "leaf integration step (default d/4)"},
    {"dir", "leaf direction: unstable or stable (default unstable)"},
    {"b-rate", "hyperbolic-time rate (default a_emp/2)"},
    {"margin", "landing margin for the u-section window (default 0)"},
    {"pairs", "backward-convergence pairs in leaf (default 100)"},
    {"n-max", "backward-convergence iterates (default 200)"},
    {"tol", "tolerance on signed margins (default 1e-9)"},
    {"format", "json or csv (default json)"},
    {"out", "output path (default stdout)"},
    {"csv-out", "also write the CSV here"},
    {"leaf-out", "leaf polyline CSV path (leaf only)"},
};

} // namespace

int main(int argc, char** argv)
{
    using namespace da3;
    CLI::App app{"Numerical checks for the DA maps f_k on the 3-torus"};
    app.require_subcommand(1);
    std::string config_path;
    std::map<std::string, std::string> values;
    app.add_option("--config", config_path, "key=value config file; flags override it");
    for (const auto& f : flags) app.add_option(std::string("--") + f.name, values[f.name], f.help);
    for (const auto& name : cli::commands()) app.add_subcommand(name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::exit_infeasible;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        cli::RunConfig cfg;
        if (!config_path.empty())
            for (const auto& [key, value] : cli::read_config_file(config_path)) cli::set_field(cfg, key, value);
        for (const auto& f : flags)
            if (app.count(std::string("--") + f.name) > 0) cli::set_field(cfg, f.name, values[f.name]);
        cfg = cli::resolve(command, cfg);
        const cli::Report rep = cli::run_command(command, cfg);
        cli::write_report(rep, cfg, std::cout);
        if (rep.exit_code != cli::exit_pass)
            std::cerr << "da3 " << command << ": " << (rep.exit_code == cli::exit_infeasible ? "infeasible" : "check failed")
                      << "\n";
        return rep.exit_code;
    } catch (const Error& e) {
        std::cerr << "da3 " << command << ": " << e.what() << "\n";
        return cli::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "da3 " << command << ": internal error: " << e.what() << "\n";
        return cli::exit_internal;
    }
}
