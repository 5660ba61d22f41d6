#ifndef DA3_CLI_HPP
#define DA3_CLI_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anosov.hpp"
#include "common.hpp"
#include "damap.hpp"
#include "foliation.hpp"
#include "hyperbolicity.hpp"
#include "parallel.hpp"
#include "perturbation.hpp"

namespace da3::cli {

inline constexpr const char* schema_version = "da3/report/v1";

/// Exit codes shared by every subcommand.
enum ExitCode : int { exit_pass = 0, exit_check_failed = 1, exit_infeasible = 2, exit_internal = 3 };

inline int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::parameter_out_of_range:
    case ErrorKind::infeasible:
    case ErrorKind::config:
    case ErrorKind::input_geometry:
    case ErrorKind::resolution: return exit_infeasible;
    case ErrorKind::bracket_violation:
    case ErrorKind::geometry_violation:
    case ErrorKind::trace_length: return exit_check_failed;
    default: return exit_internal;
    }
}

struct KRange {
    int lo = 20;
    int hi = 20;
    bool single() const { return lo == hi; }
};

/// "20" or "16..64".
inline KRange parse_k_range(const std::string& s)
{
    auto to_int = [&](const std::string& t) {
        std::size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(t, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (t.empty() || pos != t.size()) throw Error(ErrorKind::config, "bad k value '" + s + "'");
        return v;
    };
    const auto dots = s.find("..");
    KRange r;
    if (dots == std::string::npos) {
        r.lo = r.hi = to_int(s);
    } else {
        r.lo = to_int(s.substr(0, dots));
        r.hi = to_int(s.substr(dots + 2));
    }
    if (r.hi < r.lo) throw Error(ErrorKind::config, "empty k range '" + s + "'");
    return r;
}

/// Every run parameter. Zero-valued sizes mean "the subcommand's default" and
/// are replaced by resolve() before the config is echoed.
struct RunConfig {
    std::string k = "20";
    std::optional<double> theta;
    std::uint64_t seed = 1;
    long samples = 0;  // verify 100000, usection 1000
    int orbits = 20;
    long n = 0;        // lyapunov 1000000, hyptimes 100000
    long burn_in = 1000;
    double L = 1000;
    int grid = 0;      // leaf 64, lattice coarsest admissible
    double step = 0;   // 0 means d/4
    std::string dir = "unstable";
    double b_rate = 0; // 0 means a_emp/2
    double margin = 0;
    long pairs = 100;
    long n_max = 200;
    double tol = 1e-9;
    std::string format = "json";
    std::string out;
    std::string csv_out;
    std::string leaf_out;

    nlohmann::json to_json() const
    {
        return {{"k", k},
                {"theta", theta ? nlohmann::json(*theta) : nlohmann::json(nullptr)},
                {"seed", seed},
                {"samples", samples},
                {"orbits", orbits},
                {"n", n},
                {"burn_in", burn_in},
                {"L", L},
                {"grid", grid},
                {"step", step},
                {"dir", dir},
                {"b_rate", b_rate},
                {"margin", margin},
                {"pairs", pairs},
                {"n_max", n_max},
                {"tol", tol},
                {"format", format},
                {"out", out},
                {"csv_out", csv_out},
                {"leaf_out", leaf_out}};
    }
};

inline std::string normalize_key(std::string key)
{
    for (char& c : key)
        if (c == '-') c = '_';
    return key;
}

/// Assigns one textual key=value pair; unknown keys and malformed values are config errors.
inline void set_field(RunConfig& c, const std::string& raw_key, const std::string& value)
{
    const std::string key = normalize_key(raw_key);
    auto num = [&]() {
        std::size_t pos = 0;
        double v = 0;
        try {
            v = std::stod(value, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (value.empty() || pos != value.size() || !std::isfinite(v))
            throw Error(ErrorKind::config, "bad value for " + key + ": '" + value + "'");
        return v;
    };
    auto integer = [&]() {
        const double v = num();
        if (v != std::floor(v) || std::fabs(v) > 9e15) throw Error(ErrorKind::config, key + " must be an integer");
        return static_cast<long>(v);
    };
    if (key == "k") c.k = value;
    else if (key == "theta") c.theta = num();
    else if (key == "seed") {
        const long v = integer();
        if (v < 0) throw Error(ErrorKind::config, "seed must be non-negative");
        c.seed = static_cast<std::uint64_t>(v);
    } else if (key == "samples") c.samples = integer();
    else if (key == "orbits") c.orbits = static_cast<int>(integer());
    else if (key == "n") c.n = integer();
    else if (key == "burn_in") c.burn_in = integer();
    else if (key == "L") c.L = num();
    else if (key == "grid") c.grid = static_cast<int>(integer());
    else if (key == "step") c.step = num();
    else if (key == "dir") c.dir = value;
    else if (key == "b_rate") c.b_rate = num();
    else if (key == "margin") c.margin = num();
    else if (key == "pairs") c.pairs = integer();
    else if (key == "n_max") c.n_max = integer();
    else if (key == "tol") c.tol = num();
    else if (key == "format") c.format = value;
    else if (key == "out") c.out = value;
    else if (key == "csv_out") c.csv_out = value;
    else if (key == "leaf_out") c.leaf_out = value;
    else throw Error(ErrorKind::config, "unknown config key '" + raw_key + "'");
}

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Flat key=value text; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text)
{
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::config, "config line " + std::to_string(lineno) + " has no '='");
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Fills command-specific defaults and validates ranges.
inline RunConfig resolve(const std::string& command, RunConfig c)
{
    parse_k_range(c.k);
    if (c.samples == 0) c.samples = command == "usection" ? 1000 : 100000;
    if (c.n == 0) c.n = command == "lyapunov" ? 1000000 : 100000;
    if (c.grid == 0 && command == "leaf") c.grid = 64;
    if (c.samples < 1) throw Error(ErrorKind::config, "samples must be positive");
    if (c.orbits < 1) throw Error(ErrorKind::config, "orbits must be positive");
    if (c.n < 1) throw Error(ErrorKind::config, "n must be positive");
    if (c.burn_in < 0) throw Error(ErrorKind::config, "burn_in must be non-negative");
    if (!(c.L > 0)) throw Error(ErrorKind::config, "L must be positive");
    if (c.grid < 0) throw Error(ErrorKind::config, "grid must be non-negative");
    if (c.step < 0) throw Error(ErrorKind::config, "step must be non-negative");
    if (c.dir != "unstable" && c.dir != "stable") throw Error(ErrorKind::config, "dir must be unstable or stable");
    if (c.b_rate < 0) throw Error(ErrorKind::config, "b_rate must be non-negative");
    if (!(c.margin >= 0 && c.margin < 1)) throw Error(ErrorKind::config, "margin must lie in [0, 1)");
    if (c.pairs < 0) throw Error(ErrorKind::config, "pairs must be non-negative");
    if (c.n_max < 1) throw Error(ErrorKind::config, "n_max must be positive");
    if (!(c.tol >= 0)) throw Error(ErrorKind::config, "tol must be non-negative");
    if (c.format != "json" && c.format != "csv") throw Error(ErrorKind::config, "format must be json or csv");
    return c;
}

struct Report {
    nlohmann::json json;
    std::string csv;
    int exit_code = exit_pass;
};

inline Report finish(const std::string& command, const char* anchor, const RunConfig& cfg, nlohmann::json results,
                     bool pass, std::string csv, nlohmann::json extra = nlohmann::json::object())
{
    const nlohmann::json config = cfg.to_json();
    Report r;
    r.json = {{"schema_version", schema_version},
              {"command", command},
              {"paper_anchor", anchor},
              {"config", config},
              {"param_hash", hex64(fnv1a(command + "|" + config.dump()))},
              {"results", std::move(results)},
              {"pass", pass}};
    for (auto& [key, value] : extra.items()) r.json[key] = value;
    r.csv = std::move(csv);
    r.exit_code = pass ? exit_pass : exit_check_failed;
    return r;
}

inline std::vector<int> k_values(const RunConfig& cfg)
{
    const KRange kr = parse_k_range(cfg.k);
    std::vector<int> ks;
    for (int k = kr.lo; k <= kr.hi; ++k) ks.push_back(k);
    return ks;
}

inline damap::ParamOverrides overrides(const RunConfig& cfg)
{
    damap::ParamOverrides ov;
    ov.theta = cfg.theta;
    return ov;
}

inline double to_d(anosov::Extended v) { return static_cast<double>(v); }

inline double angle_between(const Vec3& a, const Vec3& b)
{
    return std::acos(std::clamp(std::fabs(dot(a, b)) / (norm(a) * norm(b)), 0.0, 1.0));
}

// --- spectrum ----------------------------------------------------------------------

inline Report cmd_spectrum(const RunConfig& cfg)
{
    const auto ks = k_values(cfg);
    struct Row {
        nlohmann::json json;
        std::string csv;
        bool pass;
    };
    const auto rows = parallel_map(static_cast<long>(ks.size()), [&](long i) {
        const int k = ks[static_cast<std::size_t>(i)];
        const auto s = anosov::solve_spectrum(k);
        const auto f = anosov::eigenframe(s);
        const double product_err = to_d(std::fabs(s.product() - 1));
        bool brackets = true;
        const anosov::Extended roots[3] = {s.lambda_s, s.lambda_c, s.lambda_u};
        for (int j = 0; j < 3; ++j) brackets = brackets && s.brackets[j].contains_strictly(roots[j]);
        const bool pass = brackets && product_err <= 1e-10;
        Row row;
        row.json = {{"k", k},
                    {"lambda_s", s.ls()},
                    {"lambda_c", s.lc()},
                    {"lambda_u", s.lu()},
                    {"product_err", product_err},
                    {"residuals", {to_d(s.residuals[0]), to_d(s.residuals[1]), to_d(s.residuals[2])}},
                    {"brackets",
                     {{to_d(s.brackets[0].lo), to_d(s.brackets[0].hi)},
                      {to_d(s.brackets[1].lo), to_d(s.brackets[1].hi)},
                      {to_d(s.brackets[2].lo), to_d(s.brackets[2].hi)}}},
                    {"brackets_pass", brackets},
                    {"frame_angles",
                     {{"u_c", angle_between(f.e_u, f.e_c)},
                      {"c_s", angle_between(f.e_c, f.e_s)},
                      {"u_s", angle_between(f.e_u, f.e_s)}}},
                    {"pass", pass}};
        row.csv = std::to_string(k) + "," + fmt_double(s.ls()) + "," + fmt_double(s.lc()) + "," + fmt_double(s.lu())
                + "," + fmt_double(product_err) + "\n";
        row.pass = pass;
        return row;
    });
    nlohmann::json results = nlohmann::json::array();
    std::string csv = "k,lambda_s,lambda_c,lambda_u,product_err\n";
    bool pass = true;
    for (const auto& r : rows) {
        results.push_back(r.json);
        csv += r.csv;
        pass = pass && r.pass;
    }
    return finish("spectrum", "eigenvalue brackets and eigenframe of A_k", cfg, results, pass, csv);
}

// --- verify ------------------------------------------------------------------------

inline Report cmd_verify(const RunConfig& cfg)
{
    const auto ks = k_values(cfg);
    struct Row {
        nlohmann::json json;
        std::string csv;
        bool feasible = false;
        bool pass = false;
    };
    const auto rows = parallel_map(static_cast<long>(ks.size()), [&](long i) {
        const int k = ks[static_cast<std::size_t>(i)];
        Row row;
        std::string reason;
        std::optional<damap::DAParams> params;
        if (!cfg.theta) {
            const auto f = damap::check_feasibility(k);
            if (!f.feasible()) reason = f.reason;
        }
        if (reason.empty()) {
            try {
                params = damap::default_params(k, overrides(cfg));
                hyperbolicity::cone_constants(*params);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::infeasible && e.kind() != ErrorKind::parameter_out_of_range) throw;
                reason = e.what();
                params.reset();
            }
        }
        if (!params) {
            row.json = {{"k", k}, {"feasible", false}, {"reason", reason}, {"pass", false}};
            row.csv = std::to_string(k) + ",0,,,,,,,,,0\n";
            return row;
        }
        const damap::DAMap m(*params);
        const auto cones = hyperbolicity::cone_constants(m.params());
        const auto tube = perturbation::verify_tube_lemma(*m.params().tube, cfg.samples, cfg.seed);
        const auto split = hyperbolicity::check_cone_invariance(m, cones, cfg.samples, cfg.seed);
        const auto vol = hyperbolicity::check_volume_domination(m, cfg.samples, cfg.seed);
        const auto bset = damap::check_b_set(m, cfg.samples, cfg.seed);
        const double gap = m.certificate().gap, two_d = 2 * m.params().d;
        const bool lattice_pass = gap > two_d && gap > m.cross_section_diameter();
        const bool tube_pass = tube.min_margin() >= -cfg.tol;
        row.feasible = true;
        row.pass = tube_pass && split.pass() && vol.pass && lattice_pass && bset.pass;
        row.json = {{"k", k},
                    {"feasible", true},
                    {"manifest", m.manifest()},
                    {"cones", cones.to_json()},
                    {"tube_lemma", tube.to_json()},
                    {"cone_invariance", split.to_json()},
                    {"volume_domination", vol.to_json()},
                    {"lattice", {{"gap", gap}, {"two_d", two_d}, {"cross_section_diameter", m.cross_section_diameter()},
                                 {"pass", lattice_pass}}},
                    {"b_set", bset.to_json()},
                    {"pass", row.pass}};
        row.csv = std::to_string(k) + ",1," + fmt_double(tube.min_margin()) + "," + fmt_double(split.min_margin_u) + ","
                + fmt_double(split.min_margin_s) + "," + fmt_double(vol.min_log_margin_expanding) + ","
                + fmt_double(vol.min_log_margin_contracting) + "," + fmt_double(gap) + "," + fmt_double(two_d) + ","
                + (bset.pass ? "1" : "0") + "," + (row.pass ? "1" : "0") + "\n";
        return row;
    }, ks.size() > 1 ? worker_count() : 1);

    nlohmann::json results = nlohmann::json::array();
    std::string csv = "k,feasible,tube_margin,cone_margin_u,cone_margin_s,volume_margin_expanding,"
                      "volume_margin_contracting,lattice_gap,two_d,b_set_pass,pass\n";
    bool pass = true, any_feasible = false;
    nlohmann::json smallest = nullptr;
    for (const auto& r : rows) {
        results.push_back(r.json);
        csv += r.csv;
        if (r.feasible) {
            if (!any_feasible) smallest = r.json["k"];
            any_feasible = true;
            pass = pass && r.pass;
        }
    }
    Report rep = finish("verify",
                        "partial hyperbolicity of f_k: tube lemma, cone invariance, volume domination, "
                        "lattice separation of the tube, B-set",
                        cfg, results, pass && any_feasible, csv, {{"smallest_feasible_k", smallest}});
    if (!any_feasible) rep.exit_code = exit_infeasible;
    return rep;
}

// --- lyapunov ----------------------------------------------------------------------

inline Report cmd_lyapunov(const RunConfig& cfg)
{
    nlohmann::json results = nlohmann::json::array();
    std::string csv = "k,orbit,lam_u,lam_c,lam_s,cu_margin,center_avg,exponent_sum_error\n";
    bool pass = true;
    for (int k : k_values(cfg)) {
        const damap::DAMap m(damap::default_params(k, overrides(cfg)));
        const auto rep = hyperbolicity::birkhoff_check(m, cfg.orbits, cfg.n, cfg.burn_in, cfg.seed);
        const double target = std::log(m.lu2());
        double max_lam_u_err = 0, min_lam_c = INFINITY;
        for (const auto& o : rep.per_orbit) {
            max_lam_u_err = std::max(max_lam_u_err, std::fabs(o.lam_u - target));
            min_lam_c = std::min(min_lam_c, o.lam_c);
            csv += std::to_string(k) + "," + std::to_string(o.index) + "," + fmt_double(o.lam_u) + ","
                 + fmt_double(o.lam_c) + "," + fmt_double(o.lam_s) + "," + fmt_double(o.cu_margin) + ","
                 + fmt_double(o.center_avg) + "," + fmt_double(o.exponent_sum_error) + "\n";
        }
        const bool ok = rep.pass && min_lam_c > 0;
        pass = pass && ok;
        results.push_back({{"k", k},
                           {"target_lam_u", target},
                           {"max_lam_u_error", max_lam_u_err},
                           {"min_lam_c", min_lam_c},
                           {"birkhoff", rep.to_json()},
                           {"pass", ok}});
    }
    return finish("lyapunov", "uniform Birkhoff bounds on the center-unstable Jacobian and the center derivative",
                  cfg, results, pass, csv);
}

// --- hyptimes ----------------------------------------------------------------------

inline Report cmd_hyptimes(const RunConfig& cfg)
{
    nlohmann::json results = nlohmann::json::array();
    std::string csv = "k,n,count,density\n";
    bool pass = true;
    for (int k : k_values(cfg)) {
        const damap::DAMap m(damap::default_params(k, overrides(cfg)));
        const auto cones = hyperbolicity::cone_constants(m.params());
        const double w = hyperbolicity::cu_weight(cones);
        hyperbolicity::OrbitOptions opt;
        opt.n = cfg.n;
        opt.burn_in = cfg.burn_in;
        opt.cu_weight = w;
        opt.keep_lognorms = true;
        const auto s = hyperbolicity::run_orbit(m, hyperbolicity::orbit_start(cfg.seed, 0), opt);
        const double a_emp = 0.5 * std::min(s.avg_log_det_cu() - m.unstable_log_rate(), s.avg_log_norm_F());
        const double b_rate = cfg.b_rate > 0 ? cfg.b_rate : a_emp / 2;
        nlohmann::json row = {{"k", k}, {"n", cfg.n}, {"cu_weight", w}, {"a_emp", a_emp}, {"b_rate", b_rate}};
        if (!(b_rate > 0)) {
            row["pass"] = false;
            row["reason"] = "a_emp is not positive";
            results.push_back(row);
            pass = false;
            continue;
        }
        const auto ht = hyperbolicity::hyperbolic_times(s.lognorms, b_rate);
        const double density = static_cast<double>(ht.size()) / static_cast<double>(s.lognorms.size());
        nlohmann::json contraction = nlohmann::json::array();
        bool contraction_pass = true;
        // the pulled-back displacement shrinks like e^{-n b_rate}; past n b_rate = 200
        // it would leave the double range, so only earlier times are checked
        std::size_t usable = 0;
        while (usable < ht.size() && static_cast<double>(ht[usable]) * b_rate <= 200) ++usable;
        if (usable > 0) {
            for (std::size_t idx : {std::size_t(0), usable / 2, usable - 1}) {
                const auto c = hyperbolicity::find_delta1(m, s.orbit, ht[idx], b_rate, m.params().d, w, 20, cfg.seed);
                contraction.push_back(c.to_json());
                contraction_pass = contraction_pass && c.pass;
            }
        }
        for (std::size_t j = 0; j < ht.size(); ++j)
            csv += std::to_string(k) + "," + std::to_string(ht[j]) + "," + std::to_string(j + 1) + ","
                 + fmt_double(static_cast<double>(j + 1) / static_cast<double>(ht[j])) + "\n";
        const bool ok = density > 0 && contraction_pass;
        pass = pass && ok;
        row["count"] = ht.size();
        row["density"] = density;
        row["pliss_lower_bound"] = hyperbolicity::pliss_lower_bound(s.lognorms, b_rate);
        row["first_times"] = std::vector<long>(ht.begin(), ht.begin() + static_cast<long>(std::min<std::size_t>(ht.size(), 20)));
        row["backward_contraction"] = contraction;
        row["contraction_checked_below_n"] = usable > 0 ? ht[usable - 1] : 0;
        row["pass"] = ok;
        results.push_back(row);
    }
    return finish("hyptimes", "hyperbolic times, their Pliss density and backward contraction along the cu-plane",
                  cfg, results, pass, csv);
}

// --- leaf --------------------------------------------------------------------------

inline std::vector<double> density_lengths(double L)
{
    std::vector<double> out;
    for (double l = 1; l < L * (1 - 1e-12); l *= 10) out.push_back(l);
    out.push_back(L);
    return out;
}

inline Report cmd_leaf(const RunConfig& cfg)
{
    nlohmann::json results = nlohmann::json::array();
    std::string csv = "k,L,epsilon\n";
    bool pass = true;
    const auto dir = cfg.dir == "stable" ? foliation::LeafDirection::stable : foliation::LeafDirection::unstable;
    for (int k : k_values(cfg)) {
        const damap::DAMap m(damap::default_params(k, overrides(cfg)));
        const double step = cfg.step > 0 ? cfg.step : m.params().d / 4;
        Rng rng(cfg.seed, 0x1eaf);
        const LiftPoint x0{{rng.uniform(), rng.uniform(), rng.uniform()}};
        const auto leaf = foliation::trace_leaf(m, x0, dir, cfg.L, step);
        if (!cfg.leaf_out.empty()) {
            std::ofstream os(cfg.leaf_out);
            if (!os) throw Error(ErrorKind::config, "cannot write '" + cfg.leaf_out + "'");
            leaf.write_csv(os);
        }
        const auto curve = foliation::density_curve(leaf, density_lengths(cfg.L), cfg.grid);
        nlohmann::json curve_json = nlohmann::json::array();
        bool nonincreasing = true;
        for (std::size_t i = 0; i < curve.size(); ++i) {
            curve_json.push_back(curve[i].to_json());
            csv += std::to_string(k) + "," + fmt_double(curve[i].leaf_length) + "," + fmt_double(curve[i].epsilon) + "\n";
            if (i > 0 && curve[i].epsilon > curve[i - 1].epsilon) nonincreasing = false;
        }
        const bool improves = curve.size() < 2 || curve.back().epsilon < curve.front().epsilon;

        long converged = 0;
        Rng pr(cfg.seed, 0xc0de);
        const Vec3 wc{0, 1e-3 / norm(m.from_b({0, 1, 0})), 0};
        for (long i = 0; i < cfg.pairs; ++i) {
            const TorusPoint x{{pr.uniform(), pr.uniform(), pr.uniform()}};
            if (foliation::backward_convergence_probe(m, x, wc, cfg.n_max).pass) ++converged;
        }
        const double fraction = cfg.pairs > 0 ? static_cast<double>(converged) / static_cast<double>(cfg.pairs) : 1.0;
        double max_slope = 0;
        for (double s : leaf.slopes) max_slope = std::max(max_slope, s);
        const bool ok = nonincreasing && improves && fraction >= 0.95;
        pass = pass && ok;
        results.push_back({{"k", k},
                           {"direction", foliation::to_string(dir)},
                           {"start", {x0.x[0], x0.x[1], x0.x[2]}},
                           {"step", step},
                           {"points", leaf.points.size()},
                           {"arc_length", leaf.arc_length},
                           {"max_cone_slope", max_slope},
                           {"density_curve", curve_json},
                           {"density_nonincreasing", nonincreasing},
                           {"density_improves", improves},
                           {"backward_convergence", {{"pairs", cfg.pairs}, {"converged", converged},
                                                     {"fraction", fraction}, {"n_max", cfg.n_max}}},
                           {"pass", ok}});
    }
    return finish("leaf", "density of strong leaves and backward convergence of center-displaced pairs", cfg,
                  results, pass, csv);
}

// --- lattice -----------------------------------------------------------------------

inline Report cmd_lattice(const RunConfig& cfg)
{
    const auto ks = k_values(cfg);
    const auto rows = parallel_map(static_cast<long>(ks.size()), [&](long i) {
        return foliation::lattice_geometry(ks[static_cast<std::size_t>(i)], cfg.grid);
    });
    nlohmann::json results = nlohmann::json::array();
    std::string csv = "k,min_gap,two_d,epsilon,bound,beta,m_gap,pass\n";
    bool pass = true;
    for (const auto& g : rows) {
        results.push_back(g.to_json());
        csv += std::to_string(g.k) + "," + fmt_double(g.certificate.gap) + "," + fmt_double(g.two_d) + ","
             + fmt_double(g.density.epsilon) + "," + fmt_double(g.density.bound) + "," + fmt_double(g.sequences.beta)
             + "," + fmt_double(g.sequences.m_gap) + "," + (g.pass() ? "1" : "0") + "\n";
        pass = pass && g.pass();
    }
    return finish("lattice", "separation of center-segment translates and density of the projected center segment",
                  cfg, results, pass, csv);
}

// --- usection ----------------------------------------------------------------------

inline Report cmd_usection(const RunConfig& cfg)
{
    nlohmann::json results = nlohmann::json::array();
    std::string csv = "k,samples,inside_drift_window,inside_landing_window,max_unstable_drift_ratio,"
                      "max_landing_over_b,integrator_error,pass\n";
    bool pass = true;
    for (int k : k_values(cfg)) {
        const damap::DAMap m(damap::default_params(k, overrides(cfg)));
        foliation::USectionOptions opt;
        opt.samples = cfg.samples;
        opt.seed = cfg.seed;
        opt.margin = cfg.margin;
        opt.step = cfg.step;
        const auto r = foliation::u_section_probe(m, opt);
        nlohmann::json row = r.to_json();
        row["k"] = k;
        results.push_back(row);
        csv += std::to_string(k) + "," + std::to_string(r.samples) + "," + std::to_string(r.inside_drift_window) + ","
             + std::to_string(r.inside_landing_window) + "," + fmt_double(r.max_unstable_drift_ratio) + ","
             + fmt_double(r.max_landing_over_b) + "," + fmt_double(r.integrator_error) + "," + (r.pass ? "1" : "0")
             + "\n";
        pass = pass && r.pass;
    }
    return finish("usection", "crossing windows of unstable leaves through the u-section", cfg, results, pass, csv);
}

inline const std::vector<std::string>& commands()
{
    static const std::vector<std::string> names{"spectrum", "verify", "lyapunov", "hyptimes", "leaf", "lattice", "usection"};
    return names;
}

inline Report run_command(const std::string& command, const RunConfig& raw)
{
    const RunConfig cfg = resolve(command, raw);
    if (command == "spectrum") return cmd_spectrum(cfg);
    if (command == "verify") return cmd_verify(cfg);
    if (command == "lyapunov") return cmd_lyapunov(cfg);
    if (command == "hyptimes") return cmd_hyptimes(cfg);
    if (command == "leaf") return cmd_leaf(cfg);
    if (command == "lattice") return cmd_lattice(cfg);
    if (command == "usection") return cmd_usection(cfg);
    throw Error(ErrorKind::config, "unknown command '" + command + "'");
}

/// Writes the report in the configured format to `out` (or cfg.out), plus the
/// CSV to cfg.csv_out when set.
inline void write_report(const Report& rep, const RunConfig& cfg, std::ostream& out)
{
    const std::string body = cfg.format == "csv" ? rep.csv : rep.json.dump(2) + "\n";
    if (cfg.out.empty() || cfg.out == "-") {
        out << body;
    } else {
        std::ofstream os(cfg.out, std::ios::binary);
        if (!os) throw Error(ErrorKind::config, "cannot write '" + cfg.out + "'");
        os << body;
    }
    if (!cfg.csv_out.empty()) {
        std::ofstream os(cfg.csv_out, std::ios::binary);
        if (!os) throw Error(ErrorKind::config, "cannot write '" + cfg.csv_out + "'");
        os << rep.csv;
    }
}

} // namespace da3::cli

#endif // DA3_CLI_HPP
