#ifndef DA3_HYPERBOLICITY_HPP
#define DA3_HYPERBOLICITY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "damap.hpp"
#include "parallel.hpp"

namespace da3::hyperbolicity {

struct ConeParams {
    double Ku = 0;
    double Ks = 0;
    double Theta = 0;
    double M = 0;
    double ThetaP = 0;
    double MP = 0;

    nlohmann::json to_json() const
    {
        return {{"Ku", Ku}, {"Ks", Ks}, {"Theta", Theta}, {"M", M}, {"ThetaP", ThetaP}, {"MP", MP}};
    }
};

inline ConeParams cone_constants(const damap::DAParams& p)
{
    const double lc = p.spectrum.lc(), lu = p.spectrum.lu(), ls = p.spectrum.ls();
    ConeParams c;
    c.Theta = 6 * (lc / lu) * (lc / lu);
    c.M = 8 * (lc / lu) * (p.b / p.d) * std::fabs(p.c);
    c.ThetaP = ls * ls;
    c.MP = 8 * ls * lc * (p.b / p.d) * std::fabs(p.c);
    if (!(c.Theta < 1))
        throw Error(ErrorKind::infeasible, "k=" + std::to_string(p.k) + " too small: Theta = " + fmt_double(c.Theta));
    if (!(c.ThetaP < 1)) throw Error(ErrorKind::infeasible, "Theta' = " + fmt_double(c.ThetaP) + " is not below 1");
    c.Ku = 2 * c.M / (1 - c.Theta);
    c.Ks = 2 * c.MP / (1 - c.ThetaP);
    return c;
}

/// Weight on the x-axis of the cu-plane norm max(w|x|, |y|) used for
/// ||Tf^{-1}|E^cu||. With w = 100 M the shear term adds at most one percent.
inline double cu_weight(const ConeParams& c) { return 100 * c.M; }

/// Sample points for f_k: half uniform on the torus, half in A^{-1} of the
/// tube so that the perturbation is active at A p.
inline std::vector<TorusPoint> sample_points(const damap::DAMap& m, long n, std::uint64_t seed)
{
    Rng rng(seed, 0x5a);
    const auto& p = m.params();
    std::vector<TorusPoint> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        if (i % 2 == 0) {
            pts.push_back({{rng.uniform(), rng.uniform(), rng.uniform()}});
        } else {
            const double r = p.d * std::sqrt(rng.uniform()), t = rng.uniform(0, 6.283185307179586);
            const Vec3 local{r * std::cos(t), rng.uniform(-p.a, p.a), r * std::sin(t)};
            pts.push_back(m.apply_A_inv(make_torus_point(m.from_b(local))));
        }
    }
    return pts;
}

// --- dominated splitting ------------------------------------------------------

using Plane = std::array<Vec3, 2>;

struct SplittingReport {
    long samples = 0;
    double Ku = 0;
    double Ks = 0;
    double max_image_slope_u = 0;
    double max_image_slope_s = 0;
    double min_margin_u = std::numeric_limits<double>::infinity();
    double min_margin_s = std::numeric_limits<double>::infinity();
    double min_log_margin_expanding = std::numeric_limits<double>::infinity();
    double min_log_margin_contracting = std::numeric_limits<double>::infinity();
    double max_plane_residual = 0;
    double min_C2 = std::numeric_limits<double>::infinity();
    double max_C2 = 0;

    bool cones_pass() const { return min_margin_u > 0 && min_margin_s > 0; }
    bool volume_pass() const { return min_log_margin_expanding > 0 && min_log_margin_contracting > 0; }
    bool pass() const { return cones_pass() && volume_pass(); }

    nlohmann::json to_json() const
    {
        return {{"samples", samples},
                {"Ku", Ku},
                {"Ks", Ks},
                {"max_image_slope_u", max_image_slope_u},
                {"max_image_slope_s", max_image_slope_s},
                {"min_margin_u", min_margin_u},
                {"min_margin_s", min_margin_s},
                {"min_log_margin_expanding", min_log_margin_expanding},
                {"min_log_margin_contracting", min_log_margin_contracting},
                {"max_plane_residual", max_plane_residual},
                {"min_C2", min_C2},
                {"max_C2", max_C2},
                {"cones_pass", cones_pass()},
                {"volume_pass", volume_pass()}};
    }
};

namespace detail {

inline Vec3 unit(const Vec3& v) { return (1 / norm(v)) * v; }

struct PlaneFrame {
    Vec3 along;  // unit vector in the plane orthogonal to F
    Vec3 normal; // unit normal of the plane
};

inline PlaneFrame plane_frame(const Plane& P, const Vec3& F)
{
    const Vec3 n = cross(P[0], P[1]);
    const double nn = norm(n);
    if (!(nn > 0)) throw Error(ErrorKind::input_geometry, "degenerate plane basis");
    const Vec3 normal = (1 / nn) * n;
    return {unit(cross(F, normal)), normal};
}

inline double area_ratio(const Mat3& J, const Plane& P)
{
    return norm(cross(J * P[0], J * P[1])) / norm(cross(P[0], P[1]));
}

} // namespace detail

/// Cone invariance and volume domination for a cocycle with invariant plane
/// fields E (contracting side) and G (expanding side), F = E ∩ G. The
/// unstable cone sits in G around the direction orthogonal to F with slope
/// Ku; the stable cone sits in E with slope Ks. Map::step(x) supplies the
/// derivative in the coordinates of E and G.
template <class Map, class EField, class GField>
SplittingReport generic_dominated_splitting_check(const Map& map, EField E, GField G, double Ku, double Ks,
                                                  const std::vector<TorusPoint>& pts)
{
    SplittingReport rep;
    rep.Ku = Ku;
    rep.Ks = Ks;
    auto frames = [&](const TorusPoint& x) {
        const Plane e = E(x), g = G(x);
        const Vec3 ne = cross(e[0], e[1]), ng = cross(g[0], g[1]);
        const Vec3 f = cross(ne, ng);
        if (!(norm(f) > 1e-9 * norm(ne) * norm(ng)))
            throw Error(ErrorKind::input_geometry, "planes E and G are not transverse");
        const Vec3 F = detail::unit(f);
        return std::tuple{e, g, F, detail::plane_frame(e, F), detail::plane_frame(g, F)};
    };
    for (const TorusPoint& x : pts) {
        const auto st = map.step(x);
        const Mat3& J = st.jacobian;
        const auto [E0, G0, F0, e0, g0] = frames(x);
        const auto [E1, G1, F1, e1, g1] = frames(st.image);
        ++rep.samples;

        // forward image of the unstable cone boundary
        double worst_u = 0;
        for (double s : {Ku, -Ku}) {
            const Vec3 w = J * (g0.along + s * F0);
            const double alpha = dot(w, g1.along), beta = dot(w, F1);
            worst_u = std::max(worst_u, std::fabs(beta / alpha));
            rep.max_plane_residual = std::max(rep.max_plane_residual, std::fabs(dot(w, g1.normal)) / norm(w));
        }
        // backward image of the stable cone boundary
        const Mat3 Ji = inverse(J);
        double worst_s = 0;
        for (double s : {Ks, -Ks}) {
            const Vec3 w = Ji * (e1.along + s * F1);
            const double alpha = dot(w, e0.along), beta = dot(w, F0);
            worst_s = std::max(worst_s, std::fabs(beta / alpha));
            rep.max_plane_residual = std::max(rep.max_plane_residual, std::fabs(dot(w, e0.normal)) / norm(w));
        }
        rep.max_image_slope_u = std::max(rep.max_image_slope_u, worst_u);
        rep.max_image_slope_s = std::max(rep.max_image_slope_s, worst_s);
        rep.min_margin_u = std::min(rep.min_margin_u, Ku - worst_u);
        rep.min_margin_s = std::min(rep.min_margin_s, Ks - worst_s);

        const double log_F = std::log(norm(J * F0));
        rep.min_log_margin_expanding = std::min(rep.min_log_margin_expanding, std::log(detail::area_ratio(J, G0)) - log_F);
        rep.min_log_margin_contracting =
            std::min(rep.min_log_margin_contracting, log_F - std::log(detail::area_ratio(J, E0)));
        rep.min_C2 = std::min(rep.min_C2, st.C2);
        rep.max_C2 = std::max(rep.max_C2, st.C2);
    }
    return rep;
}

inline Plane plane_yz() { return {Vec3{0, 1, 0}, Vec3{0, 0, 1}}; }
inline Plane plane_xy() { return {Vec3{1, 0, 0}, Vec3{0, 1, 0}}; }

/// The splitting check for a map whose cocycle is written in the eigenbasis:
/// E = YZ-plane, G = XY-plane, F = y-axis.
template <class Map>
SplittingReport check_splitting(const Map& map, double Ku, double Ks, const std::vector<TorusPoint>& pts)
{
    auto E = [](const TorusPoint&) { return plane_yz(); };
    auto G = [](const TorusPoint&) { return plane_xy(); };
    return generic_dominated_splitting_check(map, E, G, Ku, Ks, pts);
}

/// Cone invariance, C2 bounds and volume domination for f_k on a stratified sample.
inline SplittingReport check_cone_invariance(const damap::DAMap& m, const ConeParams& cones, long n, std::uint64_t seed)
{
    return check_splitting(m, cones.Ku, cones.Ks, sample_points(m, n, seed));
}

struct VolumeReport {
    long samples = 0;
    double min_log_margin_expanding = std::numeric_limits<double>::infinity();
    double min_log_margin_contracting = std::numeric_limits<double>::infinity();
    double expected_expanding = 0;   // log lambda_u^2
    double expected_contracting = 0; // -log lambda_s^2
    bool pass = false;

    nlohmann::json to_json() const
    {
        return {{"samples", samples},
                {"min_log_margin_expanding", min_log_margin_expanding},
                {"min_log_margin_contracting", min_log_margin_contracting},
                {"expected_expanding", expected_expanding},
                {"expected_contracting", expected_contracting},
                {"pass", pass}};
    }
};

/// |det Tf|_YZ| < ||Tf|_F|| < |det Tf|_XY| at every sample, in log scale.
inline VolumeReport check_volume_domination(const damap::DAMap& m, long n, std::uint64_t seed)
{
    VolumeReport rep;
    rep.expected_expanding = std::log(m.lu2());
    rep.expected_contracting = -std::log(m.ls2());
    for (const TorusPoint& x : sample_points(m, n, seed)) {
        const Mat3 J = m.step(x).jacobian;
        const double normF = std::fabs(J[1][1]);
        const double det_xy = std::fabs(J[0][0] * J[1][1] - J[0][1] * J[1][0]);
        const double det_yz = std::fabs(J[1][1] * J[2][2] - J[1][2] * J[2][1]);
        rep.min_log_margin_expanding = std::min(rep.min_log_margin_expanding, std::log(det_xy) - std::log(normF));
        rep.min_log_margin_contracting = std::min(rep.min_log_margin_contracting, std::log(normF) - std::log(det_yz));
        ++rep.samples;
    }
    rep.pass = rep.min_log_margin_expanding > 0 && rep.min_log_margin_contracting > 0
            && rep.min_log_margin_expanding >= rep.expected_expanding - 1e-9;
    return rep;
}

// --- orbit statistics ---------------------------------------------------------

/// log of the operator norm of the inverse of the XY-block of J, in the norm
/// max(w|x|, |y|).
inline double inverse_cu_lognorm(const Mat3& J, double w)
{
    // block in the scaled coordinates (w x, y)
    const double a = J[0][0], b = J[0][1] * w, c = J[1][0] / w, d = J[1][1];
    const double det = a * d - b * c;
    const double r0 = (std::fabs(d) + std::fabs(b)) / std::fabs(det);
    const double r1 = (std::fabs(c) + std::fabs(a)) / std::fabs(det);
    return std::log(std::max(r0, r1));
}

struct OrbitOptions {
    long n = 1000000;
    long burn_in = 1000;
    double cu_weight = 1;
    bool keep_lognorms = false;
    int renormalize_every = 32;
};

struct OrbitStats {
    long n = 0;
    TorusPoint start;
    double sum_log_det_cu = 0;
    double sum_log_norm_F = 0;
    double sum_log_inv_cu = 0;
    double sum_log_det = 0;
    double sum_log_C2 = 0;
    double lam_u = 0;
    double lam_c = 0;
    double lam_s = 0;
    std::vector<double> lognorms; // lognorms[j-1] = log ||Tf^{-1}|E^cu(f^j x)||
    std::vector<TorusPoint> orbit; // kept together with the lognorms

    double avg_log_det_cu() const { return sum_log_det_cu / static_cast<double>(n); }
    double avg_log_norm_F() const { return sum_log_norm_F / static_cast<double>(n); }
    double avg_log_det() const { return sum_log_det / static_cast<double>(n); }
    double avg_log_C2() const { return sum_log_C2 / static_cast<double>(n); }
    double exponent_sum_error() const { return std::fabs(lam_u + lam_c + lam_s - avg_log_C2()); }
};

/// One pass over an orbit: Birkhoff sums of log det_cu, log ||Tf|F||,
/// log ||Tf^{-1}|E^cu|| and log det, plus the top exponent from a vector
/// started at e^u and renormalized every few steps.
template <class Map>
OrbitStats run_orbit(const Map& map, TorusPoint x, const OrbitOptions& opt)
{
    if (opt.n < 1) throw Error(ErrorKind::parameter_out_of_range, "orbit length must be positive");
    if (opt.renormalize_every < 1) throw Error(ErrorKind::parameter_out_of_range, "renormalization period must be positive");
    Vec3 v{1, 0, 0};
    auto renormalize = [&](long double& acc) {
        const double nv = norm(v);
        if (!(nv > 0) || !std::isfinite(nv)) throw Error(ErrorKind::precision, "growth vector under- or overflowed");
        acc += std::log(static_cast<long double>(nv));
        v = (1 / nv) * v;
    };
    long double scratch = 0;
    for (long i = 0; i < opt.burn_in; ++i) {
        const auto st = map.step(x);
        v = st.jacobian * v;
        if ((i + 1) % opt.renormalize_every == 0) renormalize(scratch);
        x = st.image;
    }
    v = (1 / norm(v)) * v;

    OrbitStats s;
    s.n = opt.n;
    s.start = x;
    if (opt.keep_lognorms) {
        s.lognorms.reserve(static_cast<std::size_t>(opt.n));
        s.orbit.reserve(static_cast<std::size_t>(opt.n) + 1);
        s.orbit.push_back(x);
    }
    long double log_growth = 0, det_cu = 0, nF = 0, inv = 0, ldet = 0, lc2 = 0;
    for (long i = 0; i < opt.n; ++i) {
        const auto st = map.step(x);
        const Mat3& J = st.jacobian;
        det_cu += std::log(std::fabs(J[0][0] * J[1][1] - J[0][1] * J[1][0]));
        nF += std::log(std::sqrt(J[0][1] * J[0][1] + J[1][1] * J[1][1] + J[2][1] * J[2][1]));
        const double ln = inverse_cu_lognorm(J, opt.cu_weight);
        inv += ln;
        ldet += std::log(std::fabs(det(J)));
        lc2 += std::log(st.C2);
        v = J * v;
        if ((i + 1) % opt.renormalize_every == 0) renormalize(log_growth);
        x = st.image;
        if (opt.keep_lognorms) {
            s.lognorms.push_back(ln);
            s.orbit.push_back(x);
        }
    }
    renormalize(log_growth);
    const double n = static_cast<double>(opt.n);
    s.sum_log_det_cu = static_cast<double>(det_cu);
    s.sum_log_norm_F = static_cast<double>(nF);
    s.sum_log_inv_cu = static_cast<double>(inv);
    s.sum_log_det = static_cast<double>(ldet);
    s.sum_log_C2 = static_cast<double>(lc2);
    s.lam_u = static_cast<double>(log_growth) / n;
    s.lam_c = s.sum_log_norm_F / n;
    s.lam_s = s.sum_log_det / n - s.lam_u - s.lam_c;
    return s;
}

inline TorusPoint orbit_start(std::uint64_t seed, long orbit)
{
    Rng rng(seed, static_cast<std::uint64_t>(orbit) + 1);
    return {{rng.uniform(), rng.uniform(), rng.uniform()}};
}

struct LyapunovReport {
    double lam_u = 0;
    double lam_c = 0;
    double lam_s = 0;
    double exponent_sum_error = 0;
};

template <class Map>
LyapunovReport lyapunov_exponents(const Map& map, TorusPoint x0, long n, long burn_in = 1000)
{
    if (n < 1000) throw Error(ErrorKind::parameter_out_of_range, "need at least 1000 iterates");
    OrbitOptions opt;
    opt.n = n;
    opt.burn_in = burn_in;
    const OrbitStats s = run_orbit(map, x0, opt);
    return {s.lam_u, s.lam_c, s.lam_s, s.exponent_sum_error()};
}

struct OrbitSummary {
    long index = 0;
    double cu_margin = 0;     // avg log det_cu - log lambda_u^2 (the unperturbed rate)
    double center_avg = 0;    // avg log ||Tf|F||
    double avg_log_inv_cu = 0;
    double lam_u = 0;
    double lam_c = 0;
    double lam_s = 0;
    double exponent_sum_error = 0;

    nlohmann::json to_json() const
    {
        return {{"orbit", index},         {"cu_margin", cu_margin}, {"center_avg", center_avg},
                {"avg_log_inv_cu", avg_log_inv_cu}, {"lam_u", lam_u}, {"lam_c", lam_c},
                {"lam_s", lam_s},          {"exponent_sum_error", exponent_sum_error}};
    }
};

struct BirkhoffReport {
    int orbits = 0;
    long n = 0;
    long burn_in = 0;
    std::uint64_t seed = 0;
    double min_cu_margin = 0;
    double min_center_avg = 0;
    double a_emp = 0;
    double max_exponent_sum_error = 0;
    std::vector<OrbitSummary> per_orbit;
    bool pass = false;

    nlohmann::json to_json() const
    {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& o : per_orbit) rows.push_back(o.to_json());
        return {{"orbits", orbits},
                {"n", n},
                {"burn_in", burn_in},
                {"seed", seed},
                {"min_cu_margin", min_cu_margin},
                {"min_center_avg", min_center_avg},
                {"a_emp", a_emp},
                {"a_emp_is_proxy", true},
                {"max_exponent_sum_error", max_exponent_sum_error},
                {"per_orbit", rows},
                {"pass", pass}};
    }
};

inline OrbitSummary summarize(long index, const OrbitStats& s, double log_rate)
{
    OrbitSummary o;
    o.index = index;
    o.cu_margin = s.avg_log_det_cu() - log_rate;
    o.center_avg = s.avg_log_norm_F();
    o.avg_log_inv_cu = s.sum_log_inv_cu / static_cast<double>(s.n);
    o.lam_u = s.lam_u;
    o.lam_c = s.lam_c;
    o.lam_s = s.lam_s;
    o.exponent_sum_error = s.exponent_sum_error();
    return o;
}

/// Birkhoff averages over an ensemble of seeded orbits. The comparison rate is
/// map.unstable_log_rate(), i.e. log lambda_u^2 for f_k (isotopic to A_k^2).
/// Results are reduced in orbit order, so they do not depend on the worker count.
template <class Map>
BirkhoffReport birkhoff_check(const Map& map, int orbits, long n, long burn_in, std::uint64_t seed,
                              double cu_weight = 1, int workers = worker_count())
{
    if (orbits < 1) throw Error(ErrorKind::parameter_out_of_range, "need at least one orbit");
    OrbitOptions opt;
    opt.n = n;
    opt.burn_in = burn_in;
    opt.cu_weight = cu_weight;
    const double rate = map.unstable_log_rate();
    BirkhoffReport rep;
    rep.orbits = orbits;
    rep.n = n;
    rep.burn_in = burn_in;
    rep.seed = seed;
    rep.per_orbit = parallel_map(
        orbits, [&](long i) { return summarize(i, run_orbit(map, orbit_start(seed, i), opt), rate); }, workers);
    rep.min_cu_margin = std::numeric_limits<double>::infinity();
    rep.min_center_avg = std::numeric_limits<double>::infinity();
    for (const auto& o : rep.per_orbit) {
        rep.min_cu_margin = std::min(rep.min_cu_margin, o.cu_margin);
        rep.min_center_avg = std::min(rep.min_center_avg, o.center_avg);
        rep.max_exponent_sum_error = std::max(rep.max_exponent_sum_error, o.exponent_sum_error);
    }
    rep.a_emp = 0.5 * std::min(rep.min_cu_margin, rep.min_center_avg);
    rep.pass = rep.min_cu_margin > 0 && rep.min_center_avg > 0;
    return rep;
}

// --- hyperbolic times -----------------------------------------------------------

/// Indices n (1-based) such that every suffix average of lognorms[1..n]
/// ending at n is <= -b_rate. With T_m = S_m + m b_rate this is
/// T_n <= min_{m<n} T_m, so one pass with a running minimum suffices.
inline std::vector<long> hyperbolic_times(const std::vector<double>& lognorms, double b_rate)
{
    if (!(b_rate > 0)) throw Error(ErrorKind::parameter_out_of_range, "b_rate must be positive");
    std::vector<long> out;
    double T = 0, min_prefix = 0; // T_0 = 0
    for (std::size_t i = 0; i < lognorms.size(); ++i) {
        T += lognorms[i] + b_rate;
        if (T <= min_prefix) out.push_back(static_cast<long>(i) + 1);
        min_prefix = std::min(min_prefix, T);
    }
    return out;
}

inline double pliss_density(const std::vector<double>& lognorms, double b_rate)
{
    if (lognorms.empty()) return 0;
    return static_cast<double>(hyperbolic_times(lognorms, b_rate).size()) / static_cast<double>(lognorms.size());
}

/// Lower bound on the density of b_rate-hyperbolic times from the Pliss
/// lemma: (c2 - b_rate) / (A - b_rate) with c2 = -mean and A = max(-lognorms).
/// Returns 0 when the mean is not below -b_rate.
inline double pliss_lower_bound(const std::vector<double>& lognorms, double b_rate)
{
    if (lognorms.empty()) return 0;
    long double sum = 0;
    double A = -std::numeric_limits<double>::infinity();
    for (double l : lognorms) {
        sum += l;
        A = std::max(A, -l);
    }
    const double c2 = -static_cast<double>(sum / static_cast<long double>(lognorms.size()));
    if (!(c2 > b_rate)) return 0;
    return (c2 - b_rate) / (A - b_rate);
}

// --- backward contraction at hyperbolic times ---------------------------------

struct ContractionReport {
    long n_ht = 0;
    double rate = 0;
    double delta1 = 0;
    int halvings = 0;
    long samples = 0;
    double min_log_margin = std::numeric_limits<double>::infinity();
    bool pass = false;

    nlohmann::json to_json() const
    {
        return {{"n_ht", n_ht},       {"rate", rate},       {"delta1", delta1}, {"halvings", halvings},
                {"samples", samples}, {"min_log_margin", min_log_margin}, {"pass", pass}};
    }
};

/// For y in the cu-plane disk of radius delta1 around f^n(x), pulls the
/// displacement back along the stored orbit and checks
/// |f^{n-k}y - f^{n-k}x| <= e^{-k rate} |f^n y - f^n x| for k = 1..n, in the
/// same norm as the hyperbolic-time lognorms. `orbit` holds x_0 .. x_n.
template <class Map>
ContractionReport backward_contraction_check(const Map& map, const std::vector<TorusPoint>& orbit, long n_ht,
                                             double rate, double delta1, double cu_weight, int samples,
                                             std::uint64_t seed)
{
    if (n_ht < 1 || n_ht >= static_cast<long>(orbit.size()))
        throw Error(ErrorKind::parameter_out_of_range, "hyperbolic time outside the stored orbit");
    ContractionReport rep;
    rep.n_ht = n_ht;
    rep.rate = rate;
    rep.delta1 = delta1;
    auto cu_norm = [&](const Vec3& w) { return std::max(cu_weight * std::fabs(w[0]), std::fabs(w[1])); };
    Rng rng(seed, static_cast<std::uint64_t>(n_ht));
    for (int s = 0; s < samples; ++s) {
        const double t = rng.uniform(0, 6.283185307179586);
        Vec3 w{std::cos(t) / cu_weight, std::sin(t), 0};
        w = (delta1 * (0.05 + 0.95 * rng.uniform()) / cu_norm(w)) * w;
        const double log_d0 = std::log(cu_norm(w));
        for (long k = 1; k <= n_ht; ++k) {
            w = map.pullback_displacement(orbit[static_cast<std::size_t>(n_ht - k + 1)], w);
            if (std::fabs(w[2]) > 1e-9 * cu_norm(w))
                throw Error(ErrorKind::geometry_violation, "pulled-back disk left the cu-plane");
            const double margin = -static_cast<double>(k) * rate - (std::log(cu_norm(w)) - log_d0);
            rep.min_log_margin = std::min(rep.min_log_margin, margin);
        }
        ++rep.samples;
    }
    rep.pass = rep.min_log_margin >= -1e-9;
    return rep;
}

/// Halves delta1 from `start` until the contraction check passes.
template <class Map>
ContractionReport find_delta1(const Map& map, const std::vector<TorusPoint>& orbit, long n_ht, double rate,
                              double start, double cu_weight, int samples, std::uint64_t seed, int max_halvings = 40)
{
    double delta = start;
    for (int h = 0;; ++h) {
        ContractionReport r = backward_contraction_check(map, orbit, n_ht, rate, delta, cu_weight, samples, seed);
        r.halvings = h;
        if (r.pass || h == max_halvings) return r;
        delta /= 2;
    }
}

} // namespace da3::hyperbolicity

#endif // DA3_HYPERBOLICITY_HPP
