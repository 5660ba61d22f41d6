#ifndef DA3_PERTURBATION_HPP
#define DA3_PERTURBATION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "common.hpp"

namespace da3::perturbation {

struct TubeParams {
    double a = 0;
    double b = 0;
    double c = 0;
    double d = 0;
    double eps = 0;

    void validate() const
    {
        auto fail = [](const std::string& m) { throw Error(ErrorKind::parameter_out_of_range, m); };
        if (!(a > 1)) fail("tube half-length a must exceed 1");
        if (!(b > 0 && b < a)) fail("b must lie in (0, a)");
        if (!(c > -1 && c < 0)) fail("c must lie in (-1, 0)");
        if (!(d > 0)) fail("radius d must be positive");
        if (!(eps > 0 && eps < (a - b) / 2)) fail("eps must lie in (0, (a-b)/2)");
    }

    double phi_slope_cap() const { return 2 * (b / (a - b)) * std::fabs(c); }
    double c2_cap() const { return 1 + phi_slope_cap(); }
    double c13_cap() const { return 8 * (b / d) * std::fabs(c); }
};

// --- bump -----------------------------------------------------------------

struct BumpValue {
    double value;
    double derivative;
    double one_minus; // 1 - value without cancellation
};

/// rho_d(r) = exp(1 - 1/(1 - (r/d)^2)) on [0, d], zero beyond.
class BumpProfile {
public:
    explicit BumpProfile(double d, int n_check = 100000) : d_(d)
    {
        if (!(d > 0)) throw Error(ErrorKind::parameter_out_of_range, "bump radius must be positive");
        verify(n_check);
    }

    double radius() const { return d_; }

    BumpValue eval(double r) const
    {
        if (!(r >= 0 && r <= d_)) throw Error(ErrorKind::domain, "bump evaluated outside [0, d]");
        return eval_unchecked(r);
    }

    BumpValue eval_unchecked(double r) const
    {
        const double x = r / d_;
        if (x >= 1) return {0.0, 0.0, 1.0};
        const double s = 1 - x * x;
        const double q = x * x / s;
        const double v = std::exp(-q);
        return {v, v * (-2 * x / (s * s)) / d_, -std::expm1(-q)};
    }

private:
    void verify(int n) const
    {
        auto fail = [](const std::string& m) { throw Error(ErrorKind::construction, "bump: " + m); };
        const BumpValue at0 = eval_unchecked(0), atd = eval_unchecked(d_);
        if (at0.value != 1 || at0.derivative != 0) fail("rho(0) != 1 or rho'(0) != 0");
        if (atd.value != 0 || atd.derivative != 0) fail("rho(d) != 0 or rho'(d) != 0");
        double prev = 1;
        for (int i = 1; i <= n; ++i) {
            const BumpValue v = eval_unchecked(d_ * i / n);
            if (v.value > prev) fail("not nonincreasing");
            if (!(v.derivative > -4 / d_)) fail("derivative below -4/d");
            if (v.derivative > 0) fail("derivative positive");
            if (i < n && v.value > 0 && v.derivative == 0) fail("derivative vanishes inside (0, d)");
            prev = v.value;
        }
    }

    double d_;
};

// --- mollifier ------------------------------------------------------------

/// Distribution function of the normalized kernel exp(-1/(1-u^2)) on (-1,1).
/// Tails are integrated directly so values near 0 keep full relative accuracy.
class MollifierCdf {
public:
    MollifierCdf() { total_ = 2 * tail(1.0); }

    double operator()(double t) const
    {
        if (t <= -1) return 0;
        if (t >= 1) return 1;
        if (t <= 0) return tail(1 + t) / total_;
        return 1 - tail(1 - t) / total_;
    }

private:
    static double tail(double s)
    {
        if (s <= 0) return 0;
        auto f = [](double v) {
            const double w = v * (2 - v);
            return w <= 0 ? 0.0 : std::exp(-1 / w);
        };
        return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, s, 12, 1e-13);
    }

    double total_ = 0;
};

// --- center profile -------------------------------------------------------

struct PhiSample {
    double value;
    double derivative;
    double excess; // derivative - c, always >= 0
};

/// Odd C^1-interpolated profile phi: equal to c*y on [-b,b], vanishing with its
/// derivative at +-a. Built from the mollified piecewise-linear function on a
/// uniform grid over [b, a].
class CenterProfile {
public:
    static constexpr int default_intervals = 4096;

    CenterProfile(double a, double b, double c, double eps, int intervals = default_intervals)
        : a_(a), b_(b), c_(c), eps_(eps), n_(intervals)
    {
        TubeParams{a, b, c, 1.0, eps}.validate();
        if (n_ < 4096) throw Error(ErrorKind::parameter_out_of_range, "profile grid needs at least 4096 intervals");
        h_ = (a_ - b_) / n_;
        build();
        finish();
        verify(100000);
    }

    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }
    double eps() const { return eps_; }
    int intervals() const { return n_; }
    double middle_slope() const { return slope_; }

    PhiSample eval(double y) const
    {
        if (!(std::fabs(y) <= a_)) throw Error(ErrorKind::domain, "phi evaluated outside [-a, a]");
        return eval_unchecked(y);
    }

    PhiSample eval_unchecked(double y) const
    {
        const double u = std::fabs(y);
        const double sgn = y < 0 ? -1.0 : 1.0;
        if (u <= b_) return {c_ * y, c_, 0.0};
        double pos = (u - b_) / h_;
        int i = static_cast<int>(pos);
        if (i >= n_) i = n_ - 1;
        const double t = std::min(1.0, pos - i);
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        const double value = h00 * phi_[i] + h10 * h_ * dphi_[i] + h01 * phi_[i + 1] + h11 * h_ * dphi_[i + 1];
        const double g = std::max(0.0, h00 * g_[i] + h10 * h_ * gs_[i] + h01 * g_[i + 1] + h11 * h_ * gs_[i + 1]);
        return {sgn * value, c_ + g, g};
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["schema"] = "da3/profile/v1";
        j["params"] = {{"a", a_}, {"b", b_}, {"c", c_}, {"eps", eps_}};
        j["grid"] = {{"intervals", n_}, {"phi", phi_}, {"dphi", dphi_}, {"excess", g_}};
        return j;
    }

    static CenterProfile from_json(const nlohmann::json& j)
    {
        if (j.at("schema").get<std::string>() != "da3/profile/v1")
            throw Error(ErrorKind::config, "unknown profile schema");
        CenterProfile p;
        const auto& pr = j.at("params");
        p.a_ = pr.at("a").get<double>();
        p.b_ = pr.at("b").get<double>();
        p.c_ = pr.at("c").get<double>();
        p.eps_ = pr.at("eps").get<double>();
        TubeParams{p.a_, p.b_, p.c_, 1.0, p.eps_}.validate();
        const auto& g = j.at("grid");
        p.n_ = g.at("intervals").get<int>();
        p.h_ = (p.a_ - p.b_) / p.n_;
        p.phi_ = g.at("phi").get<std::vector<double>>();
        p.dphi_ = g.at("dphi").get<std::vector<double>>();
        p.g_ = g.at("excess").get<std::vector<double>>();
        const std::size_t m = static_cast<std::size_t>(p.n_) + 1;
        if (p.phi_.size() != m || p.dphi_.size() != m || p.g_.size() != m)
            throw Error(ErrorKind::config, "profile grid arrays have the wrong length");
        p.slope_ = -(p.b_ + p.eps_) * p.c_ / (p.a_ - p.b_ - 2 * p.eps_);
        p.finish();
        return p;
    }

private:
    CenterProfile() = default;

    double node(int i) const { return i == n_ ? a_ : b_ + i * h_; }

    // Exact phi' - c of the mollified piecewise-linear function.
    double excess_exact(double y) const
    {
        if (y <= b_) return 0;
        if (y <= b_ + 2 * eps_) return (slope_ - c_) * cdf_((y - b_ - eps_) / eps_);
        if (y < a_ - 2 * eps_) return slope_ - c_;
        return slope_ * cdf_((a_ - eps_ - y) / eps_) - c_;
    }

    // Exact phi', written so the right tail has no cancellation.
    double dphi_exact(double y) const
    {
        if (y >= a_ - 2 * eps_) return slope_ * cdf_((a_ - eps_ - y) / eps_);
        return c_ + excess_exact(y);
    }

    void build()
    {
        slope_ = -(b_ + eps_) * c_ / (a_ - b_ - 2 * eps_);
        const int m = n_ + 1;
        phi_.assign(m, 0.0);
        dphi_.assign(m, 0.0);
        g_.assign(m, 0.0);
        for (int i = 0; i < m; ++i) {
            const double y = node(i);
            g_[i] = excess_exact(y);
            dphi_[i] = dphi_exact(y);
        }
        g_[0] = 0;
        dphi_[0] = c_;
        dphi_[n_] = 0;
        g_[n_] = -c_;

        using gauss = boost::math::quadrature::gauss<double, 10>;
        auto gfun = [this](double t) { return excess_exact(t); };
        auto dfun = [this](double t) { return dphi_exact(t); };
        const double mid = 0.5 * (a_ + b_);

        // Left part: phi = c*y + integral of the excess from b.
        double acc = 0;
        phi_[0] = c_ * b_;
        int split = 0;
        for (int i = 1; i <= n_ && node(i) <= mid; ++i) {
            acc += gauss::integrate(gfun, node(i - 1), node(i));
            phi_[i] = c_ * node(i) + acc;
            split = i;
        }
        // Right part: phi = -integral of phi' up to a, so phi(a) = 0 exactly.
        acc = 0;
        phi_[n_] = 0;
        for (int i = n_ - 1; i > split; --i) {
            acc += gauss::integrate(dfun, node(i), node(i + 1));
            phi_[i] = -acc;
        }
    }

    // Monotone (Fritsch-Carlson) slopes for the excess; zero at both ends,
    // where every derivative of the exact excess vanishes.
    void finish()
    {
        const int m = n_ + 1;
        gs_.assign(m, 0.0);
        std::vector<double> delta(n_);
        for (int i = 0; i < n_; ++i) delta[i] = (g_[i + 1] - g_[i]) / h_;
        for (int i = 1; i < n_; ++i) {
            const double d0 = delta[i - 1], d1 = delta[i];
            if (d0 * d1 <= 0)
                gs_[i] = 0;
            else
                gs_[i] = 2 * d0 * d1 / (d0 + d1);
        }
    }

    void verify(int n) const
    {
        auto fail = [](const std::string& m) { throw Error(ErrorKind::construction, "phi: " + m); };
        const double cap = TubeParams{a_, b_, c_, 1.0, eps_}.phi_slope_cap();
        const PhiSample at_a = eval_unchecked(a_);
        if (at_a.value != 0 || at_a.derivative != 0) fail("phi(a) or phi'(a) nonzero");
        for (int i = 0; i <= n; ++i) {
            const double y = a_ * i / n;
            const PhiSample s = eval_unchecked(y);
            if (s.derivative < c_) fail("phi' below c");
            if (!(s.derivative < cap)) fail("phi' reaches the slope cap");
            if (y > b_ && !(s.excess > 0)) fail("phi' equals c outside [-b, b]");
            if (!(std::fabs(s.value) < 2 * b_ * std::fabs(c_))) fail("|phi| reaches 2b|c|");
        }
    }

    double a_ = 0, b_ = 0, c_ = 0, eps_ = 0, h_ = 0, slope_ = 0;
    int n_ = 0;
    MollifierCdf cdf_;
    std::vector<double> phi_, dphi_, g_, gs_;
};

// --- cylinder map -----------------------------------------------------------

struct PsiJacobian {
    double C1;
    double C2;
    double C3;
    double excess; // C2 - (1 + c), computed without cancellation
};

struct PsiInverse {
    Vec3 point;
    int iterations;
};

/// Psi(x,y,z) = (x, y + rho_d(r) phi(y), z) on the cylinder |y| <= a, x^2+z^2 <= d^2.
class CylinderMap {
public:
    explicit CylinderMap(const TubeParams& p, int intervals = CenterProfile::default_intervals)
        : params_(p), bump_(p.d), center_(p.a, p.b, p.c, p.eps, intervals)
    {
        p.validate();
    }

    CylinderMap(const TubeParams& p, CenterProfile center) : params_(p), bump_(p.d), center_(std::move(center))
    {
        p.validate();
    }

    const TubeParams& params() const { return params_; }
    const BumpProfile& bump() const { return bump_; }
    const CenterProfile& center() const { return center_; }

    bool contains(const Vec3& p) const
    {
        return std::fabs(p[1]) <= params_.a && p[0] * p[0] + p[2] * p[2] <= params_.d * params_.d;
    }

    double radius_of(const Vec3& p) const { return std::min(params_.d, std::hypot(p[0], p[2])); }

    /// Displacement along y; the caller guarantees p lies in the cylinder.
    double displacement(const Vec3& p) const
    {
        const BumpValue r = bump_.eval_unchecked(radius_of(p));
        if (r.value == 0) return 0;
        return r.value * center_.eval_unchecked(p[1]).value;
    }

    Vec3 eval_psi(const Vec3& p) const
    {
        require_inside(p);
        return {p[0], p[1] + displacement(p), p[2]};
    }

    PsiJacobian jacobian_psi(const Vec3& p) const
    {
        require_inside(p);
        return jacobian_unchecked(p);
    }

    PsiJacobian jacobian_unchecked(const Vec3& p) const
    {
        const double r = radius_of(p);
        const BumpValue rb = bump_.eval_unchecked(r);
        if (rb.value == 0 && rb.derivative == 0) return {0.0, 1.0, 0.0, -params_.c};
        const PhiSample ph = center_.eval_unchecked(p[1]);
        double C1 = 0, C3 = 0;
        if (r > 0) {
            const double k = ph.value * rb.derivative / r;
            C1 = k * p[0];
            C3 = k * p[2];
        }
        const double C2 = 1 + rb.value * ph.derivative;
        const double excess = rb.value * ph.excess + rb.one_minus * std::fabs(params_.c);
        return {C1, C2, C3, excess};
    }

    /// Inverse of the scalar y-map at fixed (x, z): Newton with bisection fallback.
    PsiInverse inverse_psi(const Vec3& p, double tol = 1e-12) const
    {
        require_inside(p);
        const BumpValue rb = bump_.eval_unchecked(radius_of(p));
        if (rb.value == 0) return {p, 0};
        const double target = p[1];
        double lo = -params_.a, hi = params_.a;
        double y = target;
        const double scale = std::max(1.0, std::fabs(target));
        for (int it = 1; it <= 100; ++it) {
            const PhiSample ph = center_.eval_unchecked(y);
            const double F = y + rb.value * ph.value - target;
            const double dF = 1 + rb.value * ph.derivative;
            if (std::fabs(F) <= tol * scale) {
                const double polished = std::clamp(y - F / dF, -params_.a, params_.a);
                return {{p[0], polished, p[2]}, it};
            }
            if (F > 0)
                hi = y;
            else
                lo = y;
            double next = y - F / dF;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            y = next;
            if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * scale) return {{p[0], y, p[2]}, it};
        }
        throw Error(ErrorKind::precision, "inverse of the y-map did not converge");
    }

private:
    void require_inside(const Vec3& p) const
    {
        if (!contains(p)) throw Error(ErrorKind::domain, "point outside the cylinder");
    }

    TubeParams params_;
    BumpProfile bump_;
    CenterProfile center_;
};

// --- numerical check of the tube lemma ---------------------------------------

struct TubeLemmaReport {
    long n_samples = 0;
    double max_boundary_displacement = 0;
    double max_boundary_jacobian_deviation = 0;
    double min_C2 = 0;
    double max_C2 = 0;
    double max_C13 = 0;
    double max_line_change = 0;
    double max_roundtrip_error = 0;
    double max_plane_residual = 0;
    int max_newton_iterations = 0;
    long equality_samples = 0;
    long equality_off_locus = 0;
    long locus_without_equality = 0;
    double margin_lines = 0;
    double margin_boundary = 0;
    double margin_planes = 0;
    double margin_determinant = 0;
    double margin_bounds = 0;
    bool pass = false;

    double min_margin() const
    {
        return std::min({margin_lines, margin_boundary, margin_planes, margin_determinant, margin_bounds});
    }

    nlohmann::json to_json() const
    {
        return {{"n_samples", n_samples},
                {"max_boundary_displacement", max_boundary_displacement},
                {"max_boundary_jacobian_deviation", max_boundary_jacobian_deviation},
                {"min_C2", min_C2},
                {"max_C2", max_C2},
                {"max_C1_C3", max_C13},
                {"max_line_change", max_line_change},
                {"max_roundtrip_error", max_roundtrip_error},
                {"max_plane_residual", max_plane_residual},
                {"max_newton_iterations", max_newton_iterations},
                {"equality_samples", equality_samples},
                {"equality_off_locus", equality_off_locus},
                {"locus_without_equality", locus_without_equality},
                {"margins",
                 {{"lines_preserved", margin_lines},
                  {"boundary_identity", margin_boundary},
                  {"planes_preserved", margin_planes},
                  {"determinant_lower_bound", margin_determinant},
                  {"derivative_bounds", margin_bounds}}},
                {"pass", pass}};
    }
};

/// Samples the cylinder (interior, lateral boundary, end caps, axis, near axis)
/// and measures each bullet of the tube lemma as a signed margin.
inline TubeLemmaReport verify_tube_lemma(const CylinderMap& map, long n_samples, std::uint64_t seed)
{
    if (n_samples < 1) throw Error(ErrorKind::parameter_out_of_range, "n_samples must be >= 1");
    const TubeParams& p = map.params();
    Rng rng(seed, 0x7475);
    TubeLemmaReport rep;
    rep.n_samples = n_samples;
    rep.min_C2 = std::numeric_limits<double>::infinity();
    rep.max_C2 = -std::numeric_limits<double>::infinity();
    const double two_pi = 2 * 3.14159265358979323846;

    for (long i = 0; i < n_samples; ++i) {
        const int kind = static_cast<int>(i % 20);
        double r, y;
        bool boundary = false;
        const double ang = rng.uniform(0, two_pi);
        if (kind < 14) {
            r = p.d * std::sqrt(rng.uniform());
            y = rng.uniform(-p.a, p.a);
        } else if (kind < 16) {
            r = p.d;
            y = rng.uniform(-p.a, p.a);
            boundary = true;
        } else if (kind == 16) {
            r = p.d * std::sqrt(rng.uniform());
            y = rng.uniform() < 0.5 ? -p.a : p.a;
            boundary = true;
        } else if (kind < 19) {
            r = 0;
            y = rng.uniform(-p.a, p.a);
        } else {
            r = p.d * std::pow(10.0, rng.uniform(-12, -3));
            y = rng.uniform(-p.a, p.a);
        }
        Vec3 q{r * std::cos(ang), y, r * std::sin(ang)};
        if (r == p.d) {
            // keep the lateral sample exactly on the boundary circle
            const double rr = std::hypot(q[0], q[2]);
            if (rr > p.d) q = {q[0] * (p.d / rr), y, q[2] * (p.d / rr)};
        }
        if (!map.contains(q)) continue;

        const Vec3 img = map.eval_psi(q);
        const PsiJacobian J = map.jacobian_psi(q);
        rep.max_line_change = std::max({rep.max_line_change, std::fabs(img[0] - q[0]), std::fabs(img[2] - q[2])});
        const double escape = std::max(0.0, std::fabs(img[1]) - p.a);
        const PsiInverse inv = map.inverse_psi(img);
        rep.max_newton_iterations = std::max(rep.max_newton_iterations, inv.iterations);
        rep.max_roundtrip_error = std::max({rep.max_roundtrip_error, std::fabs(inv.point[1] - q[1]), escape});

        if (boundary) {
            rep.max_boundary_displacement = std::max(rep.max_boundary_displacement, std::fabs(img[1] - q[1]));
            rep.max_boundary_jacobian_deviation =
                std::max({rep.max_boundary_jacobian_deviation, std::fabs(J.C1), std::fabs(J.C3), std::fabs(J.C2 - 1)});
        }

        // a plane through the y-axis direction with normal (-sin t, 0, cos t)
        const double t = rng.uniform(0, two_pi);
        const Vec3 n{std::cos(t), 0, std::sin(t)};
        const Vec3 image_n{n[0], J.C1 * n[0] + J.C3 * n[2], n[2]};
        const double residual = std::fabs(-std::sin(t) * image_n[0] + std::cos(t) * image_n[2]);
        rep.max_plane_residual = std::max(rep.max_plane_residual, residual);

        rep.min_C2 = std::min(rep.min_C2, J.C2);
        rep.max_C2 = std::max(rep.max_C2, J.C2);
        rep.max_C13 = std::max({rep.max_C13, std::fabs(J.C1), std::fabs(J.C3)});
        const double rq = std::hypot(q[0], q[2]);
        const bool on_locus_region = rq <= 1e-6 && std::fabs(q[1]) <= p.b;
        if (J.excess == 0) {
            ++rep.equality_samples;
            if (!on_locus_region) ++rep.equality_off_locus;
        } else if (rq == 0 && std::fabs(q[1]) <= p.b) {
            ++rep.locus_without_equality;
        }
        if (J.excess < 0) rep.margin_determinant = std::min(rep.margin_determinant, J.excess);
    }

    rep.margin_lines = -std::max(rep.max_line_change, rep.max_roundtrip_error);
    rep.margin_boundary = -std::max(rep.max_boundary_displacement, rep.max_boundary_jacobian_deviation);
    rep.margin_planes = -rep.max_plane_residual;
    if (rep.equality_off_locus > 0 || rep.locus_without_equality > 0) rep.margin_determinant = -1;
    rep.margin_bounds = std::min(p.c13_cap() - rep.max_C13, p.c2_cap() - rep.max_C2);
    rep.pass = rep.min_margin() >= -1e-9;
    return rep;
}

} // namespace da3::perturbation

#endif // DA3_PERTURBATION_HPP
