#ifndef DA3_DAMAP_HPP
#define DA3_DAMAP_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "anosov.hpp"
#include "common.hpp"
#include "lattice.hpp"
#include "perturbation.hpp"

namespace da3::damap {

using foliation::GapCertificate;
using foliation::IVec3;

struct DAParams {
    int k = 0;
    anosov::Spectrum spectrum;
    anosov::EigenFrame frame;
    double theta = 0;
    double a = 0;
    double b = 0;
    double c = 0;
    double d = 0;
    double eps = 0;
    int grid_intervals = perturbation::CenterProfile::default_intervals;
    std::shared_ptr<const perturbation::CylinderMap> tube;

    perturbation::TubeParams tube_params() const { return {a, b, c, d, eps}; }
    double a_tilde() const { return std::floor(1 / static_cast<double>(spectrum.lambda_c - 1)) / 2; }
};

struct ParamOverrides {
    std::optional<double> theta;
    std::optional<double> eps;
    int grid_intervals = perturbation::CenterProfile::default_intervals;
};

struct ThetaInterval {
    double lo; // open end 1/a
    double hi; // closed end 1/lambda_c
    bool empty() const { return !(lo < hi); }
};

inline double default_a(const anosov::Spectrum& s, const anosov::EigenFrame& f)
{
    const long double at = std::floor(1 / (s.lambda_c - 1)) / 2;
    return static_cast<double>(at * f.norm_v_c);
}

inline ThetaInterval theta_interval(const anosov::Spectrum& s, const anosov::EigenFrame& f)
{
    return {1 / default_a(s, f), static_cast<double>(1 / s.lambda_c)};
}

/// Parameter pack for f_k without the profile; cheap, used for feasibility sweeps.
inline DAParams scalar_params(int k, const ParamOverrides& ov = {})
{
    DAParams p;
    p.k = k;
    p.spectrum = anosov::solve_spectrum(k);
    p.frame = anosov::eigenframe(p.spectrum);
    p.a = default_a(p.spectrum, p.frame);
    p.d = static_cast<double>((p.spectrum.lambda_c - 1) / 4);
    p.c = static_cast<double>(1 / (p.spectrum.lambda_c * p.spectrum.lambda_c) - 1);
    const ThetaInterval ti = theta_interval(p.spectrum, p.frame);
    if (ti.empty())
        throw Error(ErrorKind::infeasible, "k=" + std::to_string(k) + ": largest admissible b = a/lambda_c = "
                                               + fmt_double(p.a * ti.hi) + " is not above 1");
    if (ov.theta) {
        if (!(*ov.theta > ti.lo && *ov.theta <= ti.hi))
            throw Error(ErrorKind::parameter_out_of_range, "theta outside (1/a, 1/lambda_c]");
        p.theta = *ov.theta;
    } else {
        p.theta = 0.5 * (ti.lo + ti.hi);
    }
    p.b = p.theta * p.a;
    p.eps = ov.eps ? *ov.eps : (p.a - p.b) / 10;
    p.grid_intervals = ov.grid_intervals;
    return p;
}

inline DAParams default_params(int k, const ParamOverrides& ov = {})
{
    DAParams p = scalar_params(k, ov);
    p.tube = std::make_shared<const perturbation::CylinderMap>(p.tube_params(), p.grid_intervals);
    return p;
}

struct Feasibility {
    int k = 0;
    bool b_above_one = false;
    bool theta_ok = false;
    bool theta_prime_ok = false;
    bool gap_exceeds_2d = false;
    bool gap_exceeds_cross_section = false;
    bool c2_cap_ok = false;
    double b = 0;
    double Theta = 0;
    double ThetaP = 0;
    double gap = 0;
    double two_d = 0;
    double cross_section_diameter = 0;
    double c2_cap = 0;
    std::string reason;

    bool feasible() const
    {
        return b_above_one && theta_ok && theta_prime_ok && gap_exceeds_2d && gap_exceeds_cross_section && c2_cap_ok;
    }
};

/// Every downstream constraint for the default parameters at k.
inline Feasibility check_feasibility(int k)
{
    Feasibility f;
    f.k = k;
    DAParams p;
    try {
        p = scalar_params(k);
    } catch (const Error& e) {
        f.reason = e.what();
        return f;
    }
    const double lc = p.spectrum.lc(), lu = p.spectrum.lu(), ls = p.spectrum.ls();
    f.b = p.b;
    f.b_above_one = p.b > 1;
    f.Theta = 6 * (lc / lu) * (lc / lu);
    f.ThetaP = ls * ls;
    f.theta_ok = f.Theta < 1;
    f.theta_prime_ok = f.ThetaP < 1;
    const Vec3 h = foliation::center_half_axis(p.spectrum, p.frame);
    f.gap = foliation::lattice_min_gap(h, foliation::required_window(h)).gap;
    f.two_d = 2 * p.d;
    f.cross_section_diameter = 2 * p.d * anosov::cross_section_stretch(p.frame);
    f.gap_exceeds_2d = f.gap > f.two_d;
    f.gap_exceeds_cross_section = f.gap > f.cross_section_diameter;
    f.c2_cap = p.tube_params().c2_cap();
    f.c2_cap_ok = f.c2_cap <= 6;
    if (!f.feasible()) {
        if (!f.b_above_one) f.reason = "b <= 1";
        else if (!f.theta_ok) f.reason = "Theta >= 1";
        else if (!f.theta_prime_ok) f.reason = "Theta' >= 1";
        else if (!f.gap_exceeds_2d || !f.gap_exceeds_cross_section) f.reason = "lattice gap too small";
        else f.reason = "C2 bound above 6";
    }
    return f;
}

inline int smallest_feasible_k(int k_max = 200)
{
    for (int k = 5; k <= k_max; ++k)
        if (check_feasibility(k).feasible()) return k;
    throw Error(ErrorKind::infeasible, "no feasible k up to " + std::to_string(k_max));
}

// --- tube lookup ------------------------------------------------------------

struct TubeHit {
    Vec3 local;   // B-coordinates relative to the translated cylinder axis
    IVec3 translate;
    double radius() const { return std::hypot(local[0], local[2]); }
};

/// Candidate (n_x, n_z) translates per cell of a grid on the x,z face of the
/// unit cube, built by marching the projection of the center axis.
class TubeLocator {
public:
    TubeLocator() = default;

    TubeLocator(const anosov::EigenFrame& frame, double a, double d) : P_inv_(frame.P_inv), a_(a), d_(d)
    {
        const double delta = d * anosov::cross_section_stretch(frame) * (1 + 1e-9) + 1e-12;
        G_ = std::clamp(static_cast<int>(1 / delta), 8, 512);
        const double cell = 1.0 / G_;
        const double ex = frame.e_c[0], ez = frame.e_c[2];
        const double speed = std::max(1e-300, std::hypot(ex, ez));
        const double ds = 0.25 * cell / speed;
        const double R = delta + 0.5 * ds * speed;
        const long steps = static_cast<long>(std::ceil(2 * a / ds));

        std::vector<std::vector<std::pair<int, int>>> cells(static_cast<std::size_t>(G_) * G_);
        for (long i = 0; i <= steps; ++i) {
            const double s = -a + 2 * a * static_cast<double>(i) / static_cast<double>(steps);
            const double qx = s * ex, qz = s * ez;
            const double mx = std::floor(qx), mz = std::floor(qz);
            const double fx = qx - mx, fz = qz - mz;
            const int x0 = static_cast<int>(std::floor((fx - R) * G_)), x1 = static_cast<int>(std::floor((fx + R) * G_));
            const int z0 = static_cast<int>(std::floor((fz - R) * G_)), z1 = static_cast<int>(std::floor((fz + R) * G_));
            for (int ix = x0; ix <= x1; ++ix)
                for (int iz = z0; iz <= z1; ++iz) {
                    const int wx = ((ix % G_) + G_) % G_, wz = ((iz % G_) + G_) % G_;
                    const int ox = (ix - wx) / G_, oz = (iz - wz) / G_;
                    cells[static_cast<std::size_t>(wx) * G_ + wz].push_back(
                        {static_cast<int>(mx) + ox, static_cast<int>(mz) + oz});
                }
        }
        offsets_.assign(cells.size() + 1, 0);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            auto& v = cells[c];
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
            offsets_[c + 1] = offsets_[c] + static_cast<int>(v.size());
            entries_.insert(entries_.end(), v.begin(), v.end());
        }
        q_ = {P_inv_[0][1], P_inv_[1][1], P_inv_[2][1]};
    }

    int grid() const { return G_; }
    std::size_t entry_count() const { return entries_.size(); }

    std::optional<TubeHit> locate(const Vec3& u) const
    {
        const int ix = std::min(G_ - 1, static_cast<int>(u[0] * G_));
        const int iz = std::min(G_ - 1, static_cast<int>(u[2] * G_));
        const std::size_t c = static_cast<std::size_t>(ix) * G_ + iz;
        std::optional<TubeHit> found;
        for (int e = offsets_[c]; e < offsets_[c + 1]; ++e) {
            const auto [mx, mz] = entries_[static_cast<std::size_t>(e)];
            const Vec3 base{u[0] + mx, u[1], u[2] + mz};
            const Vec3 B0 = P_inv_ * base;
            double lo = -1e300, hi = 1e300;
            auto clip = [&](double b0, double q, double half) {
                if (q == 0) {
                    if (std::fabs(b0) > half) hi = lo - 1;
                    return;
                }
                double t0 = (-half - b0) / q, t1 = (half - b0) / q;
                if (t0 > t1) std::swap(t0, t1);
                lo = std::max(lo, t0);
                hi = std::min(hi, t1);
            };
            clip(B0[0], q_[0], d_);
            clip(B0[2], q_[2], d_);
            clip(B0[1], q_[1], a_);
            if (lo > hi) continue;
            const long m0 = static_cast<long>(std::ceil(lo - 1e-9)), m1 = static_cast<long>(std::floor(hi + 1e-9));
            for (long my = m0; my <= m1; ++my) {
                const Vec3 lifted{base[0], u[1] + static_cast<double>(my), base[2]};
                const Vec3 B = P_inv_ * lifted;
                if (std::fabs(B[1]) <= a_ && B[0] * B[0] + B[2] * B[2] <= d_ * d_) {
                    if (found)
                        throw Error(ErrorKind::geometry_violation,
                                    "point lies in two translates of the tube; lattice certificate is wrong");
                    found = TubeHit{B, {mx, my, mz}};
                }
            }
        }
        return found;
    }

private:
    Mat3 P_inv_{};
    Vec3 q_{};
    double a_ = 0, d_ = 0;
    int G_ = 0;
    std::vector<int> offsets_;
    std::vector<std::pair<int, int>> entries_;
};

// --- the map ----------------------------------------------------------------

struct Segment {
    LiftPoint lo;
    LiftPoint hi;
};

/// C1, C2, C3 of the tube map at A p, plus the image and the cocycle matrix.
struct CocycleStep {
    TorusPoint image;
    Mat3 jacobian;
    double C1 = 0, C2 = 1, C3 = 0;
    double excess = 0;
    bool in_support = false;
};

class DAMap {
public:
    explicit DAMap(DAParams p) : p_(std::move(p))
    {
        if (!p_.tube) p_.tube = std::make_shared<const perturbation::CylinderMap>(p_.tube_params(), p_.grid_intervals);
        A_ = anosov::matrix_for_k(p_.k);
        A_inv_ = anosov::inverse_matrix_for_k(p_.k);
        const auto& s = p_.spectrum;
        lu_ = s.lu();
        lc_ = s.lc();
        ls_ = s.ls();
        lu2_ = static_cast<double>(s.lambda_u * s.lambda_u);
        lc2_ = static_cast<double>(s.lambda_c * s.lambda_c);
        ls2_ = static_cast<double>(s.lambda_s * s.lambda_s);
        lclu_ = static_cast<double>(s.lambda_c * s.lambda_u);
        lcls_ = static_cast<double>(s.lambda_c * s.lambda_s);

        const Vec3 h = foliation::center_half_axis(p_.spectrum, p_.frame);
        cert_ = foliation::lattice_min_gap(h, foliation::required_window(h));
        cross_section_ = 2 * p_.d * anosov::cross_section_stretch(p_.frame);
        if (!(cert_.gap > 2 * p_.d) || !(cert_.gap > cross_section_))
            throw Error(ErrorKind::geometry_violation,
                        "lattice gap " + fmt_double(cert_.gap) + " does not separate tube translates");
        locator_ = TubeLocator(p_.frame, p_.a, p_.d);
        window_ = static_cast<int>(std::ceil(p_.a * std::max({std::fabs(p_.frame.e_c[0]), std::fabs(p_.frame.e_c[1]),
                                                                std::fabs(p_.frame.e_c[2])})))
                + 1;
    }

    const DAParams& params() const { return p_; }
    const anosov::EigenFrame& frame() const { return p_.frame; }
    const perturbation::CylinderMap& tube() const { return *p_.tube; }
    const GapCertificate& certificate() const { return cert_; }
    double cross_section_diameter() const { return cross_section_; }
    int translate_window() const { return window_; }
    const TubeLocator& locator() const { return locator_; }

    double unstable_log_rate() const { return std::log(lu2_); }
    double lu2() const { return lu2_; }
    double lc2() const { return lc2_; }
    double ls2() const { return ls2_; }

    Segment segment_I() const { return {{-p_.b * p_.frame.e_c}, {p_.b * p_.frame.e_c}}; }
    Segment segment_J() const { return {{-p_.a * p_.frame.e_c}, {p_.a * p_.frame.e_c}}; }
    /// Half-length of the segment on which det_cu equals lambda_u^2: A^{-1}(I_k).
    double equality_locus_half_length() const { return p_.b / lc_; }

    std::optional<TubeHit> in_tube(const TorusPoint& u) const { return locator_.locate(u.x); }

    TorusPoint apply_A(const TorusPoint& p) const { return {A_.apply_mod1(p.x)}; }
    TorusPoint apply_A_inv(const TorusPoint& p) const { return {A_inv_.apply_mod1(p.x)}; }

    TorusPoint eval_f(const TorusPoint& p) const { return step(p).image; }

    TorusPoint eval_f_inverse(const TorusPoint& p) const
    {
        const TorusPoint w = apply_A_inv(p);
        const double delta = inverse_displacement(w);
        const TorusPoint w2 = delta == 0 ? w : shift_along_center(w, delta);
        return apply_A_inv(w2);
    }

    CocycleStep step(const TorusPoint& p) const
    {
        CocycleStep st;
        const TorusPoint w = apply_A(p);
        TorusPoint w2 = w;
        if (const auto hit = in_tube(w)) {
            const perturbation::PsiJacobian J = p_.tube->jacobian_unchecked(hit->local);
            st.C1 = J.C1;
            st.C2 = J.C2;
            st.C3 = J.C3;
            st.excess = J.excess;
            st.in_support = hit->radius() < p_.d;
            const double delta = p_.tube->displacement(hit->local);
            if (delta != 0) w2 = shift_along_center(w, delta);
        } else {
            st.excess = -p_.c;
        }
        st.image = apply_A(w2);
        st.jacobian = {{{lu2_, 0, 0}, {lclu_ * st.C1, lc2_ * st.C2, lcls_ * st.C3}, {0, 0, ls2_}}};
        return st;
    }

    Mat3 eval_df(const TorusPoint& p) const { return step(p).jacobian; }

    /// Determinant of the derivative restricted to the B-coordinate XY-plane.
    double det_cu(const TorusPoint& p) const { return det_cu_of(step(p)); }

    double det_cu_of(const CocycleStep& st) const
    {
        if (!st.in_support && st.C2 == 1) return lu2_ * lc2_;
        return lu2_ * (1 + lc2_ * st.excess);
    }

    bool b_set_member(const TorusPoint& p) const { return det_cu(p) <= lu2_ + 1e-12; }

    /// Displacement along e^c applied by psi^{-1} at the torus point w.
    double inverse_displacement(const TorusPoint& w) const
    {
        const auto hit = in_tube(w);
        if (!hit) return 0;
        if (hit->radius() >= p_.d) return 0;
        const perturbation::PsiInverse inv = p_.tube->inverse_psi(hit->local);
        return inv.point[1] - hit->local[1];
    }

    /// Pulls a B-coordinate displacement w at x back to f^{-1}(x). The stable
    /// component is carried exactly, so no roundoff is amplified along e^s.
    Vec3 pullback_displacement(const TorusPoint& x, const Vec3& w) const
    {
        const TorusPoint q = apply_A_inv(x);
        Vec3 w1{w[0] / lu_, w[1] / lc_, w[2] / ls_};
        const double d1 = inverse_displacement(q);
        const TorusPoint q2 = make_torus_point(q.x + from_b(w1));
        const double d2 = inverse_displacement(q2);
        w1[1] += d2 - d1;
        return {w1[0] / lu_, w1[1] / lc_, w1[2] / ls_};
    }

    Vec3 to_b(const Vec3& v) const { return p_.frame.P_inv * v; }
    Vec3 from_b(const Vec3& v) const { return p_.frame.P * v; }

    /// w + delta e^c mod 1, reducing the product before the sum.
    TorusPoint shift_along_center(const TorusPoint& w, double delta) const
    {
        Vec3 r{};
        for (int i = 0; i < 3; ++i) {
            const double prod = delta * p_.frame.e_c[i];
            const double rem = std::fma(delta, p_.frame.e_c[i], -prod);
            r[i] = wrap_unit(wrap_unit(w.x[i] + (prod - std::floor(prod))) + rem);
        }
        return {r};
    }

    nlohmann::json manifest() const
    {
        nlohmann::json cert = {{"n", {cert_.n[0], cert_.n[1], cert_.n[2]}},
                               {"gap", cert_.gap},
                               {"window", cert_.window},
                               {"cross_section_diameter", cross_section_}};
        const std::string canon = "k=" + std::to_string(p_.k) + ";n=" + std::to_string(cert_.n[0]) + ","
                                + std::to_string(cert_.n[1]) + "," + std::to_string(cert_.n[2])
                                + ";gap=" + fmt_double(cert_.gap) + ";window=" + std::to_string(cert_.window);
        return {{"schema", "da3/map-manifest/v1"},
                {"k", p_.k},
                {"theta", p_.theta},
                {"eps", p_.eps},
                {"grid_intervals", p_.grid_intervals},
                {"tube", {{"a", p_.a}, {"b", p_.b}, {"c", p_.c}, {"d", p_.d}}},
                {"lattice_certificate", cert},
                {"lattice_certificate_hash", hex64(fnv1a(canon))}};
    }

private:
    DAParams p_;
    anosov::IntMatrix3 A_, A_inv_;
    double lu_ = 0, lc_ = 0, ls_ = 0, lu2_ = 0, lc2_ = 0, ls2_ = 0, lclu_ = 0, lcls_ = 0;
    GapCertificate cert_;
    double cross_section_ = 0;
    TubeLocator locator_;
    int window_ = 0;
};

/// The unperturbed automorphism A_k with the same evaluation interface.
class LinearAutomorphism {
public:
    explicit LinearAutomorphism(int k)
        : k_(k), spectrum_(anosov::solve_spectrum(k)), frame_(anosov::eigenframe(spectrum_)),
          A_(anosov::matrix_for_k(k)), A_inv_(anosov::inverse_matrix_for_k(k))
    {
        lu_ = spectrum_.lu();
        lc_ = spectrum_.lc();
        ls_ = spectrum_.ls();
    }

    const anosov::EigenFrame& frame() const { return frame_; }
    const anosov::Spectrum& spectrum() const { return spectrum_; }
    double unstable_log_rate() const { return std::log(lu_); }

    TorusPoint eval_f(const TorusPoint& p) const { return {A_.apply_mod1(p.x)}; }
    TorusPoint eval_f_inverse(const TorusPoint& p) const { return {A_inv_.apply_mod1(p.x)}; }

    CocycleStep step(const TorusPoint& p) const
    {
        CocycleStep st;
        st.image = eval_f(p);
        st.jacobian = {{{lu_, 0, 0}, {0, lc_, 0}, {0, 0, ls_}}};
        return st;
    }

    Mat3 eval_df(const TorusPoint&) const { return {{{lu_, 0, 0}, {0, lc_, 0}, {0, 0, ls_}}}; }
    double det_cu_of(const CocycleStep&) const { return lu_ * lc_; }

    Vec3 pullback_displacement(const TorusPoint&, const Vec3& w) const { return {w[0] / lu_, w[1] / lc_, w[2] / ls_}; }

    Vec3 to_b(const Vec3& v) const { return frame_.P_inv * v; }
    Vec3 from_b(const Vec3& v) const { return frame_.P * v; }

private:
    int k_;
    anosov::Spectrum spectrum_;
    anosov::EigenFrame frame_;
    anosov::IntMatrix3 A_, A_inv_;
    double lu_ = 0, lc_ = 0, ls_ = 0;
};

// --- B-set ------------------------------------------------------------------

struct BSetReport {
    long off_support_samples = 0;
    long off_support_mismatches = 0; // det_cu != (lambda_u lambda_c)^2 exactly
    long locus_samples = 0;
    double max_locus_error = 0;      // |det_cu - lambda_u^2| on the equality locus
    long locus_non_members = 0;
    long beyond_locus_members = 0;   // axis points at least 1% past b/lambda_c
    long off_axis_samples = 0;
    long off_axis_members = 0;
    double locus_half_length = 0;
    double center_segment_half_length = 0;
    bool pass = false;

    nlohmann::json to_json() const
    {
        return {{"off_support_samples", off_support_samples},
                {"off_support_mismatches", off_support_mismatches},
                {"locus_samples", locus_samples},
                {"max_locus_error", max_locus_error},
                {"locus_non_members", locus_non_members},
                {"beyond_locus_members", beyond_locus_members},
                {"off_axis_samples", off_axis_samples},
                {"off_axis_members", off_axis_members},
                {"equality_locus_half_length", locus_half_length},
                {"center_segment_half_length", center_segment_half_length},
                {"pass", pass}};
    }
};

/// Where det_cu drops to lambda_u^2. Off the support the cu-Jacobian is
/// exactly (lambda_u lambda_c)^2; equality holds on the axis for |y| <= b/lambda_c
/// and nowhere off the axis, so B(f) meets each unstable line in at most a point.
inline BSetReport check_b_set(const DAMap& m, long n, std::uint64_t seed)
{
    if (n < 1) throw Error(ErrorKind::parameter_out_of_range, "n must be positive");
    const auto& p = m.params();
    const double lu = p.spectrum.lu(), ls = p.spectrum.ls();
    const double L = m.equality_locus_half_length();
    BSetReport r;
    r.locus_half_length = L;
    r.center_segment_half_length = p.b;
    Rng rng(seed, 0xb5e7);
    for (long i = 0; i < n; ++i) {
        const TorusPoint x{{rng.uniform(), rng.uniform(), rng.uniform()}};
        const CocycleStep st = m.step(x);
        if (st.in_support) continue;
        ++r.off_support_samples;
        const Mat3& J = st.jacobian;
        if (J[0][0] * J[1][1] - J[0][1] * J[1][0] != m.lu2() * m.lc2()) ++r.off_support_mismatches;
    }
    const long n_axis = std::max(1L, n / 10);
    for (long i = 0; i < n_axis; ++i) {
        const double t = rng.uniform(-L, L);
        const TorusPoint x = make_torus_point(m.from_b({0, t, 0}));
        ++r.locus_samples;
        r.max_locus_error = std::max(r.max_locus_error, std::fabs(m.det_cu(x) - m.lu2()));
        if (!m.b_set_member(x)) ++r.locus_non_members;
        // the profile leaves its plateau flat to all orders, so the excess is
        // below roundoff for a few tenths of a percent past the locus end
        const double beyond = (rng.uniform() < 0.5 ? -1 : 1) * L * (1.01 + 0.5 * rng.uniform());
        if (m.b_set_member(make_torus_point(m.from_b({0, beyond, 0})))) ++r.beyond_locus_members;
        // A x has tube coordinates (lu x, lc t, ls z); put them at radius in [1e-3 d, d)
        const double rad = p.d * std::pow(10.0, rng.uniform(-3, 0));
        const double ang = rng.uniform(0, 6.283185307179586);
        const TorusPoint off = make_torus_point(m.from_b({rad * std::cos(ang) / lu, t, rad * std::sin(ang) / ls}));
        ++r.off_axis_samples;
        if (m.b_set_member(off)) ++r.off_axis_members;
    }
    r.pass = r.off_support_mismatches == 0 && r.max_locus_error <= 1e-9 && r.locus_non_members == 0
          && r.beyond_locus_members == 0 && r.off_axis_members == 0;
    return r;
}

} // namespace da3::damap

#endif // DA3_DAMAP_HPP
