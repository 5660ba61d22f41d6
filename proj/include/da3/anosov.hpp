#ifndef DA3_ANOSOV_HPP
#define DA3_ANOSOV_HPP

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "common.hpp"

namespace da3::anosov {

using Extended = long double;

struct IntMatrix3 {
    std::array<std::array<long long, 3>, 3> m{};

    long long det() const
    {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
             - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
             + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }

    IntMatrix3 operator*(const IntMatrix3& o) const
    {
        IntMatrix3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
        return r;
    }

    bool operator==(const IntMatrix3&) const = default;

    Vec3 apply(const Vec3& v) const
    {
        Vec3 r{};
        for (int i = 0; i < 3; ++i)
            r[i] = static_cast<double>(m[i][0]) * v[0] + static_cast<double>(m[i][1]) * v[1]
                 + static_cast<double>(m[i][2]) * v[2];
        return r;
    }

    /// A v mod 1 with each product split into integer part, fraction and fma
    /// remainder, so the result carries only a few ulps of error.
    Vec3 apply_mod1(const Vec3& v) const
    {
        Vec3 r{};
        for (int i = 0; i < 3; ++i) {
            double frac = 0, rem = 0;
            for (int j = 0; j < 3; ++j) {
                const double a = static_cast<double>(m[i][j]);
                const double prod = a * v[j];
                rem += std::fma(a, v[j], -prod);
                frac += prod - std::floor(prod);
            }
            r[i] = wrap_unit(wrap_unit(frac) + rem);
        }
        return r;
    }

    Mat3 to_real() const
    {
        Mat3 r{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r[i][j] = static_cast<double>(m[i][j]);
        return r;
    }
};

inline void require_k(int k)
{
    if (k < 5) throw Error(ErrorKind::parameter_out_of_range, "k must be >= 5, got " + std::to_string(k));
}

inline IntMatrix3 matrix_for_k(int k)
{
    require_k(k);
    return {{{{k - 1, -1, -1}, {1, 1, 0}, {1, 0, 0}}}};
}

inline IntMatrix3 inverse_matrix_for_k(int k)
{
    require_k(k);
    return {{{{0, 0, 1}, {0, 1, -1}, {-1, -1, k}}}};
}

/// p_k(x) = x^3 - k x^2 + (k+1) x - 1 in extended precision (Horner form).
inline Extended char_poly_eval(int k, Extended x)
{
    const Extended kk = k;
    return ((x - kk) * x + (kk + 1)) * x - 1;
}

inline Extended char_poly_derivative(int k, Extended x)
{
    const Extended kk = k;
    return (3 * x - 2 * kk) * x + (kk + 1);
}

/// The seven abscissae at which the sign of p_k is known in closed form.
inline std::array<Extended, 7> sign_table_points(int k)
{
    const Extended kk = k;
    return {Extended(0), 1 / kk, Extended(1), 1 + 1 / kk, Extended(2), kk / 2, kk};
}

inline constexpr std::array<int, 7> sign_table_expected{-1, +1, +1, +1, -1, -1, +1};

struct Bracket {
    Extended lo;
    Extended hi;
    bool contains_strictly(Extended x) const { return lo < x && x < hi; }
};

struct Spectrum {
    int k = 0;
    Extended lambda_s = 0;
    Extended lambda_c = 0;
    Extended lambda_u = 0;
    std::array<Bracket, 3> brackets{};
    std::array<Extended, 3> residuals{};

    double ls() const { return static_cast<double>(lambda_s); }
    double lc() const { return static_cast<double>(lambda_c); }
    double lu() const { return static_cast<double>(lambda_u); }
    Extended product() const { return lambda_s * lambda_c * lambda_u; }
};

namespace detail {

inline Extended refine_root(int k, Bracket br, Extended tol)
{
    Extended lo = br.lo;
    Extended hi = br.hi;
    const bool rising = char_poly_eval(k, lo) < 0;
    for (int it = 0; it < 400 && hi - lo > 1e-14L; ++it) {
        const Extended mid = lo + (hi - lo) / 2;
        const Extended pm = char_poly_eval(k, mid);
        if ((pm < 0) == rising)
            lo = mid;
        else
            hi = mid;
    }
    Extended x = lo + (hi - lo) / 2;
    for (int it = 0; it < 5; ++it) {
        const Extended p = char_poly_eval(k, x);
        if (std::fabs(p) <= tol * 1e-6L) break;
        const Extended dp = char_poly_derivative(k, x);
        if (dp == 0) break;
        const Extended next = x - p / dp;
        if (!br.contains_strictly(next)) break;
        x = next;
    }
    return x;
}

} // namespace detail

/// Roots of p_k isolated in (0,1/k), (1+1/k,2), (k/2,k) by bisection, then Newton-polished.
inline Spectrum solve_spectrum(int k, Extended tol = 1e-9L)
{
    require_k(k);
    if (!(tol > 0)) throw Error(ErrorKind::parameter_out_of_range, "tolerance must be positive");

    const auto xs = sign_table_points(k);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Extended v = char_poly_eval(k, xs[i]);
        const int sign = v > 0 ? 1 : (v < 0 ? -1 : 0);
        if (sign != sign_table_expected[i])
            throw Error(ErrorKind::bracket_violation,
                        "sign of p_k at table point " + std::to_string(i) + " is wrong for k=" + std::to_string(k));
    }

    const Extended kk = k;
    Spectrum s;
    s.k = k;
    s.brackets = {Bracket{0, 1 / kk}, Bracket{1 + 1 / kk, 2}, Bracket{kk / 2, kk}};
    Extended roots[3];
    for (int i = 0; i < 3; ++i) {
        roots[i] = detail::refine_root(k, s.brackets[i], tol);
        s.residuals[i] = std::fabs(char_poly_eval(k, roots[i]));
        if (!s.brackets[i].contains_strictly(roots[i]))
            throw Error(ErrorKind::bracket_violation, "root escaped its bracket for k=" + std::to_string(k));
        if (s.residuals[i] > tol)
            throw Error(ErrorKind::precision, "root residual above tolerance for k=" + std::to_string(k));
    }
    s.lambda_s = roots[0];
    s.lambda_c = roots[1];
    s.lambda_u = roots[2];
    return s;
}

using ExtVec3 = std::array<Extended, 3>;

struct EigenFrame {
    ExtVec3 v_s{}, v_c{}, v_u{};
    Vec3 e_s{}, e_c{}, e_u{};
    Mat3 P{};
    Mat3 P_inv{};
    Extended norm_v_c = 0;
};

inline ExtVec3 eigenvector_for(Extended lambda)
{
    if (lambda == 1 || lambda == 0) throw Error(ErrorKind::degenerate_eigenvector, "eigenvalue equals 0 or 1");
    return {Extended(1), 1 / (lambda - 1), 1 / lambda};
}

inline EigenFrame eigenframe(const Spectrum& spec)
{
    EigenFrame f;
    f.v_s = eigenvector_for(spec.lambda_s);
    f.v_c = eigenvector_for(spec.lambda_c);
    f.v_u = eigenvector_for(spec.lambda_u);

    auto unit = [](const ExtVec3& v, Extended& nrm) {
        nrm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        return ExtVec3{v[0] / nrm, v[1] / nrm, v[2] / nrm};
    };
    Extended ns, nc, nu;
    const ExtVec3 es = unit(f.v_s, ns), ec = unit(f.v_c, nc), eu = unit(f.v_u, nu);
    f.norm_v_c = nc;

    Extended P[3][3];
    for (int i = 0; i < 3; ++i) {
        P[i][0] = eu[i];
        P[i][1] = ec[i];
        P[i][2] = es[i];
        f.e_u[i] = static_cast<double>(eu[i]);
        f.e_c[i] = static_cast<double>(ec[i]);
        f.e_s[i] = static_cast<double>(es[i]);
    }
    const Extended d = P[0][0] * (P[1][1] * P[2][2] - P[1][2] * P[2][1])
                     - P[0][1] * (P[1][0] * P[2][2] - P[1][2] * P[2][0])
                     + P[0][2] * (P[1][0] * P[2][1] - P[1][1] * P[2][0]);
    if (d == 0) throw Error(ErrorKind::degenerate_eigenvector, "eigenbasis is singular");
    Extended Q[3][3];
    Q[0][0] = (P[1][1] * P[2][2] - P[1][2] * P[2][1]) / d;
    Q[0][1] = (P[0][2] * P[2][1] - P[0][1] * P[2][2]) / d;
    Q[0][2] = (P[0][1] * P[1][2] - P[0][2] * P[1][1]) / d;
    Q[1][0] = (P[1][2] * P[2][0] - P[1][0] * P[2][2]) / d;
    Q[1][1] = (P[0][0] * P[2][2] - P[0][2] * P[2][0]) / d;
    Q[1][2] = (P[0][2] * P[1][0] - P[0][0] * P[1][2]) / d;
    Q[2][0] = (P[1][0] * P[2][1] - P[1][1] * P[2][0]) / d;
    Q[2][1] = (P[0][1] * P[2][0] - P[0][0] * P[2][1]) / d;
    Q[2][2] = (P[0][0] * P[1][1] - P[0][1] * P[1][0]) / d;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            f.P[i][j] = static_cast<double>(P[i][j]);
            f.P_inv[i][j] = static_cast<double>(Q[i][j]);
        }
    return f;
}

/// Standard coordinates -> coordinates in the basis (e_u, e_c, e_s).
inline Vec3 to_frame_coords(const EigenFrame& f, const Vec3& w) { return f.P_inv * w; }
inline Vec3 from_frame_coords(const EigenFrame& f, const Vec3& w) { return f.P * w; }

/// Largest singular value of the 3x2 matrix [e_u e_s]; bounds the Euclidean
/// size of a unit B-coordinate vector in the x,z plane.
inline double cross_section_stretch(const EigenFrame& f)
{
    const double a = dot(f.e_u, f.e_u), b = dot(f.e_u, f.e_s), c = dot(f.e_s, f.e_s);
    const double tr = a + c, disc = std::sqrt((a - c) * (a - c) + 4 * b * b);
    return std::sqrt(0.5 * (tr + disc));
}

} // namespace da3::anosov

#endif // DA3_ANOSOV_HPP
