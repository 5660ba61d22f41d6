#ifndef DA3_LATTICE_HPP
#define DA3_LATTICE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "anosov.hpp"
#include "common.hpp"

namespace da3::foliation {

inline double point_segment_distance(const Vec3& p, const Vec3& s0, const Vec3& s1)
{
    const Vec3 dir = s1 - s0;
    const double len2 = dot(dir, dir);
    double t = 0;
    if (len2 > 0) t = std::clamp(dot(p - s0, dir) / len2, 0.0, 1.0);
    return norm(p - (s0 + t * dir));
}

/// Euclidean distance between segments [p0,p1] and [q0,q1]. The interior
/// critical point of the two line parameters is used when it lies in the unit
/// square; otherwise the minimum sits on an edge of the square, which reduces
/// to the four endpoint-to-segment distances.
inline double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1)
{
    const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
    const double a = dot(d1, d1), e = dot(d2, d2), b = dot(d1, d2);
    const double c = dot(d1, r), f = dot(d2, r);
    const double denom = a * e - b * b;
    if (a > 0 && e > 0 && denom > 1e-14 * a * e) {
        const double s = (b * f - c * e) / denom;
        const double t = (a * f - b * c) / denom;
        if (s >= 0 && s <= 1 && t >= 0 && t <= 1) return norm((p0 + s * d1) - (q0 + t * d2));
    }
    return std::min({point_segment_distance(p0, q0, q1), point_segment_distance(p1, q0, q1),
                     point_segment_distance(q0, p0, p1), point_segment_distance(q1, p0, p1)});
}

using IVec3 = std::array<long, 3>;

struct GapCertificate {
    IVec3 n{};
    double gap = 0;
    int window = 0;
    long candidates = 0;
};

/// Smallest window that contains every translate able to meet J = [-h, h].
inline int required_window(const Vec3& half_axis)
{
    const double m = std::max({std::fabs(half_axis[0]), std::fabs(half_axis[1]), std::fabs(half_axis[2])});
    return static_cast<int>(std::ceil(2 * m)) + 1;
}

/// min over n in Z^3 \ {0}, |n|_inf <= W, of d(J, J + n) for J = [-h, h].
/// Since d(J, J+n) = dist(n, [-2h, 2h]), translates are enumerated slice by
/// slice along the dominant axis of h, keeping only those whose box can still
/// beat the running best.
inline GapCertificate lattice_min_gap(const Vec3& half_axis, int W)
{
    if (W < required_window(half_axis))
        throw Error(ErrorKind::parameter_out_of_range, "translate window too small for the segment");
    const Vec3 p0 = -1.0 * half_axis, p1 = half_axis;
    auto dist = [&](const IVec3& n) {
        const Vec3 s{double(n[0]), double(n[1]), double(n[2])};
        return segment_segment_distance(p0, p1, p0 + s, p1 + s);
    };

    int ax = 0;
    for (int i = 1; i < 3; ++i)
        if (std::fabs(half_axis[i]) > std::fabs(half_axis[ax])) ax = i;
    const int o1 = (ax + 1) % 3, o2 = (ax + 2) % 3;
    const Vec3 S = 2.0 * half_axis; // difference segment is tau * S, tau in [-1, 1]

    GapCertificate cert;
    cert.window = W;
    IVec3 start{};
    start[ax] = 1;
    cert.n = start;
    cert.gap = dist(start);
    double R = cert.gap;

    for (long na = -W; na <= W; ++na) {
        double t0 = (na - R) / S[ax], t1 = (na + R) / S[ax];
        if (t0 > t1) std::swap(t0, t1);
        t0 = std::max(t0, -1.0);
        t1 = std::min(t1, 1.0);
        if (t0 > t1) continue;
        auto range = [&](int i) {
            const double lo = std::min(t0 * S[i], t1 * S[i]) - R, hi = std::max(t0 * S[i], t1 * S[i]) + R;
            return std::pair<long, long>{std::max<long>(-W, static_cast<long>(std::ceil(lo))),
                                         std::min<long>(W, static_cast<long>(std::floor(hi)))};
        };
        const auto [b1, e1] = range(o1);
        const auto [b2, e2] = range(o2);
        for (long n1 = b1; n1 <= e1; ++n1)
            for (long n2 = b2; n2 <= e2; ++n2) {
                IVec3 n{};
                n[ax] = na;
                n[o1] = n1;
                n[o2] = n2;
                if (n[0] == 0 && n[1] == 0 && n[2] == 0) continue;
                ++cert.candidates;
                const double g = dist(n);
                if (g < cert.gap) {
                    cert.gap = g;
                    cert.n = n;
                    R = g;
                }
            }
    }
    return cert;
}

/// Half-axis a*e^c = a_tilde * v^c of the center segment J_k with a_tilde = floor(1/(lambda_c - 1))/2.
inline Vec3 center_half_axis(const anosov::Spectrum& spec, const anosov::EigenFrame& frame)
{
    const long double at = std::floor(1 / (spec.lambda_c - 1)) / 2;
    return {double(at * frame.v_c[0]), double(at * frame.v_c[1]), double(at * frame.v_c[2])};
}

struct ProjectionSequences {
    std::vector<std::array<double, 2>> x;
    std::vector<std::array<double, 2>> z;
    std::vector<Vec3> w;
    std::vector<double> w_steps;
    double step_expected = 0;
    double beta = 0;
    double m_gap = 0;
};

/// Points where the projected center segment meets the faces of the unit cube.
inline ProjectionSequences projection_sequences(const anosov::Spectrum& spec)
{
    const double lc = spec.lc(), g = lc - 1;
    const long count = static_cast<long>(std::floor(1 / (spec.lambda_c - 1)));
    ProjectionSequences out;
    for (long n = 0; n <= count; ++n) {
        out.x.push_back({n * g, 0.0});
        out.z.push_back({1.0, (1 - n * g) / lc});
        out.w.push_back({n * g, 1.0, n * g / lc});
    }
    for (std::size_t i = 1; i < out.w.size(); ++i) out.w_steps.push_back(norm(out.w[i] - out.w[i - 1]));
    out.step_expected = g * std::sqrt(1 + 1 / (lc * lc));
    out.beta = std::atan(out.step_expected);
    out.m_gap = std::sin(out.beta);
    return out;
}

} // namespace da3::foliation

#endif // DA3_LATTICE_HPP
