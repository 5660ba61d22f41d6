#ifndef DA3_COMMON_HPP
#define DA3_COMMON_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace da3 {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

enum class ErrorKind {
    parameter_out_of_range,
    bracket_violation,
    degenerate_eigenvector,
    domain,
    construction,
    infeasible,
    geometry_violation,
    input_geometry,
    precision,
    resolution,
    trace_length,
    config
};

inline const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::parameter_out_of_range: return "parameter-out-of-range";
    case ErrorKind::bracket_violation: return "bracket-violation";
    case ErrorKind::degenerate_eigenvector: return "degenerate-eigenvector";
    case ErrorKind::domain: return "domain";
    case ErrorKind::construction: return "construction";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::geometry_violation: return "geometry-violation";
    case ErrorKind::input_geometry: return "input-geometry";
    case ErrorKind::precision: return "precision";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::trace_length: return "trace-length";
    case ErrorKind::config: return "config";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// --- small fixed-size linear algebra -------------------------------------

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline Vec3 operator*(const Mat3& m, const Vec3& v)
{
    return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

inline Mat3 operator*(const Mat3& a, const Mat3& b)
{
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    return r;
}

inline double det(const Mat3& m)
{
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
         - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
         + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline Mat3 inverse(const Mat3& m)
{
    const double d = det(m);
    if (d == 0.0 || !std::isfinite(d)) throw Error(ErrorKind::precision, "singular 3x3 matrix");
    Mat3 r{};
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
    return r;
}

inline Mat3 identity3() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

// --- torus conventions ----------------------------------------------------

struct TorusPoint {
    Vec3 x{};
};

struct LiftPoint {
    Vec3 x{};
};

inline double wrap_unit(double v)
{
    double r = v - std::floor(v);
    if (r >= 1.0) r = 0.0;
    return r;
}

inline TorusPoint project(const LiftPoint& p) { return {{wrap_unit(p.x[0]), wrap_unit(p.x[1]), wrap_unit(p.x[2])}}; }
inline LiftPoint lift(const TorusPoint& p) { return {p.x}; }

inline TorusPoint make_torus_point(const Vec3& v) { return project(LiftPoint{v}); }

inline Vec3 min_image(const Vec3& v)
{
    return {v[0] - std::nearbyint(v[0]), v[1] - std::nearbyint(v[1]), v[2] - std::nearbyint(v[2])};
}

inline double torus_distance(const TorusPoint& a, const TorusPoint& b) { return norm(min_image(a.x - b.x)); }

// --- random streams -------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// 53-bit uniforms taken directly from the engine output.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL)))
    {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// --- hashing / formatting -------------------------------------------------

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string fmt_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace da3

#endif // DA3_COMMON_HPP
