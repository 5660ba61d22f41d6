#ifndef DA3_FOLIATION_HPP
#define DA3_FOLIATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "damap.hpp"
#include "hyperbolicity.hpp"
#include "lattice.hpp"
#include "parallel.hpp"

namespace da3::foliation {

enum class LeafDirection { stable, unstable };

inline const char* to_string(LeafDirection d) { return d == LeafDirection::stable ? "stable" : "unstable"; }

// --- line fields ------------------------------------------------------------------

/// Unit direction of E^u (unstable) or E^s (stable) at p in B-coordinates.
/// Unstable: pull p back n_pb steps and push e^u forward with the cocycle.
/// Stable: push p forward and pull e^s back with the inverse cocycle. The
/// sign is fixed so that the leading component (x resp. z) is positive.
template <class Map>
Vec3 line_field(const Map& map, const TorusPoint& p, LeafDirection dir, int n_pb)
{
    if (n_pb < 1) throw Error(ErrorKind::parameter_out_of_range, "n_pb must be positive");
    std::vector<TorusPoint> orbit(static_cast<std::size_t>(n_pb) + 1);
    orbit[0] = p;
    Vec3 v{};
    if (dir == LeafDirection::unstable) {
        for (int j = 1; j <= n_pb; ++j) orbit[j] = map.eval_f_inverse(orbit[j - 1]);
        v = {1, 0, 0};
        for (int j = n_pb; j >= 1; --j) {
            v = map.step(orbit[j]).jacobian * v;
            v = (1 / norm(v)) * v;
        }
        if (v[0] < 0) v = -1.0 * v;
    } else {
        std::vector<Mat3> jac(static_cast<std::size_t>(n_pb));
        for (int j = 0; j < n_pb; ++j) {
            const auto st = map.step(orbit[j]);
            jac[j] = st.jacobian;
            orbit[j + 1] = st.image;
        }
        v = {0, 0, 1};
        for (int j = n_pb - 1; j >= 0; --j) {
            v = inverse(jac[j]) * v;
            v = (1 / norm(v)) * v;
        }
        if (v[2] < 0) v = -1.0 * v;
    }
    return v;
}

/// |v_y / v_x| for unstable directions, |v_y / v_z| for stable ones.
inline double cone_slope(const Vec3& v, LeafDirection dir)
{
    return dir == LeafDirection::unstable ? std::fabs(v[1] / v[0]) : std::fabs(v[1] / v[2]);
}

// --- leaf tracing -------------------------------------------------------------------

struct TraceOptions {
    double step = 1e-3;
    int n_pb = 30;
    double cone = std::numeric_limits<double>::infinity(); // slope bound Ku or Ks
};

struct LeafSegment {
    std::vector<LiftPoint> points;
    std::vector<double> slopes; // cone slope of the line field at each vertex
    double arc_length = 0;
    LeafDirection direction = LeafDirection::unstable;
    double step = 0;

    void write_csv(std::ostream& os) const
    {
        os << "n,x,y,z,arclength\n";
        for (std::size_t i = 0; i < points.size(); ++i)
            os << i << ',' << fmt_double(points[i].x[0]) << ',' << fmt_double(points[i].x[1]) << ','
               << fmt_double(points[i].x[2]) << ',' << fmt_double(step * static_cast<double>(i)) << '\n';
    }
};

/// Heun predictor-corrector along the line field, one chord of length `step`
/// per vertex, until the arc length reaches L. Positions are kept in the lift.
template <class Map>
LeafSegment trace_leaf(const Map& map, const LiftPoint& x, LeafDirection dir, double L, const TraceOptions& opt)
{
    if (!(L > 0)) throw Error(ErrorKind::parameter_out_of_range, "leaf length must be positive");
    if (!(opt.step > 0)) throw Error(ErrorKind::parameter_out_of_range, "step must be positive");
    LeafSegment leaf;
    leaf.direction = dir;
    leaf.step = opt.step;
    auto field = [&](const Vec3& q, const Vec3& orient, double* slope) {
        const Vec3 vb = line_field(map, make_torus_point(q), dir, opt.n_pb);
        const double s = cone_slope(vb, dir);
        if (!(s <= opt.cone))
            throw Error(ErrorKind::geometry_violation,
                        std::string(to_string(dir)) + " direction left its cone: slope " + fmt_double(s));
        if (slope) *slope = s;
        Vec3 u = map.from_b(vb);
        u = (1 / norm(u)) * u;
        if (dot(u, orient) < 0) u = -1.0 * u;
        return u;
    };
    Vec3 p = x.x;
    double s0 = 0;
    Vec3 u1 = field(p, map.from_b(dir == LeafDirection::unstable ? Vec3{1, 0, 0} : Vec3{0, 0, 1}), &s0);
    leaf.points.push_back({p});
    leaf.slopes.push_back(s0);
    const long steps = static_cast<long>(std::ceil(L / opt.step));
    for (long i = 0; i < steps; ++i) {
        const Vec3 u2 = field(p + opt.step * u1, u1, nullptr);
        Vec3 u = u1 + u2;
        u = (1 / norm(u)) * u;
        p = p + opt.step * u;
        u1 = field(p, u, &s0);
        leaf.points.push_back({p});
        leaf.slopes.push_back(s0);
    }
    leaf.arc_length = static_cast<double>(steps) * opt.step;
    return leaf;
}

/// Cone-checked trace for f_k with the spec's step bound step <= d/4.
inline LeafSegment trace_leaf(const damap::DAMap& m, const LiftPoint& x, LeafDirection dir, double L, double step,
                              int n_pb = 30)
{
    if (step > m.params().d / 4)
        throw Error(ErrorKind::parameter_out_of_range, "step must not exceed d/4 = " + fmt_double(m.params().d / 4));
    const auto cones = hyperbolicity::cone_constants(m.params());
    TraceOptions opt;
    opt.step = step;
    opt.n_pb = n_pb;
    opt.cone = dir == LeafDirection::unstable ? cones.Ku : cones.Ks;
    return trace_leaf<damap::DAMap>(m, x, dir, L, opt);
}

// --- density probe -----------------------------------------------------------------

struct DensityReport {
    double epsilon = 0;
    int grid_n = 0;
    double leaf_length = 0;
    long segments = 0;

    nlohmann::json to_json() const
    {
        return {{"epsilon", epsilon}, {"grid_n", grid_n}, {"leaf_length", leaf_length}, {"segments", segments}};
    }
};

/// Max over the grid_n^3 lattice of the torus distance to a polyline, by a
/// bucket grid over segment midpoints and an expanding ring search per node.
class PolylineDistance {
public:
    /// Segments are (start, displacement) pairs; start need not be wrapped.
    explicit PolylineDistance(const std::vector<std::pair<Vec3, Vec3>>& segs)
    {
        // Pieces span at most half a period per coordinate, so only the
        // translates adjacent to the minimum image can be nearest.
        for (const auto& [start, dv] : segs) {
            const double ext = std::max({std::fabs(dv[0]), std::fabs(dv[1]), std::fabs(dv[2])});
            const long parts = std::max(1L, static_cast<long>(std::ceil(2 * ext)));
            const Vec3 piece = (1.0 / static_cast<double>(parts)) * dv;
            for (long i = 0; i < parts; ++i) {
                Vec3 s0 = start + static_cast<double>(i) * piece;
                for (double& c : s0) c = wrap_unit(c);
                segs_.push_back({s0, piece});
                half_ = std::max(half_, 0.5 * norm(piece));
            }
        }
        const double n = static_cast<double>(std::max<std::size_t>(segs_.size(), 1));
        B_ = std::clamp(static_cast<int>(std::cbrt(n / 2)), 1, 96);
        std::vector<std::vector<int>> cells(static_cast<std::size_t>(B_) * B_ * B_);
        for (std::size_t i = 0; i < segs_.size(); ++i) {
            const Vec3 mid = segs_[i].first + 0.5 * segs_[i].second;
            cells[cell_of(mid)].push_back(static_cast<int>(i));
        }
        offsets_.assign(cells.size() + 1, 0);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            offsets_[c + 1] = offsets_[c] + static_cast<int>(cells[c].size());
            items_.insert(items_.end(), cells[c].begin(), cells[c].end());
        }
    }

    double distance(const Vec3& g) const
    {
        if (segs_.empty()) return std::numeric_limits<double>::infinity();
        const double cs = 1.0 / B_;
        const int ci = idx(g[0]), cj = idx(g[1]), cl = idx(g[2]);
        const long total = static_cast<long>(B_) * B_ * B_;
        thread_local std::vector<std::uint32_t> seen;
        thread_local std::uint32_t stamp = 0;
        if (seen.size() < static_cast<std::size_t>(total)) seen.assign(static_cast<std::size_t>(total), 0);
        if (++stamp == 0) {
            std::fill(seen.begin(), seen.end(), 0);
            stamp = 1;
        }
        long scanned = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int R = 0;; ++R) {
            for (int a = -R; a <= R; ++a)
                for (int b = -R; b <= R; ++b)
                    for (int c = -R; c <= R; ++c) {
                        if (std::max({std::abs(a), std::abs(b), std::abs(c)}) != R) continue;
                        const std::size_t cell = flat(ci + a, cj + b, cl + c);
                        if (seen[cell] == stamp) continue;
                        seen[cell] = stamp;
                        ++scanned;
                        for (int e = offsets_[cell]; e < offsets_[cell + 1]; ++e)
                            best = std::min(best, torus_segment_distance(
                                                      g, segs_[static_cast<std::size_t>(items_[static_cast<std::size_t>(e)])]));
                    }
            if (scanned == total || best <= R * cs - half_) return best;
        }
    }

    std::size_t size() const { return segs_.size(); }

private:
    // Exact torus distance: a translate is a candidate only if each coordinate
    // of g lies within 1/2 of the translated piece's coordinate range.
    static double torus_segment_distance(const Vec3& g, const std::pair<Vec3, Vec3>& seg)
    {
        const auto& [s0, dv] = seg;
        const Vec3 mid = s0 + 0.5 * dv;
        const Vec3 r = min_image(g - mid);
        std::array<std::array<double, 3>, 3> shifts{};
        std::array<int, 3> count{};
        for (int c = 0; c < 3; ++c)
            for (double j : {0.0, -1.0, 1.0})
                if (std::fabs(r[c] + j) - 0.5 * std::fabs(dv[c]) <= 0.5) shifts[c][count[c]++] = j;
        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < count[0]; ++a)
            for (int b = 0; b < count[1]; ++b)
                for (int c = 0; c < count[2]; ++c) {
                    const Vec3 p = mid + r + Vec3{shifts[0][a], shifts[1][b], shifts[2][c]};
                    best = std::min(best, point_segment_distance(p, s0, s0 + dv));
                }
        return best;
    }

    int idx(double v) const { return std::min(B_ - 1, static_cast<int>(wrap_unit(v) * B_)); }
    std::size_t flat(int i, int j, int l) const
    {
        auto w = [this](int v) { return ((v % B_) + B_) % B_; };
        return (static_cast<std::size_t>(w(i)) * B_ + w(j)) * B_ + w(l);
    }
    std::size_t cell_of(const Vec3& p) const { return flat(idx(p[0]), idx(p[1]), idx(p[2])); }

    std::vector<std::pair<Vec3, Vec3>> segs_;
    int B_ = 1;
    double half_ = 0;
    std::vector<int> offsets_;
    std::vector<int> items_;
};

inline std::vector<std::pair<Vec3, Vec3>> polyline_segments(const std::vector<LiftPoint>& pts, std::size_t count)
{
    std::vector<std::pair<Vec3, Vec3>> segs;
    count = std::min(count, pts.size());
    if (count == 1) segs.push_back({pts[0].x, Vec3{0, 0, 0}});
    for (std::size_t i = 0; i + 1 < count; ++i) segs.push_back({pts[i].x, pts[i + 1].x - pts[i].x});
    return segs;
}

/// Max over the grid_n^3 nodes of the distance to the polyline. Blocks of
/// nodes are refined best-first: the distance at a block's center plus its
/// half-diagonal bounds every node inside, so blocks that cannot beat the
/// best node found so far are dropped. The result is the exact node maximum.
inline double grid_epsilon(const PolylineDistance& pd, int grid_n)
{
    struct Block {
        int lo[3];
        int hi[3]; // exclusive
        double ub;
        bool operator<(const Block& o) const { return ub < o.ub; }
    };
    const double h = 1.0 / grid_n;
    auto node = [&](int i, int j, int l) { return pd.distance({i * h, j * h, l * h}); };
    auto make = [&](const int lo[3], const int hi[3]) {
        Block b{{lo[0], lo[1], lo[2]}, {hi[0], hi[1], hi[2]}, 0};
        Vec3 c{};
        double r2 = 0;
        for (int a = 0; a < 3; ++a) {
            c[a] = 0.5 * (lo[a] + hi[a] - 1) * h;
            const double half = 0.5 * (hi[a] - 1 - lo[a]) * h;
            r2 += half * half;
        }
        b.ub = pd.distance(c) + std::sqrt(r2);
        return b;
    };
    double best = node(0, 0, 0);
    std::priority_queue<Block> queue;
    const int lo0[3] = {0, 0, 0}, hi0[3] = {grid_n, grid_n, grid_n};
    queue.push(make(lo0, hi0));
    while (!queue.empty()) {
        const Block b = queue.top();
        queue.pop();
        if (b.ub <= best) break;
        int axis = 0;
        for (int a = 1; a < 3; ++a)
            if (b.hi[a] - b.lo[a] > b.hi[axis] - b.lo[axis]) axis = a;
        if (b.hi[axis] - b.lo[axis] == 1) {
            best = std::max(best, node(b.lo[0], b.lo[1], b.lo[2]));
            continue;
        }
        const int mid = (b.lo[axis] + b.hi[axis]) / 2;
        int hi1[3] = {b.hi[0], b.hi[1], b.hi[2]}, lo2[3] = {b.lo[0], b.lo[1], b.lo[2]};
        hi1[axis] = mid;
        lo2[axis] = mid;
        for (const Block& child : {make(b.lo, hi1), make(lo2, b.hi)})
            if (child.ub > best) queue.push(child);
    }
    return best;
}

inline DensityReport density_probe(const LeafSegment& leaf, int grid_n)
{
    if (grid_n < 8) throw Error(ErrorKind::parameter_out_of_range, "grid_n must be at least 8");
    if (leaf.points.empty()) throw Error(ErrorKind::parameter_out_of_range, "empty leaf");
    DensityReport r;
    r.grid_n = grid_n;
    r.leaf_length = leaf.arc_length;
    const auto segs = polyline_segments(leaf.points, leaf.points.size());
    const PolylineDistance pd(segs);
    r.segments = static_cast<long>(pd.size());
    r.epsilon = grid_epsilon(pd, grid_n);
    return r;
}

/// Epsilon of the prefixes of one traced leaf at the requested arc lengths.
inline std::vector<DensityReport> density_curve(const LeafSegment& leaf, const std::vector<double>& lengths, int grid_n)
{
    std::vector<DensityReport> out;
    for (double L : lengths) {
        const std::size_t count =
            std::min(leaf.points.size(), static_cast<std::size_t>(std::llround(L / leaf.step)) + 1);
        LeafSegment prefix;
        prefix.points.assign(leaf.points.begin(), leaf.points.begin() + static_cast<long>(count));
        prefix.step = leaf.step;
        prefix.arc_length = static_cast<double>(count - 1) * leaf.step;
        out.push_back(density_probe(prefix, grid_n));
    }
    return out;
}

inline void write_density_csv(std::ostream& os, const std::vector<DensityReport>& curve)
{
    os << "L,epsilon\n";
    for (const auto& r : curve) os << fmt_double(r.leaf_length) << ',' << fmt_double(r.epsilon) << '\n';
}

// --- lattice geometry ---------------------------------------------------------------

struct SegmentDensity {
    double epsilon = 0;
    int grid_n = 0;
    double spacing = 0;
    double bound = 0; // 5 (lambda_c - 1)
    bool pass = false;

    nlohmann::json to_json() const
    {
        return {{"epsilon", epsilon}, {"grid_n", grid_n}, {"spacing", spacing}, {"bound", bound}, {"pass", pass}};
    }
};

/// Density of the projected center segment J_k on a grid of spacing at most
/// (lambda_c - 1)/4. grid_n = 0 picks the coarsest admissible grid.
inline SegmentDensity segment_density(int k, int grid_n = 0)
{
    const auto spec = anosov::solve_spectrum(k);
    const auto frame = anosov::eigenframe(spec);
    const double g = spec.lc() - 1;
    const double res = g / 4;
    if (grid_n == 0) grid_n = std::max(8, static_cast<int>(std::ceil(1 / res)));
    if (1.0 / grid_n > res)
        throw Error(ErrorKind::resolution, "grid spacing " + fmt_double(1.0 / grid_n) + " is coarser than (lambda_c-1)/4 = "
                                               + fmt_double(res));
    const Vec3 h = center_half_axis(spec, frame);
    const double len = 2 * norm(h);
    const long pieces = std::max(1L, static_cast<long>(std::ceil(len * 2 * grid_n)));
    std::vector<std::pair<Vec3, Vec3>> segs;
    segs.reserve(static_cast<std::size_t>(pieces));
    const Vec3 dv = (2.0 / static_cast<double>(pieces)) * h;
    for (long i = 0; i < pieces; ++i) segs.push_back({-1.0 * h + static_cast<double>(i) * dv, dv});
    SegmentDensity r;
    r.grid_n = grid_n;
    r.spacing = 1.0 / grid_n;
    r.bound = 5 * g;
    r.epsilon = grid_epsilon(PolylineDistance(segs), grid_n);
    r.pass = r.epsilon <= r.bound;
    return r;
}

struct LatticeGeometry {
    int k = 0;
    double a_tilde = 0;
    Vec3 J_lo{};
    Vec3 J_hi{};
    GapCertificate certificate;
    double two_d = 0;
    SegmentDensity density;
    ProjectionSequences sequences;
    double max_w_step_error = 0;

    bool gap_pass() const { return certificate.gap > two_d; }
    bool pass() const { return gap_pass() && density.pass && max_w_step_error <= 1e-12; }

    nlohmann::json to_json() const
    {
        return {{"k", k},
                {"a_tilde", a_tilde},
                {"J_endpoints", {{J_lo[0], J_lo[1], J_lo[2]}, {J_hi[0], J_hi[1], J_hi[2]}}},
                {"min_gap", certificate.gap},
                {"min_gap_translate", {certificate.n[0], certificate.n[1], certificate.n[2]}},
                {"window", certificate.window},
                {"candidates", certificate.candidates},
                {"two_d", two_d},
                {"gap_pass", gap_pass()},
                {"density", density.to_json()},
                {"beta", sequences.beta},
                {"m_gap", sequences.m_gap},
                {"w_step_expected", sequences.step_expected},
                {"max_w_step_error", max_w_step_error},
                {"sequence_length", sequences.w.size()},
                {"pass", pass()}};
    }
};

inline LatticeGeometry lattice_geometry(int k, int grid_n = 0)
{
    const auto spec = anosov::solve_spectrum(k);
    const auto frame = anosov::eigenframe(spec);
    LatticeGeometry g;
    g.k = k;
    g.a_tilde = static_cast<double>(std::floor(1 / (spec.lambda_c - 1)) / 2);
    const Vec3 h = center_half_axis(spec, frame);
    g.J_lo = -1.0 * h;
    g.J_hi = h;
    g.certificate = lattice_min_gap(h, required_window(h));
    g.two_d = static_cast<double>((spec.lambda_c - 1) / 2);
    g.density = segment_density(k, grid_n);
    g.sequences = projection_sequences(spec);
    for (double s : g.sequences.w_steps)
        g.max_w_step_error = std::max(g.max_w_step_error, std::fabs(s - g.sequences.step_expected));
    return g;
}

// --- u-section probe ----------------------------------------------------------------

struct USectionOptions {
    long samples = 1000;
    std::uint64_t seed = 1;
    double margin = 0;   // landing must satisfy |y| < (1 - margin) b
    double step = 0;     // graph step; 0 means d/4
    int n_pb = 30;
    int error_samples = 20; // samples re-traced at half step for the integrator error
};

struct USectionReport {
    long samples = 0;
    long inside_drift_window = 0;
    long inside_landing_window = 0;
    double Ku = 0;
    double Ks = 0;
    double b = 0;
    double max_unstable_drift = 0;    // |y1 - zeta_y|
    double max_unstable_drift_ratio = 0; // drift / (Ku |zeta_x|)
    double max_stable_drift = 0;      // |y2 - y1|
    double max_stable_drift_ratio = 0;
    double max_landing_over_b = 0;    // |y2| / b
    double max_slope_u = 0;
    double max_slope_s = 0;
    double integrator_error = 0;
    bool pass = false;

    nlohmann::json to_json() const
    {
        return {{"samples", samples},
                {"inside_drift_window", inside_drift_window},
                {"inside_landing_window", inside_landing_window},
                {"Ku", Ku},
                {"Ks", Ks},
                {"b", b},
                {"max_unstable_drift", max_unstable_drift},
                {"max_unstable_drift_ratio", max_unstable_drift_ratio},
                {"max_stable_drift", max_stable_drift},
                {"max_stable_drift_ratio", max_stable_drift_ratio},
                {"max_landing_over_b", max_landing_over_b},
                {"max_slope_u", max_slope_u},
                {"max_slope_s", max_slope_s},
                {"integrator_error", integrator_error},
                {"pass", pass}};
    }
};

struct GraphTrace {
    double end = 0;       // y at the end of the graph
    double max_slope = 0;
};

/// Integrates a leaf written as a graph y(t) over the coordinate t (x for
/// unstable leaves, z for stable ones) in B-coordinates, from t0 to 0, with
/// the remaining coordinate held fixed (the leaves lie in invariant planes).
template <class Map>
GraphTrace trace_graph(const Map& map, LeafDirection dir, Vec3 zeta, double h, int n_pb, double cone)
{
    const int t_axis = dir == LeafDirection::unstable ? 0 : 2;
    const double t0 = zeta[t_axis];
    if (std::fabs(t0) > 2) throw Error(ErrorKind::trace_length, "leaf does not cross within extent 2");
    GraphTrace out;
    auto slope = [&](const Vec3& b) {
        const Vec3 v = line_field(map, make_torus_point(map.from_b(b)), dir, n_pb);
        const double s = v[1] / v[t_axis];
        if (!(std::fabs(s) <= cone))
            throw Error(ErrorKind::geometry_violation,
                        std::string(to_string(dir)) + " direction left its cone: slope " + fmt_double(s));
        out.max_slope = std::max(out.max_slope, std::fabs(s));
        return s;
    };
    const long n = std::max(1L, static_cast<long>(std::ceil(std::fabs(t0) / h)));
    const double dt = -t0 / static_cast<double>(n);
    Vec3 p = zeta;
    for (long i = 0; i < n; ++i) {
        const double s1 = slope(p);
        Vec3 q = p;
        q[t_axis] += dt;
        q[1] += dt * s1;
        const double s2 = slope(q);
        p[t_axis] = t0 + static_cast<double>(i + 1) * dt;
        p[1] += 0.5 * dt * (s1 + s2);
    }
    out.end = p[1];
    return out;
}

/// For zeta sampled in [-2/3, 2/3]^3 (B-coordinates): follow the unstable
/// leaf to the YZ-plane, then the stable leaf in that plane to the y-axis.
/// Checks the crossing against zeta_y +- Ku |zeta_x| and the landing against
/// |y| < (1 - margin) b, i.e. inside the stable saturation of I_k.
inline USectionReport u_section_probe(const damap::DAMap& m, const USectionOptions& opt, int workers = worker_count())
{
    const auto cones = hyperbolicity::cone_constants(m.params());
    const double b = m.params().b;
    const double h = opt.step > 0 ? opt.step : m.params().d / 4;
    struct Row {
        double zx, zy, zz, y1, y2, su, ss;
    };
    auto run = [&](long i, double step) {
        Rng rng(opt.seed, static_cast<std::uint64_t>(i));
        const Vec3 zeta{rng.uniform(-2.0 / 3, 2.0 / 3), rng.uniform(-2.0 / 3, 2.0 / 3), rng.uniform(-2.0 / 3, 2.0 / 3)};
        const GraphTrace u = trace_graph(m, LeafDirection::unstable, zeta, step, opt.n_pb, cones.Ku);
        const GraphTrace s = trace_graph(m, LeafDirection::stable, Vec3{0, u.end, zeta[2]}, step, opt.n_pb, cones.Ks);
        return Row{zeta[0], zeta[1], zeta[2], u.end, s.end, u.max_slope, s.max_slope};
    };
    const auto rows = parallel_map(opt.samples, [&](long i) { return run(i, h); }, workers);
    const long n_err = std::min<long>(opt.error_samples, opt.samples);
    const auto fine = parallel_map(n_err, [&](long i) { return run(i, h / 2); }, workers);

    USectionReport r;
    r.Ku = cones.Ku;
    r.Ks = cones.Ks;
    r.b = b;
    for (const Row& w : rows) {
        ++r.samples;
        const double du = std::fabs(w.y1 - w.zy), ds = std::fabs(w.y2 - w.y1);
        r.max_unstable_drift = std::max(r.max_unstable_drift, du);
        r.max_stable_drift = std::max(r.max_stable_drift, ds);
        if (w.zx != 0) r.max_unstable_drift_ratio = std::max(r.max_unstable_drift_ratio, du / (cones.Ku * std::fabs(w.zx)));
        if (w.zz != 0) r.max_stable_drift_ratio = std::max(r.max_stable_drift_ratio, ds / (cones.Ks * std::fabs(w.zz)));
        r.max_landing_over_b = std::max(r.max_landing_over_b, std::fabs(w.y2) / b);
        r.max_slope_u = std::max(r.max_slope_u, w.su);
        r.max_slope_s = std::max(r.max_slope_s, w.ss);
        if (du <= cones.Ku * std::fabs(w.zx)) ++r.inside_drift_window;
        if (std::fabs(w.y2) < (1 - opt.margin) * b) ++r.inside_landing_window;
    }
    for (long i = 0; i < n_err; ++i)
        r.integrator_error = std::max(r.integrator_error, std::fabs(fine[static_cast<std::size_t>(i)].y2 - rows[static_cast<std::size_t>(i)].y2));
    r.pass = r.samples > 0 && r.inside_drift_window == r.samples && r.inside_landing_window == r.samples;
    return r;
}

// --- backward convergence -------------------------------------------------------------

struct ConvergenceReport {
    std::vector<double> distances; // d(f^{-n} x, f^{-n} y), n = 0..n_max
    long first_below = -1;         // first n with distance < 1e-6
    bool monotone_tail = false;
    bool diverged = false;
    bool pass = false;

    nlohmann::json to_json() const
    {
        return {{"n_max", static_cast<long>(distances.size()) - 1},
                {"initial", distances.empty() ? 0.0 : distances.front()},
                {"final", distances.empty() ? 0.0 : distances.back()},
                {"first_below_1e-6", first_below},
                {"monotone_tail", monotone_tail},
                {"diverged", diverged},
                {"pass", pass}};
    }
};

/// Follows y = x + P w0 backward with x. The displacement is carried in
/// B-coordinates through pullback_displacement, so the distance is not
/// swamped by roundoff growing along e^s; it is reported as |P w|.
template <class Map>
ConvergenceReport backward_convergence_probe(const Map& map, TorusPoint x, Vec3 w, long n_max)
{
    if (n_max < 1) throw Error(ErrorKind::parameter_out_of_range, "n_max must be positive");
    ConvergenceReport r;
    r.distances.push_back(norm(map.from_b(w)));
    const double d0 = r.distances.front();
    if (d0 == 0) r.first_below = 0;
    for (long n = 1; n <= n_max; ++n) {
        w = map.pullback_displacement(x, w);
        x = map.eval_f_inverse(x);
        const double d = norm(map.from_b(w));
        r.distances.push_back(d);
        if (r.first_below < 0 && d < 1e-6) r.first_below = n;
        if (d > 10 * d0) r.diverged = true;
    }
    r.monotone_tail = true;
    for (std::size_t i = r.distances.size() / 2 + 1; i < r.distances.size(); ++i)
        if (!(r.distances[i] < r.distances[i - 1])) r.monotone_tail = false;
    r.pass = !r.diverged && (r.first_below >= 0 || r.monotone_tail);
    return r;
}

} // namespace da3::foliation

#endif // DA3_FOLIATION_HPP
