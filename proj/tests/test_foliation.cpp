#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "da3/foliation.hpp"
#include "reference.hpp"

using namespace da3;
using namespace da3::damap;
using namespace da3::foliation;

namespace {

const DAMap& map_for(int k)
{
    static std::map<int, std::unique_ptr<DAMap>> cache;
    auto& slot = cache[k];
    if (!slot) slot = std::make_unique<DAMap>(default_params(k));
    return *slot;
}

double slope_xy(const Vec3& v) { return v[1] / v[0]; }

// A point whose backward orbit of length n stays off the perturbation support.
std::optional<TorusPoint> off_support_backward(const DAMap& m, int n, std::uint64_t seed)
{
    Rng rng(seed);
    for (int trial = 0; trial < 200000; ++trial) {
        TorusPoint x{{rng.uniform(), rng.uniform(), rng.uniform()}};
        TorusPoint y = x;
        bool ok = !m.step(y).in_support;
        for (int j = 0; j < n && ok; ++j) {
            y = m.eval_f_inverse(y);
            ok = !m.step(y).in_support;
        }
        if (ok) return x;
    }
    return std::nullopt;
}

// Every node against every piece and every one of the 27 nearby translates.
double naive_epsilon(const std::vector<Vec3>& pts, int grid_n)
{
    double eps = 0;
    for (int i = 0; i < grid_n; ++i)
        for (int j = 0; j < grid_n; ++j)
            for (int l = 0; l < grid_n; ++l) {
                const Vec3 g{double(i) / grid_n, double(j) / grid_n, double(l) / grid_n};
                double best = INFINITY;
                for (std::size_t s = 0; s < pts.size(); ++s) {
                    const Vec3 a = pts[s], b = s + 1 < pts.size() ? pts[s + 1] : pts[s];
                    if (s + 1 == pts.size() && pts.size() > 1) break;
                    const Vec3 base{std::floor(a[0]), std::floor(a[1]), std::floor(a[2])};
                    for (int u = -2; u <= 2; ++u)
                        for (int v = -2; v <= 2; ++v)
                            for (int w = -2; w <= 2; ++w) {
                                const Vec3 q = g + base + Vec3{double(u), double(v), double(w)};
                                best = std::min(best, point_segment_distance(q, a, b));
                            }
                }
                eps = std::max(eps, best);
            }
    return eps;
}

LeafSegment polyline(const std::vector<Vec3>& pts)
{
    LeafSegment leaf;
    for (const auto& p : pts) leaf.points.push_back({p});
    leaf.step = 1;
    return leaf;
}

} // namespace

// --- segment geometry and lattice certificate --------------------------------------

TEST(SegmentDistance, ClosedFormCases)
{
    EXPECT_DOUBLE_EQ(segment_segment_distance({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}), 1.0);
    EXPECT_DOUBLE_EQ(segment_segment_distance({0, 0, 0}, {1, 0, 0}, {0.5, -1, 2}, {0.5, 1, 2}), 2.0);
    EXPECT_DOUBLE_EQ(segment_segment_distance({0, 0, 0}, {1, 0, 0}, {3, 0, 0}, {4, 0, 0}), 2.0);
    EXPECT_DOUBLE_EQ(segment_segment_distance({0, 0, 0}, {1, 0, 0}, {2, 1, 0}, {2, 1, 0}), std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(segment_segment_distance({-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}), 0.0);
    const Vec3 h{0.3, 1.7, -0.4};
    EXPECT_EQ(segment_segment_distance(-1.0 * h, h, -1.0 * h, h), 0.0);
}

TEST(LatticeMinGap, MatchesBruteForceOnSmallWindows)
{
    Rng rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        const Vec3 h{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-0.5, 0.5)};
        const int W0 = required_window(h);
        if (W0 > 5) continue;
        for (int W = W0; W <= 5; ++W) {
            const auto fast = lattice_min_gap(h, W);
            const auto ref = reference::lattice_gap_bruteforce(h, W);
            EXPECT_EQ(fast.gap, ref.gap) << "trial " << trial << " W " << W;
            const Vec3 s{double(fast.n[0]), double(fast.n[1]), double(fast.n[2])};
            EXPECT_EQ(segment_segment_distance(-1.0 * h, h, -1.0 * h + s, h + s), fast.gap);
        }
    }
}

TEST(LatticeMinGap, MatchesBruteForceForSmallK)
{
    for (int k : {5, 6, 7}) {
        const auto spec = anosov::solve_spectrum(k);
        const Vec3 h = center_half_axis(spec, anosov::eigenframe(spec));
        const int W = required_window(h);
        EXPECT_EQ(lattice_min_gap(h, W).gap, reference::lattice_gap_bruteforce(h, W).gap) << k;
    }
}

TEST(LatticeMinGap, RejectsShortWindow)
{
    const Vec3 h{2.2, 0.1, 0.1};
    EXPECT_THROW(lattice_min_gap(h, required_window(h) - 1), Error);
}

TEST(LatticeGeometry, K20RegressionAnchor)
{
    const auto g = lattice_geometry(20);
    EXPECT_NEAR(g.certificate.gap, 0.05529994240461276, 1e-12);
    EXPECT_EQ(g.certificate.n, (IVec3{-1, -17, -1}));
    EXPECT_GT(g.certificate.gap, g.two_d);
    EXPECT_TRUE(g.pass());
}

TEST(LatticeGeometry, GapExceedsTwiceRadiusAcrossSweep)
{
    for (int k = 6; k <= 40; k += 2) {
        const auto spec = anosov::solve_spectrum(k);
        const Vec3 h = center_half_axis(spec, anosov::eigenframe(spec));
        const auto cert = lattice_min_gap(h, required_window(h));
        EXPECT_GT(cert.gap, static_cast<double>((spec.lambda_c - 1) / 2)) << k;
        EXPECT_GT(cert.gap, 0);
    }
}

TEST(ProjectionSequences, FirstPointAndSteps)
{
    for (int k : {6, 20, 64}) {
        const auto spec = anosov::solve_spectrum(k);
        const auto seq = projection_sequences(spec);
        const double lc = spec.lc(), g = lc - 1;
        ASSERT_GE(seq.w.size(), 2u);
        EXPECT_NEAR(seq.w[1][0], g, 1e-15);
        EXPECT_EQ(seq.w[1][1], 1.0);
        EXPECT_NEAR(seq.w[1][2], g / lc, 1e-15);
        EXPECT_NEAR(seq.x[1][0], g, 1e-15);
        EXPECT_NEAR(seq.z[1][1], (1 - g) / lc, 1e-15);
        for (double s : seq.w_steps) EXPECT_NEAR(s, g * std::sqrt(1 + 1 / (lc * lc)), 1e-12) << k;
        EXPECT_NEAR(seq.beta, std::atan(seq.step_expected), 1e-15);
        EXPECT_NEAR(seq.m_gap, std::sin(seq.beta), 1e-15);
    }
}

TEST(ProjectionSequences, GapExceedsTwiceRadiusForLargeK)
{
    for (int k = 10; k <= 64; ++k) {
        const auto spec = anosov::solve_spectrum(k);
        EXPECT_GT(projection_sequences(spec).m_gap, (spec.lc() - 1) / 2) << k;
    }
}

// --- density probe ------------------------------------------------------------------

TEST(DensityProbe, SinglePointIsHalfDiagonal)
{
    const auto r = density_probe(polyline({{0, 0, 0}}), 8);
    EXPECT_DOUBLE_EQ(r.epsilon, std::sqrt(3.0) / 2);
    const auto r2 = density_probe(polyline({{0.013, 0.4, 0.77}}), 9);
    EXPECT_LE(r2.epsilon, std::sqrt(3.0) / 2);
    EXPECT_GT(r2.epsilon, 0.7);
}

TEST(DensityProbe, CoordinateCircleIsHalfFaceDiagonal)
{
    const auto r = density_probe(polyline({{0, 0, 0}, {1, 0, 0}}), 16);
    EXPECT_DOUBLE_EQ(r.epsilon, std::sqrt(2.0) / 2);
}

TEST(DensityProbe, RejectsCoarseGrid)
{
    EXPECT_THROW(density_probe(polyline({{0, 0, 0}}), 7), Error);
    EXPECT_THROW(density_probe(LeafSegment{}, 8), Error);
}

TEST(DensityProbe, EqualsExhaustiveNodeScan)
{
    Rng rng(5);
    for (int trial = 0; trial < 12; ++trial) {
        std::vector<Vec3> pts{{rng.uniform(), rng.uniform(), rng.uniform()}};
        const int n = 1 + static_cast<int>(rng.uniform() * 40);
        for (int i = 0; i < n; ++i) {
            const Vec3 d{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
            pts.push_back(pts.back() + d);
        }
        const int grid = 8 + trial;
        EXPECT_NEAR(density_probe(polyline(pts), grid).epsilon, naive_epsilon(pts, grid), 1e-14) << trial;
    }
}

TEST(DensityProbe, NestedPrefixesAreNonincreasing)
{
    const auto& m = map_for(20);
    const auto leaf = trace_leaf(m, LiftPoint{{0.1, 0.2, 0.3}}, LeafDirection::unstable, 20, m.params().d / 4);
    const auto curve = density_curve(leaf, {0.5, 1, 2, 5, 10, 20}, 16);
    for (const auto& r : curve) EXPECT_LE(r.epsilon, std::sqrt(3.0) / 2);
    for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_LE(curve[i].epsilon, curve[i - 1].epsilon);
    EXPECT_LT(curve.back().epsilon, curve.front().epsilon);
}

TEST(DensityProbe, CsvHeader)
{
    std::ostringstream os;
    write_density_csv(os, {density_probe(polyline({{0, 0, 0}}), 8)});
    EXPECT_EQ(os.str().substr(0, 10), "L,epsilon\n");
}

// --- segment density ------------------------------------------------------------------

TEST(SegmentDensity, WithinBoundForFeasibleK)
{
    for (int k : {6, 8, 12, 20, 30}) {
        const auto r = segment_density(k);
        EXPECT_GT(r.epsilon, 0);
        EXPECT_LE(r.spacing, (anosov::solve_spectrum(k).lc() - 1) / 4);
        EXPECT_TRUE(r.pass) << k << " eps " << r.epsilon << " bound " << r.bound;
    }
}

TEST(SegmentDensity, ShrinksWithK)
{
    const double e10 = segment_density(10).epsilon, e20 = segment_density(20).epsilon,
                 e40 = segment_density(40).epsilon;
    EXPECT_LT(e20, e10);
    EXPECT_LT(e40, e20);
}

TEST(SegmentDensity, CoarseGridIsResolutionError)
{
    try {
        segment_density(20, 16);
        FAIL() << "expected resolution error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::resolution);
    }
}

// --- leaf tracing ---------------------------------------------------------------------

TEST(TraceLeaf, LinearLeafIsStraightAlongUnstableDirection)
{
    LinearAutomorphism lin(20);
    TraceOptions opt;
    opt.step = 1e-3;
    const auto leaf = trace_leaf(lin, LiftPoint{{0.3, 0.6, 0.1}}, LeafDirection::unstable, 0.5, opt);
    Vec3 eu = lin.from_b({1, 0, 0});
    eu = (1 / norm(eu)) * eu;
    for (std::size_t i = 0; i < leaf.points.size(); ++i) {
        const Vec3 d = leaf.points[i].x - leaf.points[0].x;
        EXPECT_LT(norm(cross(d, eu)), 1e-12);
        EXPECT_NEAR(dot(d, eu), leaf.step * static_cast<double>(i), 1e-12);
    }
}

TEST(TraceLeaf, OffSupportLeafIsStraight)
{
    const auto& m = map_for(20);
    const auto x = off_support_backward(m, 32, 3);
    ASSERT_TRUE(x.has_value());
    const double h = m.params().d / 400;
    const auto leaf = trace_leaf(m, LiftPoint{x->x}, LeafDirection::unstable, 4 * h, h);
    Vec3 eu = m.from_b({1, 0, 0});
    eu = (1 / norm(eu)) * eu;
    for (const auto& p : leaf.points) EXPECT_LT(norm(cross(p.x - leaf.points[0].x, eu)), 1e-12);
    for (double s : leaf.slopes) EXPECT_LT(s, 1e-12);
}

TEST(TraceLeaf, ChordsAndConesHoldAtEveryVertex)
{
    const auto& m = map_for(20);
    const auto cones = hyperbolicity::cone_constants(m.params());
    const double h = m.params().d / 4;
    for (auto dir : {LeafDirection::unstable, LeafDirection::stable}) {
        const auto leaf = trace_leaf(m, LiftPoint{{0.41, 0.07, 0.93}}, dir, 5, h);
        EXPECT_GE(leaf.arc_length, 5);
        EXPECT_EQ(leaf.slopes.size(), leaf.points.size());
        for (std::size_t i = 1; i < leaf.points.size(); ++i) {
            const double chord = norm(leaf.points[i].x - leaf.points[i - 1].x);
            EXPECT_GE(chord, h / 2);
            EXPECT_LE(chord, 2 * h);
        }
        const double bound = dir == LeafDirection::unstable ? cones.Ku : cones.Ks;
        for (double s : leaf.slopes) EXPECT_LE(s, bound);
    }
}

TEST(TraceLeaf, ConcatenationMatchesSingleTrace)
{
    const auto& m = map_for(20);
    const double h = m.params().d / 4;
    const double L1 = 200 * h, L2 = 300 * h;
    const auto whole = trace_leaf(m, LiftPoint{{0.2, 0.5, 0.8}}, LeafDirection::unstable, L1 + L2, h);
    const auto first = trace_leaf(m, LiftPoint{{0.2, 0.5, 0.8}}, LeafDirection::unstable, L1, h);
    const auto second = trace_leaf(m, first.points.back(), LeafDirection::unstable, L2, h);
    std::vector<LiftPoint> joined = first.points;
    joined.insert(joined.end(), second.points.begin() + 1, second.points.end());
    auto one_sided = [](const std::vector<LiftPoint>& a, const std::vector<LiftPoint>& b) {
        double worst = 0;
        for (const auto& p : a) {
            double best = INFINITY;
            for (std::size_t i = 0; i + 1 < b.size(); ++i)
                best = std::min(best, point_segment_distance(p.x, b[i].x, b[i + 1].x));
            worst = std::max(worst, best);
        }
        return worst;
    };
    const double hausdorff = std::max(one_sided(whole.points, joined), one_sided(joined, whole.points));
    EXPECT_LE(hausdorff, 2 * h);
}

TEST(TraceLeaf, ConeExitIsGeometryError)
{
    const auto& m = map_for(20);
    const auto leaf = trace_leaf(m, LiftPoint{{0.1, 0.2, 0.3}}, LeafDirection::unstable, 2, m.params().d / 4);
    std::size_t i = 0;
    while (i < leaf.slopes.size() && leaf.slopes[i] < 1e-3) ++i;
    ASSERT_LT(i, leaf.slopes.size());
    TraceOptions opt;
    opt.step = 1e-3;
    opt.cone = leaf.slopes[i] / 2;
    try {
        trace_leaf(m, leaf.points[i], LeafDirection::unstable, 0.01, opt);
        FAIL() << "expected geometry violation";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::geometry_violation);
    }
}

TEST(TraceLeaf, RejectsBadArguments)
{
    const auto& m = map_for(20);
    const double d = m.params().d;
    EXPECT_THROW(trace_leaf(m, LiftPoint{{0, 0, 0}}, LeafDirection::unstable, 1, d / 2), Error);
    EXPECT_THROW(trace_leaf(m, LiftPoint{{0, 0, 0}}, LeafDirection::unstable, 0, d / 8), Error);
    EXPECT_THROW(line_field(m, TorusPoint{{0, 0, 0}}, LeafDirection::unstable, 0), Error);
}

// Width of the forward image of the unstable cone after n cocycle steps along
// the backward orbit; each extra step shrinks it by the slope factor
// (lambda_c/lambda_u)^2 C2 <= Theta, and the line field estimate stays inside.
TEST(LineField, PulledBackConeContracts)
{
    const auto& m = map_for(20);
    const auto cones = hyperbolicity::cone_constants(m.params());
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const TorusPoint p{{rng.uniform(), rng.uniform(), rng.uniform()}};
        std::vector<TorusPoint> orbit{p};
        for (int j = 0; j < 8; ++j) orbit.push_back(m.eval_f_inverse(orbit.back()));
        auto width = [&](int n) {
            Vec3 lo{1, -cones.Ku, 0}, hi{1, cones.Ku, 0};
            for (int j = n; j >= 1; --j) {
                const Mat3 J = m.step(orbit[static_cast<std::size_t>(j)]).jacobian;
                lo = J * lo;
                hi = J * hi;
                lo = (1 / norm(lo)) * lo;
                hi = (1 / norm(hi)) * hi;
            }
            return std::pair{slope_xy(lo), slope_xy(hi)};
        };
        double prev = 2 * cones.Ku;
        for (int n = 1; n <= 4; ++n) {
            const auto [lo, hi] = width(n);
            const double w = hi - lo;
            ASSERT_GT(w, 0);
            EXPECT_LE(w, cones.Theta * prev * (1 + 1e-9)) << trial << " n " << n;
            const double s = slope_xy(line_field(m, p, LeafDirection::unstable, 30));
            EXPECT_GE(s, lo - 1e-9 * std::fabs(lo));
            EXPECT_LE(s, hi + 1e-9 * std::fabs(hi));
            prev = w;
        }
    }
}

// --- u-section ------------------------------------------------------------------------

TEST(USection, OriginCrossesAtOrigin)
{
    const auto& m = map_for(20);
    const auto cones = hyperbolicity::cone_constants(m.params());
    const double h = m.params().d / 4;
    EXPECT_EQ(trace_graph(m, LeafDirection::unstable, Vec3{0, 0, 0}, h, 30, cones.Ku).end, 0.0);
    EXPECT_EQ(trace_graph(m, LeafDirection::stable, Vec3{0, 0, 0}, h, 30, cones.Ks).end, 0.0);
}

TEST(USection, LongExtentIsTraceLengthError)
{
    const auto& m = map_for(20);
    try {
        trace_graph(m, LeafDirection::unstable, Vec3{2.5, 0, 0}, 0.01, 30, 1e9);
        FAIL() << "expected trace-length error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::trace_length);
    }
}

TEST(USection, WindowShrinksRelativeToB)
{
    double prev = INFINITY;
    for (int k : {20, 40, 64}) {
        const auto p = default_params(k);
        const double ratio = hyperbolicity::cone_constants(p).Ku / p.b;
        EXPECT_LT(ratio, prev);
        prev = ratio;
    }
}

TEST(USection, SamplesLandInsideWindows)
{
    USectionOptions opt;
    opt.samples = 60;
    opt.seed = 4;
    const auto r = u_section_probe(map_for(20), opt);
    EXPECT_EQ(r.samples, 60);
    EXPECT_TRUE(r.pass) << r.to_json().dump();
    EXPECT_LT(r.max_landing_over_b, 1);
    EXPECT_LE(r.max_unstable_drift_ratio, 1);
    EXPECT_LT(r.integrator_error, 0.01 * r.b);
}

TEST(USection, WorkerCountDoesNotChangeReport)
{
    USectionOptions opt;
    opt.samples = 24;
    const auto& m = map_for(20);
    EXPECT_EQ(u_section_probe(m, opt, 1).to_json().dump(), u_section_probe(m, opt, 3).to_json().dump());
}

// --- backward convergence -------------------------------------------------------------

TEST(BackwardConvergence, ZeroDisplacementStaysZero)
{
    const auto r = backward_convergence_probe(map_for(20), TorusPoint{{0.3, 0.3, 0.3}}, Vec3{0, 0, 0}, 20);
    for (double d : r.distances) EXPECT_EQ(d, 0.0);
    EXPECT_EQ(r.first_below, 0);
    EXPECT_TRUE(r.pass);
}

TEST(BackwardConvergence, LinearUnstableDecayRate)
{
    LinearAutomorphism lin(20);
    const auto r = backward_convergence_probe(lin, TorusPoint{{0.1, 0.7, 0.2}}, Vec3{1e-3, 0, 0}, 10);
    const double lu = lin.spectrum().lu();
    for (std::size_t n = 0; n < r.distances.size(); ++n)
        EXPECT_NEAR(r.distances[n], r.distances[0] * std::pow(lu, -double(n)), 1e-9 * r.distances[n]);
}

TEST(BackwardConvergence, OffSupportUnstableDecayRate)
{
    const auto& m = map_for(20);
    const auto x = off_support_backward(m, 8, 9);
    ASSERT_TRUE(x.has_value());
    const auto r = backward_convergence_probe(m, *x, Vec3{1e-3, 0, 0}, 8);
    for (std::size_t n = 1; n < r.distances.size(); ++n)
        EXPECT_NEAR(r.distances[n] / r.distances[n - 1], 1 / m.lu2(), 1e-12);
    EXPECT_TRUE(r.pass);
}

TEST(BackwardConvergence, CenterDisplacementsConverge)
{
    const auto& m = map_for(20);
    Rng rng(21);
    int ok = 0;
    const int trials = 200;
    for (int i = 0; i < trials; ++i) {
        const TorusPoint x{{rng.uniform(), rng.uniform(), rng.uniform()}};
        const auto r = backward_convergence_probe(m, x, Vec3{0, 1e-3 / norm(m.from_b({0, 1, 0})), 0}, 200);
        EXPECT_NEAR(r.distances[0], 1e-3, 1e-15);
        ok += r.pass && r.first_below >= 0;
    }
    EXPECT_GE(ok, 0.95 * trials);
}

TEST(BackwardConvergence, GrowthIsReportedAsDivergence)
{
    struct Expanding {
        LinearAutomorphism lin{20};
        TorusPoint eval_f_inverse(const TorusPoint& p) const { return lin.eval_f_inverse(p); }
        Vec3 pullback_displacement(const TorusPoint&, const Vec3& w) const { return 2.0 * w; }
        Vec3 from_b(const Vec3& w) const { return lin.from_b(w); }
    } map;
    const auto r = backward_convergence_probe(map, TorusPoint{{0.5, 0.5, 0.5}}, Vec3{1e-3, 0, 0}, 10);
    EXPECT_TRUE(r.diverged);
    EXPECT_FALSE(r.pass);
    EXPECT_THROW(backward_convergence_probe(map, TorusPoint{{0.5, 0.5, 0.5}}, Vec3{1e-3, 0, 0}, 0), Error);
}

TEST(LeafSegment, CsvHeaderAndRows)
{
    const auto leaf = polyline({{0, 0, 0}, {0.5, 0, 0}});
    std::ostringstream os;
    leaf.write_csv(os);
    const std::string s = os.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "n,x,y,z,arclength");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
}
