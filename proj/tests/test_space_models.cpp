#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cmc/closed_form.hpp"
#include "cmc/errors.hpp"
#include "cmc/space_models.hpp"

using namespace cmc;

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

TEST_CASE("metric_at basic values") {
    // origin: lambda = 1, diagonal-ish, unit fiber
    const KappaTau kt{1.36, 0.3};
    const Mat3 g0 = metric_at(kt, Vec3(0, 0, 0));
    CHECK(g0(0, 0) == doctest::Approx(1.0));
    CHECK(g0(1, 1) == doctest::Approx(1.0));
    CHECK(g0(2, 2) == 1.0);
    CHECK(g0(0, 2) == 0.0);

    // Nil_3(1/2): kappa = 0, tau = 1/2 at (1,0,0): lambda = 1
    const KappaTau nil{0.0, 0.5};
    const Mat3 gn = metric_at(nil, Vec3(1, 0, 0));
    CHECK(gn(0, 0) == doctest::Approx(1.0));        // y = 0 kills the x cross term
    CHECK(gn(1, 1) == doctest::Approx(1.25));       // 1 + tau^2 x^2
    CHECK(gn(1, 2) == doctest::Approx(-0.5));       // -tau x
    CHECK(gn.determinant() == doctest::Approx(1.0));  // lambda^4
    const Vec3 xi(0, 0, 1);
    CHECK(xi.dot(gn * xi) == 1.0);

    // product case tau = 0: block metric
    const KappaTau prod{-1.0, 0.0};
    const Mat3 gp = metric_at(prod, Vec3(0.4, 0.2, 0.7));
    CHECK(gp(0, 2) == 0.0);
    CHECK(gp(1, 2) == 0.0);
    CHECK(gp(2, 2) == 1.0);
    CHECK(gp(0, 1) == doctest::Approx(0.0));

    // chart domain enforcement for kappa < 0
    CHECK_THROWS_AS(metric_at(prod, Vec3(2.0, 0.1, 0)), DomainError);
}

TEST_CASE("chart isometry sanity: rotations about the origin fiber") {
    const KappaTau kt{1.36, 0.3};
    const double th = 0.7;
    Mat3 R = Mat3::Identity();
    R(0, 0) = std::cos(th); R(0, 1) = -std::sin(th);
    R(1, 0) = std::sin(th); R(1, 1) = std::cos(th);
    for (const Vec3& p : {Vec3(0.3, -0.2, 0.5), Vec3(1.1, 0.4, -2.0), Vec3(0.01, 0.02, 0)}) {
        const Mat3 g_at_Rp = metric_at(kt, R * p);
        const Mat3 pullback = R.transpose() * g_at_Rp * R;
        const Mat3 g_at_p = metric_at(kt, p);
        CHECK((pullback - g_at_p).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("fiber curves are geodesics of metric_at") {
    const KappaTau kt{1.36, 0.3};
    std::vector<Vec3> fiber;
    for (int i = 0; i <= 20; ++i) fiber.push_back(Vec3(0.4, -0.3, 0.1 * i));
    CHECK(discrete_geodesic_residual(kt, fiber) < 1e-8);
    const KappaTau ktn{-0.64, 0.3};
    std::vector<Vec3> fiber2;
    for (int i = 0; i <= 20; ++i) fiber2.push_back(Vec3(0.2, 0.5, -0.05 * i));
    CHECK(discrete_geodesic_residual(ktn, fiber2) < 1e-8);
}

TEST_CASE("chart round trip") {
    for (double kappa : {1.36, -0.64}) {
        const M2 geo(kappa);
        const Vec3 o = m2_basepoint();
        const Chart chart(kappa, o, Vec3(1, 0, 0));
        const Vec3 p = geo.exp(o, geo.rotate_tangent(o, Vec3(1, 0, 0), 0.8), 0.6);
        const Eigen::Vector2d xy = chart.to_chart(p);
        const Vec3 back = chart.to_model(xy);
        CHECK((back - p).norm() < 1e-12);
        // conformal radius: rho = 2R tan(d/2R) (sphere) / 2R tanh (hyperbolic)
        const double R = geo.radius();
        const double expect = kappa > 0 ? 2 * R * std::tan(0.3 / R) : 2 * R * std::tanh(0.3 / R);
        const Eigen::Vector2d q = chart.to_chart(geo.exp(o, Vec3(1, 0, 0), 0.6));
        CHECK(q.norm() == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("base triangle satisfies the law of cosines on a grid") {
    int checked = 0;
    for (double H : {0.2, 0.3, 0.45, 0.7}) {
        for (int k : {3, 4, 5, 6, 7}) {
            for (int m : {2, 3, 4, 7}) {
                int eps;
                try {
                    eps = epsilon_of(m, k);
                } catch (const DomainError&) {
                    continue;
                }
                if (eps == 0) continue;
                double limit = ell_tilde_limit_regime(H, eps, k);
                if (!std::isfinite(limit)) limit = 2.0;
                for (double f : {0.2, 0.5, 0.8}) {
                    const BaseTriangle tri = base_triangle(H, m, k, f * limit);
                    const M2 geo(tri.kappa);
                    // a = beta2 opposite angle1 at P1; sides beta1, beta3 adjacent
                    CHECK(geo.law_of_cosines_residual(tri.len_beta2, tri.len_beta1,
                                                      tri.len_beta3, tri.angle1) < 1e-10);
                    CHECK(geo.law_of_cosines_residual(tri.len_beta1, tri.len_beta2,
                                                      tri.len_beta3, tri.angle3) < 1e-10);
                    CHECK(geo.dist(tri.P2, tri.P3) ==
                          doctest::Approx(tri.len_beta2).epsilon(1e-12));
                    CHECK(geo.dist(tri.P1, tri.P2) ==
                          doctest::Approx(tri.len_beta1).epsilon(1e-10));
                    CHECK(geo.angle(tri.P2, tri.P1, tri.P3) ==
                          doctest::Approx(kPi / 2).epsilon(1e-9));
                    ++checked;
                }
            }
        }
    }
    CHECK(checked >= 100);
    // degenerate configurations rejected
    CHECK_THROWS_AS(base_triangle(0.3, 2, 3, 0.0), RangeError);
    CHECK_THROWS_AS(base_triangle(0.3, 2, 3, 10.0), RangeError);
    CHECK_THROWS_AS(base_triangle(0.3, 4, 6, 1.7), RangeError);  // beyond the subcritical limit 1.646
}

TEST_CASE("small triangles approach the Euclidean limit") {
    const BaseTriangle tri = base_triangle(0.3, 2, 3, 1e-4);
    CHECK(tri.len_beta1 < 2e-4);
    CHECK(tri.len_beta3 < 3e-4);
    CHECK(tri.angle1 == doctest::Approx(kPi / 2 - kPi / 3).epsilon(1e-4));
}

TEST_CASE("supercritical near-limit degenerates beta1") {
    const double lim = ell_tilde_limit_regime(0.3, 1, 3);
    const BaseTriangle tri = base_triangle(0.3, 2, 3, 0.999 * lim);
    CHECK(tri.len_beta1 < 0.01);
}

TEST_CASE("horizontal lift: product case stays level, radial rays stay level") {
    // tau = 0: lift constant
    const BaseTriangle tri = base_triangle(0.3, 2, 3, 1.0);
    const Chart chart = centered_chart(tri);
    const M2 geo(tri.kappa);
    std::vector<Vec3> pts;
    for (int i = 0; i <= 32; ++i) pts.push_back(geo.interpolate(tri.P2, tri.P3, i / 32.0));
    const LiftResult flat = horizontal_lift(chart, 0.0, pts, 1.25);
    for (double z : flat.z) CHECK(z == doctest::Approx(1.25).epsilon(1e-14));

    // radial segments from the chart origin: the connection form vanishes
    const Chart origin_chart(tri.kappa, m2_basepoint(), Vec3(1, 0, 0));
    std::vector<Vec3> radial;
    const Vec3 dir = geo.rotate_tangent(m2_basepoint(), Vec3(1, 0, 0), 0.37);
    for (int i = 0; i <= 16; ++i) radial.push_back(geo.exp(m2_basepoint(), dir, 0.05 * i));
    const LiftResult rad = horizontal_lift(origin_chart, 0.3, radial, 0.0);
    for (double z : rad.z) CHECK(std::abs(z) < 1e-12);
}

TEST_CASE("holonomy equals 2 tau Area and is orientation antisymmetric") {
    const double H = 0.3;
    const BaseTriangle tri = base_triangle(H, 2, 3, 0.8 * ell_tilde_limit_regime(H, 1, 3));
    const Chart chart = centered_chart(tri);
    const double gap = holonomy_gap(chart, H, tri, 2500);
    const double expect = 2.0 * H * tri.area;
    CHECK(std::abs(std::abs(gap) - expect) < 0.01 * expect);

    // reversal: traverse the mirrored triangle (swap P2 <-> P3 reverses orientation)
    BaseTriangle rev = tri;
    std::swap(rev.P2, rev.P3);
    const double gap_rev = holonomy_gap(chart, H, rev, 2500);
    CHECK(std::abs(gap + gap_rev) < 1e-12);

    // area -> 0 => gap -> 0
    const BaseTriangle tiny = base_triangle(H, 2, 3, 1e-3);
    const Chart c2 = centered_chart(tiny);
    CHECK(std::abs(holonomy_gap(c2, H, tiny, 64)) < 1e-5);

    // hyperbolic case, same contract
    const BaseTriangle trih = base_triangle(0.3, 4, 6, 0.5);
    const Chart c3 = centered_chart(trih);
    const double gaph = holonomy_gap(c3, 0.3, trih, 2500);
    CHECK(std::abs(std::abs(gaph) - 2.0 * 0.3 * trih.area) < 0.01 * 2.0 * 0.3 * trih.area);
}

TEST_CASE("lift orthogonality residual vanishes under refinement") {
    const double H = 0.3;
    const BaseTriangle tri = base_triangle(H, 2, 3, 1.5);
    const Chart chart = centered_chart(tri);
    const M2 geo(tri.kappa);
    // beta3~ is not radial in this chart, so the residual is nontrivial
    double first = -1.0, last = -1.0;
    for (int n : {256, 1024, 4096}) {
        std::vector<Vec3> pts;
        for (int i = 0; i <= n; ++i) pts.push_back(geo.interpolate(tri.P3, tri.P1, double(i) / n));
        const LiftResult lr = horizontal_lift(chart, H, pts, 0.0);
        if (first < 0) first = lr.max_ortho_residual;
        last = lr.max_ortho_residual;
    }
    CHECK(last < 1e-8);
    CHECK(last <= first);
}

TEST_CASE("m2 tools: distances, angles, areas") {
    const M2 sph(1.0);
    // triangle (pi/2, pi/2, pi/k): cathetus adjacent to pi/k has length pi/2
    const Vec3 V = m2_basepoint();
    const Vec3 E = sph.exp(V, Vec3(1, 0, 0), kPi / 2);
    CHECK(sph.dist(V, E) == doctest::Approx(kPi / 2).epsilon(1e-14));

    // hyperboloid distance identity: d = arccosh(-<p,q>)
    const M2 hyp(-1.0);
    const Vec3 p = m2_basepoint();
    const Vec3 q = hyp.exp(p, Vec3(1, 0, 0), 0.9);
    CHECK(hyp.dist(p, q) == doctest::Approx(std::acosh(-hyp.inner(p, q))).epsilon(1e-13));

    // angle sum of Omega minus pi equals the area pi(1/m + 1/k - 1/2)
    for (int m : {2, 3, 4}) {
        for (int k : {3, 4, 5}) {
            if (epsilon_of(m, k) != 1) continue;
            const double excess = kPi * (1.0 / m + 1.0 / k - 0.5);
            CHECK(sph.triangle_area(kPi / 2, kPi / m, kPi / k) ==
                  doctest::Approx(excess).epsilon(1e-12));
        }
    }

    // antipodal rejection
    CHECK_THROWS_AS(sph.log_dir(V, Vec3(0, 0, -1)), DomainError);
    CHECK_THROWS_AS(sph.interpolate(V, Vec3(0, 0, -1), 0.5), DomainError);

    // reflections are isometries and fix the geodesic
    for (double kappa : {1.0, -1.0}) {
        const M2 geo(kappa);
        const Vec3 a = m2_basepoint();
        const Vec3 b = geo.exp(a, Vec3(1, 0, 0), 0.8);
        const Mat3 Rf = geo.reflection(a, b);
        CHECK((geo.apply(Rf, a) - a).norm() < 1e-12);
        CHECK((geo.apply(Rf, b) - b).norm() < 1e-12);
        const Vec3 c = geo.exp(a, geo.rotate_tangent(a, Vec3(1, 0, 0), 1.1), 0.5);
        CHECK(geo.dist(geo.apply(Rf, c), a) == doctest::Approx(geo.dist(c, a)).epsilon(1e-12));
        CHECK(geo.dist(geo.apply(Rf, c), c) > 0.1);
    }
}

TEST_CASE("flat model (kappa = 0) basics") {
    const M2 flat(0.0);
    const Vec3 a(1.0, 2.0, 1.0), b(4.0, 6.0, 1.0);
    CHECK(flat.dist(a, b) == doctest::Approx(5.0));
    const Mat3 Rf = flat.reflection(a, b);
    const Vec3 c(2.0, 0.0, 1.0);
    CHECK(flat.dist(flat.apply(Rf, c), a) == doctest::Approx(flat.dist(c, a)).epsilon(1e-12));
    const auto rt = flat.solve_right_triangle(kPi / 6, 2.0);
    CHECK(rt.b == doctest::Approx(2.0 * std::tan(kPi / 6)).epsilon(1e-14));
    CHECK(rt.angleA == doctest::Approx(kPi / 3).epsilon(1e-14));
}
