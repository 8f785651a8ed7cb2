#include "cmc/space_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cmc/closed_form.hpp"
#include "cmc/errors.hpp"

namespace cmc {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

double chart_lambda(double kappa, double x, double y) {
    const double d = 1.0 + 0.25 * kappa * (x * x + y * y);
    if (!(d > 0.0)) throw DomainError("point outside the chart domain");
    return 1.0 / d;
}

Mat3 metric_at(const KappaTau& kt, const Vec3& p, double chart_radius) {
    const double x = p.x(), y = p.y();
    const double r2 = x * x + y * y;
    if (kt.kappa < 0.0 && r2 >= 4.0 / (-kt.kappa))
        throw DomainError("metric_at: point outside the chart disk of M^2(kappa<0)");
    if (r2 > chart_radius * chart_radius)
        throw DomainError("metric_at: chart radius exceeded");
    const double lam = chart_lambda(kt.kappa, x, y);
    const double l2 = lam * lam, t = kt.tau;
    Mat3 g;
    g(0, 0) = l2 + t * t * l2 * y * y;
    g(0, 1) = -t * t * l2 * x * y;
    g(0, 2) = t * lam * y;
    g(1, 0) = g(0, 1);
    g(1, 1) = l2 + t * t * l2 * x * x;
    g(1, 2) = -t * lam * x;
    g(2, 0) = g(0, 2);
    g(2, 1) = g(1, 2);
    g(2, 2) = 1.0;
    return g;
}

Chart::Chart(double kappa, const Vec3& origin, const Vec3& ex)
    : kappa_(kappa), origin_(origin), ex_(ex) {
    const M2 geo(kappa);
    R_ = geo.radius();
    ey_ = geo.rotate_tangent(origin_, ex_, kPi / 2.0);
}

Eigen::Vector2d Chart::to_chart(const Vec3& model_point) const {
    const M2 geo(kappa_);
    const double d = geo.dist(origin_, model_point);
    if (d < 1e-15) return {0.0, 0.0};
    const Vec3 dir = geo.log_dir(origin_, model_point);
    double rho;
    if (kappa_ > 0.0) {
        if (d >= kPi * R_ - 1e-12)
            throw DomainError("to_chart: point at/beyond the antipode of the chart origin");
        rho = 2.0 * R_ * std::tan(0.5 * d / R_);
    } else if (kappa_ < 0.0) {
        rho = 2.0 * R_ * std::tanh(0.5 * d / R_);
    } else {
        rho = d;
    }
    return {rho * geo.inner(dir, ex_), rho * geo.inner(dir, ey_)};
}

Vec3 Chart::to_model(const Eigen::Vector2d& xy) const {
    const M2 geo(kappa_);
    const double rho = xy.norm();
    if (rho < 1e-300) return origin_;
    double d;
    if (kappa_ > 0.0)
        d = 2.0 * R_ * std::atan(0.5 * rho / R_);
    else if (kappa_ < 0.0) {
        if (rho >= 2.0 * R_)
            throw DomainError("to_model: point outside the chart disk");
        d = 2.0 * R_ * std::atanh(0.5 * rho / R_);
    } else {
        d = rho;
    }
    const Vec3 dir = (xy.x() * ex_ + xy.y() * ey_) / rho;
    return geo.exp(origin_, dir, d);
}

BaseTriangle base_triangle(double H, int m, int k, double ell_tilde) {
    if (!(H > 0.0)) throw DomainError("base_triangle: H must be positive");
    if (k < 2) throw DomainError("base_triangle: k must be >= 2");
    const int eps = epsilon_of(m, k);
    if (eps == 0) throw FlatCaseError("base_triangle: flat case out of scope");
    const double limit = ell_tilde_limit_regime(H, eps, k);
    if (!(ell_tilde > 0.0) || !(ell_tilde < limit))
        throw RangeError("base_triangle: ell_tilde must lie in (0, ell_tilde_limit), got " +
                         std::to_string(ell_tilde) + " with limit " + std::to_string(limit));
    const double kappa = 4.0 * H * H + eps;
    const M2 geo(kappa);

    BaseTriangle tri;
    tri.kappa = kappa;
    tri.angle2 = kPi / 2.0;
    tri.angle3 = kPi / k;
    // Solve with B = P3 (angle pi/k), right angle at C = P2, a = P2P3.
    const M2::RightTriangle rt = geo.solve_right_triangle(tri.angle3, ell_tilde);
    tri.len_beta1 = rt.b;
    tri.len_beta2 = ell_tilde;
    tri.len_beta3 = rt.c;
    tri.angle1 = rt.angleA;

    // Realize concretely: P3 at the model basepoint, beta2 along +x, the
    // triangle on the counterclockwise side.
    tri.P3 = m2_basepoint();
    Vec3 dir0(1, 0, 0);
    tri.P2 = geo.exp(tri.P3, dir0, ell_tilde);
    const Vec3 dir_hyp = geo.rotate_tangent(tri.P3, dir0, tri.angle3);
    tri.P1 = geo.exp(tri.P3, dir_hyp, rt.c);

    tri.area = geo.flat() ? 0.5 * tri.len_beta1 * tri.len_beta2
                          : geo.triangle_area(tri.angle1, tri.angle2, tri.angle3);

    // Consistency: the realized triangle must satisfy the law of cosines.
    const double r1 = geo.law_of_cosines_residual(geo.dist(tri.P1, tri.P2), tri.len_beta2,
                                                  tri.len_beta3, tri.angle3);
    if (r1 > 1e-9)
        throw SolveError("base_triangle: law-of-cosines residual " + std::to_string(r1));
    return tri;
}

Chart centered_chart(const BaseTriangle& tri) {
    const M2 geo(tri.kappa);
    const double d12 = geo.dist(tri.P1, tri.P2);
    const double d23 = geo.dist(tri.P2, tri.P3);
    const double d31 = geo.dist(tri.P3, tri.P1);
    Vec3 a = tri.P2, b = tri.P3;
    double dmax = d23;
    if (d12 > dmax) { a = tri.P1; b = tri.P2; dmax = d12; }
    if (d31 > dmax) { a = tri.P3; b = tri.P1; dmax = d31; }
    const Vec3 o = geo.interpolate(a, b, 0.5);
    // any unit tangent works as the frame; use the direction toward b
    const Vec3 ex = geo.log_dir(o, b);
    return Chart(tri.kappa, o, ex);
}

namespace {

// integral of the connection form -tau * lambda * (y dx - x dy) along the
// geodesic p -> q, by recursive midpoint-Richardson on chart coordinates
double lift_increment(const Chart& chart, double tau, const M2& geo, const Vec3& p,
                      const Vec3& q, const Eigen::Vector2d& cp, const Eigen::Vector2d& cq,
                      double tol, int depth) {
    const Vec3 mid = geo.interpolate(p, q, 0.5);
    const Eigen::Vector2d cm = chart.to_chart(mid);
    auto segment = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        const Eigen::Vector2d m = 0.5 * (a + b);
        const double lam = chart_lambda(chart.kappa(), m.x(), m.y());
        return -tau * lam * (m.y() * (b.x() - a.x()) - m.x() * (b.y() - a.y()));
    };
    const double whole = segment(cp, cq);
    const double halves = segment(cp, cm) + segment(cm, cq);
    if (std::abs(halves - whole) <= tol || depth <= 0) {
        if (depth <= 0 && std::abs(halves - whole) > tol)
            throw SolveError("horizontal_lift: step-size failure, residual " +
                             std::to_string(std::abs(halves - whole)));
        return halves + (halves - whole) / 3.0;
    }
    return lift_increment(chart, tau, geo, p, mid, cp, cm, 0.5 * tol, depth - 1) +
           lift_increment(chart, tau, geo, mid, q, cm, cq, 0.5 * tol, depth - 1);
}

}  // namespace

LiftResult horizontal_lift(const Chart& chart, double tau,
                           const std::vector<Vec3>& base_points, double z0, double tol) {
    if (base_points.size() < 2) throw DomainError("horizontal_lift: need >= 2 points");
    const M2 geo(chart.kappa());
    LiftResult out;
    out.z.resize(base_points.size());
    out.z[0] = z0;
    const KappaTau kt{chart.kappa(), tau};
    for (size_t i = 0; i + 1 < base_points.size(); ++i) {
        const Eigen::Vector2d ca = chart.to_chart(base_points[i]);
        const Eigen::Vector2d cb = chart.to_chart(base_points[i + 1]);
        const double dz =
            lift_increment(chart, tau, geo, base_points[i], base_points[i + 1], ca, cb,
                           tol, 40);
        out.z[i + 1] = out.z[i] + dz;
        // horizontality of the chord w.r.t. the metric at the segment midpoint
        const Eigen::Vector2d cm = 0.5 * (ca + cb);
        const Mat3 g = metric_at(kt, Vec3(cm.x(), cm.y(), 0.0));
        Vec3 seg(cb.x() - ca.x(), cb.y() - ca.y(), dz);
        const double len = std::sqrt(seg.dot(g * seg));
        if (len > 0.0) {
            const double res = std::abs((g * seg).z()) / len;  // <seg, xi> / |seg|
            out.max_ortho_residual = std::max(out.max_ortho_residual, res);
        }
    }
    return out;
}

double holonomy_gap(const Chart& chart, double tau, const BaseTriangle& tri,
                    int samples_per_side) {
    const M2 geo(tri.kappa);
    std::vector<Vec3> loop;
    loop.reserve(3 * samples_per_side + 1);
    auto add_side = [&](const Vec3& a, const Vec3& b) {
        for (int i = 0; i < samples_per_side; ++i)
            loop.push_back(geo.interpolate(a, b, double(i) / samples_per_side));
    };
    // traversal 2~ -> 3~ -> 1~/4~ -> 2~ fixes the sign convention of v~
    add_side(tri.P2, tri.P3);
    add_side(tri.P3, tri.P1);
    add_side(tri.P1, tri.P2);
    loop.push_back(tri.P2);
    const LiftResult lift = horizontal_lift(chart, tau, loop, 0.0);
    return lift.z.back() - lift.z.front();
}

double discrete_geodesic_residual(const KappaTau& kt, const std::vector<Vec3>& pts) {
    if (pts.size() < 3) return 0.0;
    auto seg_len = [&](const Vec3& a, const Vec3& b) {
        const Vec3 mid = 0.5 * (a + b);
        const Mat3 g = metric_at(kt, mid);
        const Vec3 e = b - a;
        return std::sqrt(std::max(0.0, e.dot(g * e)));
    };
    double worst = 0.0;
    const double h = 1e-6;
    for (size_t i = 1; i + 1 < pts.size(); ++i) {
        // gradient of the two adjacent segment lengths w.r.t. the interior node
        Vec3 grad = Vec3::Zero();
        for (int c = 0; c < 3; ++c) {
            Vec3 pp = pts[i], pm = pts[i];
            pp[c] += h;
            pm[c] -= h;
            const double lp = seg_len(pts[i - 1], pp) + seg_len(pp, pts[i + 1]);
            const double lm = seg_len(pts[i - 1], pm) + seg_len(pm, pts[i + 1]);
            grad[c] = (lp - lm) / (2.0 * h);
        }
        worst = std::max(worst, grad.norm());
    }
    return worst;
}

}  // namespace cmc
