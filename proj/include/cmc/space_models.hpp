#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cmc/m2.hpp"

namespace cmc {

// E(kappa,tau) in the standard conformal chart:
//   g = lambda^2 (dx^2 + dy^2) + (dz + tau lambda (y dx - x dy))^2,
//   lambda = 1 / (1 + (kappa/4)(x^2+y^2)),
// a Killing submersion over M^2(kappa) with unit fibers along d/dz.

struct KappaTau {
    double kappa = 0.0;
    double tau = 0.0;
};

inline KappaTau kappa_tau_of(double H, int epsilon) {
    return {4.0 * H * H + epsilon, H};
}

double chart_lambda(double kappa, double x, double y);

// Metric tensor at a chart point (z-independent). Enforces the chart domain:
// x^2+y^2 < 4/(-kappa) for kappa < 0, and a configurable radius otherwise.
Mat3 metric_at(const KappaTau& kt, const Vec3& p, double chart_radius = 1e8);

// Conformal chart of M^2(kappa) centered at an arbitrary model point with an
// orthonormal tangent frame. kappa == 0 degenerates to normal coordinates.
class Chart {
  public:
    Chart() : Chart(0.0, m2_basepoint(), Vec3(1, 0, 0)) {}
    Chart(double kappa, const Vec3& origin, const Vec3& ex);

    double kappa() const { return kappa_; }
    const Vec3& origin() const { return origin_; }
    const Vec3& ex() const { return ex_; }
    const Vec3& ey() const { return ey_; }

    Eigen::Vector2d to_chart(const Vec3& model_point) const;
    Vec3 to_model(const Eigen::Vector2d& xy) const;

  private:
    double kappa_;
    double R_;
    Vec3 origin_, ex_, ey_;
};

// Triangle in M^2(4H^2+eps) with the right angle at P2, angle pi/k at P3 and
// side beta2 = P2P3 of length ell_tilde. Model points live on the unit quadric.
struct BaseTriangle {
    double kappa = 0.0;
    Vec3 P1, P2, P3;  // pi(1~)=pi(4~), pi(2~), pi(3~)
    double len_beta1 = 0.0;  // dist(P1,P2)
    double len_beta2 = 0.0;  // dist(P2,P3) = ell_tilde
    double len_beta3 = 0.0;  // dist(P3,P1)
    double angle1 = 0.0;     // free angle at P1
    double angle2 = 0.0;     // pi/2
    double angle3 = 0.0;     // pi/k
    double area = 0.0;       // by angle excess
};

BaseTriangle base_triangle(double H, int m, int k, double ell_tilde);

// Chart centered at the midpoint of the farthest-apart vertex pair, which
// keeps the whole triangle at bounded chart radius for every admissible
// ell_tilde (recorded in run reports).
Chart centered_chart(const BaseTriangle& tri);

struct LiftResult {
    std::vector<double> z;          // heights at the polyline nodes
    double max_ortho_residual = 0;  // per-segment horizontality residual
};

// Horizontal lift of a geodesic polyline given by model points; per-segment
// height increments are integrated adaptively along the exact geodesics.
LiftResult horizontal_lift(const Chart& chart, double tau,
                           const std::vector<Vec3>& base_points, double z0,
                           double tol = 1e-12);

// Signed height gap of the horizontal lift around the triangle boundary
// traversed P2 -> P3 -> P1 -> P2; |result| is the length of the vertical
// segment v~ closing the quadrilateral.
double holonomy_gap(const Chart& chart, double tau, const BaseTriangle& tri,
                    int samples_per_side = 64);

// Max discrete geodesic-energy residual of a polyline w.r.t. metric_at
// (stationarity of sum of segment lengths under interior node moves).
double discrete_geodesic_residual(const KappaTau& kt, const std::vector<Vec3>& chart_points);

}  // namespace cmc
