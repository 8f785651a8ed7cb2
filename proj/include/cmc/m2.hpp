#pragma once

#include <Eigen/Dense>

namespace cmc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Intrinsic geometry of M^2(kappa) on a unit-scaled embedded model:
//   kappa > 0 : unit sphere in R^3, scaled by R = kappa^{-1/2};
//   kappa < 0 : upper unit hyperboloid in Minkowski R^{2,1}, scaled by R;
//   kappa = 0 : affine plane, points stored homogeneously as (x, y, 1).
// Model points are vectors of the corresponding quadric/plane; tangent
// vectors live in the model tangent space (z-component 0 in the flat case).
// All lengths accepted/returned by the API are actual lengths.
class M2 {
  public:
    explicit M2(double kappa);

    double kappa() const { return kappa_; }
    bool spherical() const { return kappa_ > 0.0; }
    bool flat() const { return kappa_ == 0.0; }
    // Scale factor between unit-model arclength and actual length (1 if flat).
    double radius() const { return R_; }

    // Bilinear form pairing tangent vectors (Minkowski for kappa < 0).
    double inner(const Vec3& a, const Vec3& b) const;

    // Renormalize a near-model point back onto the model.
    Vec3 normalize(const Vec3& p) const;

    double dist(const Vec3& p, const Vec3& q) const;

    // Unit tangent at p toward q. Throws on coincident or antipodal pairs.
    Vec3 log_dir(const Vec3& p, const Vec3& q) const;

    // Geodesic from p with unit tangent dir, at actual arclength s.
    Vec3 exp(const Vec3& p, const Vec3& dir, double s) const;

    // Point at fraction t in [0,1] of the geodesic p -> q.
    Vec3 interpolate(const Vec3& p, const Vec3& q, double t) const;

    // Angle at `at` between the geodesics toward p and toward q.
    double angle(const Vec3& at, const Vec3& p, const Vec3& q) const;

    // Rotate a unit tangent at p counterclockwise by ang.
    Vec3 rotate_tangent(const Vec3& p, const Vec3& dir, double ang) const;

    // Isometry fixing the geodesic through p and q, reversing orientation.
    Mat3 reflection(const Vec3& p, const Vec3& q) const;

    // Orientation-preserving isometry taking (p, unit dir u) to (q, unit dir v).
    Mat3 align(const Vec3& p, const Vec3& u, const Vec3& q, const Vec3& v) const;

    // Apply an isometry matrix to a model point (renormalizes).
    Vec3 apply(const Mat3& M, const Vec3& p) const;

    // Sign of the position of x relative to the oriented geodesic p -> q
    // (positive on the left).
    double side(const Vec3& p, const Vec3& q, const Vec3& x) const;

    // Right triangle with the right angle at C, angle B at B, side a = dist(B,C):
    // returns b = dist(C,A), c = dist(A,B) and the angle A.
    struct RightTriangle {
        double b, c, angleA;
    };
    RightTriangle solve_right_triangle(double angleB, double a) const;

    // |law-of-cosines lhs - rhs| in unit-scaled terms (a opposite angle A).
    double law_of_cosines_residual(double a, double b, double c, double A) const;

    // Area of a geodesic triangle from its angle excess (kappa != 0).
    double triangle_area(double A, double B, double C) const;

  private:
    double kappa_;
    double R_;
};

// Canonical basepoint of every model: sphere north pole, hyperboloid apex,
// or the affine-plane origin (0,0,1).
inline Vec3 m2_basepoint() { return Vec3(0, 0, 1); }

}  // namespace cmc
