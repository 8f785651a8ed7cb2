#pragma once

#include <cstdint>

namespace cmc {

// Closed-form layer of the construction: curvature sign, the admissibility
// bound alpha(m,k), target/limit lengths, the rotational sphere profile,
// fundamental-piece curvature and genus bookkeeping.
//
// Conventions: (m,k) are the tessellation parameters (regular m-gons, k per
// vertex), epsilon = sign(1/k + 1/m - 1/2), H > 0 is the mean curvature, and
// the minimal sister problem lives in E(4H^2+epsilon, H).

enum class Regime { Subcritical, Critical, Supercritical };

struct TessellationParams {
    int m = 0;
    int k = 0;
    int epsilon = 0;
    double alpha = 0.0;        // +inf when epsilon == 0
    double ell_target = 0.0;   // NaN when epsilon == 0 (flat case has no scale)
    std::int64_t genus = -1;       // defined for epsilon == 1
    std::int64_t n_triangles = 0;  // copies of Omega tiling M^2(eps); finite iff eps == 1
    std::int64_t n_pieces = 0;     // copies of Sigma in Sigma_{H,m,k}; = 2*n_triangles
};

struct RegimeParams {
    double H = 0.0;
    int epsilon = 0;
    double kappa = 0.0;  // 4H^2 + epsilon
    Regime regime = Regime::Critical;
    double ell_tilde_limit = 0.0;  // +inf in the critical case
    double ell_limit = 0.0;        // supercritical regime only, NaN otherwise
};

// cos(pi/n), sin(pi/n) with the n==2 values exact (0 and 1).
double cos_pi_over(int n);
double sin_pi_over(int n);

// Sign of 1/k + 1/m - 1/2, computed in integer arithmetic.
int epsilon_of(int m, int k);

// Theorem bound alpha(m,k); +inf iff epsilon_of(m,k) == 0.
double alpha(int m, int k);

// Cathetus adjacent to the angle pi/k of the (pi/2, pi/k, pi/m) right
// triangle in M^2(eps). Rejects the flat case.
double ell_target(int m, int k);

// Upper bound of the admissible side length of the upstairs triangle.
double ell_tilde_limit(double H, int m, int k);
double ell_tilde_limit_regime(double H, int epsilon, int k);

// Radius of the disk over which the rotational H-sphere is a bigraph.
double ell_limit_supercritical(double H, int epsilon);

// Height of the upper hemisphere of the rotational H-sphere at base radius r.
double sphere_height(double H, int epsilon, double r);

// Lemma lower bound for ell_limit in the subcritical regime (4H^2 < 1, eps=-1).
double barrier_lower_bound(double H, int k);

// Adaptive quadrature of the umbrella angle-function integral; equals
// barrier_lower_bound analytically. abs_err, if given, receives the achieved
// error estimate.
double umbrella_angle_integral(double H, int k, double* abs_err = nullptr);

// Total Gauss curvature of the fundamental piece: pi/k - pi/2.
double piece_curvature(int k);

struct GenusInfo {
    std::int64_t genus = 0;
    std::int64_t n_triangles = 0;
    std::int64_t n_pieces = 0;
};

// Genus of Sigma_{H,m,k} for epsilon == 1, with the piece/triangle counts.
// Verifies chi = n_pieces * (pi/k - pi/2) / (2 pi) = 2 - 2g in exact rational
// arithmetic before returning.
GenusInfo genus(int m, int k);

// Non-orientable genus of the quotient surface for odd g = 2n-1: returns 2n.
std::int64_t nonorientable_genus(std::int64_t g);

Regime regime_of(double H, int epsilon);
RegimeParams regime_params(double H, int m, int k);
TessellationParams tessellation_params(int m, int k);

}  // namespace cmc
