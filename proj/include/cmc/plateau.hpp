#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cmc/space_models.hpp"

namespace cmc {

enum class SideTag : std::uint8_t { Interior, H1, H2, H3, V };

// Geodesic quadrilateral Gamma~ = h1~ u h2~ u h3~ u v~ over the triangle
// Delta, with the horizontal sides lifted and the vertical segment closing
// the holonomy gap over pi(1~) = pi(4~).
struct BoundaryQuad {
    BaseTriangle tri;
    KappaTau kt;
    Chart chart;
    double v_length = 0.0;      // |z(1~) - z(4~)|
    double v_gap_signed = 0.0;  // holonomy gap, traversal 2~ -> 3~ -> 1~
    double closure_gap = 0.0;   // base-point closure of the projected loop
    double max_lift_residual = 0.0;
    bool slit_warning = false;  // beta1~ below 1% of ell_tilde_limit
    // reference polylines (model points + lifted heights), corner-to-corner
    std::vector<Vec3> h1_base, h2_base, h3_base;
    std::vector<double> h1_z, h2_z, h3_z;
};

BoundaryQuad build_boundary(double H, int m, int k, double ell_tilde, int samples = 128);

// Triangulated graph-form disk over Delta: polar grid around P1 with the
// corner fiber blown up into the v~ row (the slit), i in [0,ns] along beta2~
// (P2 -> P3), j in [0,nt] along the rays P1 -> beta2~.
struct DiskMesh {
    KappaTau kt;
    Chart chart;
    BaseTriangle tri;
    int ns = 0, nt = 0;
    std::vector<double> s_beta2;    // graded arclength samples of beta2~ (size ns+1)
    std::vector<double> t_profile;  // graded radial fractions along the rays (size nt+1)
    std::vector<Vec3> base_model;
    std::vector<Eigen::Vector2d> xy;
    std::vector<double> z;
    std::vector<std::array<int, 3>> faces;
    std::vector<SideTag> vtag;
    std::vector<bool> face_fan;  // zero projected area (adjacent to v~)
    int c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    double v_length = 0.0, v_gap_signed = 0.0;
    bool slit_warning = false;

    // per-face cache at the base centroid
    std::vector<Mat3> face_G;
    std::vector<Mat3> face_M;  // det(G) * G^{-1}

    int iterations = 0;
    double area = 0.0, grad_inf = 0.0;
    bool converged = false;

    int idx(int i, int j) const { return j * (ns + 1) + i; }
    int n_vertices() const { return static_cast<int>(base_model.size()); }
    bool is_boundary(int v) const { return vtag[v] != SideTag::Interior; }
};

struct SolveOptions {
    double tol = 1e-10;  // relative area decrease per iteration
    int max_iters = 200;
    bool verbose = false;
    bool allow_nonconverged = false;  // diagnostics only
};

DiskMesh solve_plateau(const BoundaryQuad& bq, int n, const SolveOptions& opts = {});

struct NuField {
    std::vector<double> face_nu;
    std::vector<double> vertex_nu;
    double min_nu = 0.0, max_nu = 0.0;
    double nu_corner_spread = 0.0;  // extrapolation disagreement at corners
};

NuField angle_function(const DiskMesh& mesh);

struct PieceFunctionals {
    double ell = 0.0;                  // -int_{h2~} nu
    std::array<double, 3> len_beta{};  // -int_{hi~} nu
    std::vector<double> z2_profile;    // sister height along h2 via |z'| = sqrt(1-nu^2)
    double graph_min_area2 = 0.0;      // min doubled projected area, non-fan faces
    bool graph_ok = false;
};

PieceFunctionals piece_functionals(const DiskMesh& mesh, const NuField& nu);

struct BisectSample {
    double ell_tilde = 0.0, ell = 0.0;
    int n = 0;
};

struct RootFindOptions {
    double tol = 1e-3;
    int n_coarse = 32;
    int n_final = 64;
    double delta_frac = 1e-3;  // bracket margin, fraction of ell_tilde_limit
    int max_bisect = 80;
    SolveOptions solve;
};

struct RootFindResult {
    double ell_tilde_star = 0.0;
    double ell_target = 0.0;
    DiskMesh mesh;
    NuField nu;
    PieceFunctionals fn;
    std::vector<BisectSample> history;
};

RootFindResult find_ell_tilde(double H, int m, int k, const RootFindOptions& opts = {});

// Diagnostics
double area_of(const DiskMesh& mesh);
// max relative error of the analytic interior gradient vs central differences
double gradient_fd_check(const DiskMesh& mesh, int n_samples, unsigned seed);
// min of A(z + delta u) - A(z) over random interior directions u (>= ~0 at a minimizer)
double stationarity_probe(const DiskMesh& mesh, int n_probes, double delta, unsigned seed);
// Richardson extrapolation for an order-p quantity
inline double richardson(double v_n, double v_2n, double p = 2.0) {
    const double f = std::pow(2.0, p);
    return v_2n + (v_2n - v_n) / (f - 1.0);
}

}  // namespace cmc
