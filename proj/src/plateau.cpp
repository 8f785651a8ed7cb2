#include "cmc/plateau.hpp"
#include <cstdio>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Sparse>

#include "cmc/closed_form.hpp"
#include "cmc/errors.hpp"

namespace cmc {

namespace {

// affine coefficients of w = e1 x e2 as a function of the three heights
struct FaceAffine {
    Vec3 w0;              // w at z = 0
    Vec3 ca, cb, cc;      // dw/dza, dw/dzb, dw/dzc
};

FaceAffine face_affine(const DiskMesh& m, int f) {
    const auto& fc = m.faces[f];
    const Eigen::Vector2d e1 = m.xy[fc[1]] - m.xy[fc[0]];
    const Eigen::Vector2d e2 = m.xy[fc[2]] - m.xy[fc[0]];
    FaceAffine fa;
    fa.w0 = Vec3(0, 0, e1.x() * e2.y() - e1.y() * e2.x());
    fa.ca = Vec3(e2.y() - e1.y(), e1.x() - e2.x(), 0);
    fa.cb = Vec3(-e2.y(), e2.x(), 0);
    fa.cc = Vec3(e1.y(), -e1.x(), 0);
    return fa;
}

Vec3 face_w(const DiskMesh& m, int f) {
    const auto& fc = m.faces[f];
    const FaceAffine fa = face_affine(m, f);
    return fa.w0 + m.z[fc[0]] * fa.ca + m.z[fc[1]] * fa.cb + m.z[fc[2]] * fa.cc;
}

void build_face_cache(DiskMesh& m) {
    const size_t nf = m.faces.size();
    m.face_G.resize(nf);
    m.face_M.resize(nf);
    m.face_fan.assign(nf, false);
    for (size_t f = 0; f < nf; ++f) {
        const auto& fc = m.faces[f];
        const Eigen::Vector2d cen =
            (m.xy[fc[0]] + m.xy[fc[1]] + m.xy[fc[2]]) / 3.0;
        const Mat3 G = metric_at(m.kt, Vec3(cen.x(), cen.y(), 0.0));
        m.face_G[f] = G;
        m.face_M[f] = G.determinant() * G.inverse();
        const Eigen::Vector2d e1 = m.xy[fc[1]] - m.xy[fc[0]];
        const Eigen::Vector2d e2 = m.xy[fc[2]] - m.xy[fc[0]];
        const double a2 = e1.x() * e2.y() - e1.y() * e2.x();
        const double scale = e1.squaredNorm() + e2.squaredNorm();
        m.face_fan[f] = std::abs(a2) <= 1e-14 * std::max(scale, 1e-30);
    }
}

// total area; optionally accumulates the gradient and Hessian triplets over
// interior degrees of freedom
double area_and_derivs(const DiskMesh& m, const std::vector<int>& dof,
                       Eigen::VectorXd* grad,
                       std::vector<Eigen::Triplet<double>>* hess) {
    double total = 0.0;
    for (size_t f = 0; f < m.faces.size(); ++f) {
        const auto& fc = m.faces[f];
        const FaceAffine fa = face_affine(m, static_cast<int>(f));
        const Vec3 w = fa.w0 + m.z[fc[0]] * fa.ca + m.z[fc[1]] * fa.cb + m.z[fc[2]] * fa.cc;
        const Mat3& M = m.face_M[f];
        const double q = w.dot(M * w);
        const double s = std::sqrt(std::max(q, 1e-300));
        total += 0.5 * s;
        if (!grad) continue;
        const std::array<const Vec3*, 3> cv = {&fa.ca, &fa.cb, &fa.cc};
        std::array<double, 3> dw;
        for (int i = 0; i < 3; ++i) dw[i] = cv[i]->dot(M * w);
        for (int i = 0; i < 3; ++i) {
            const int di = dof[fc[i]];
            if (di < 0) continue;
            (*grad)[di] += dw[i] / (2.0 * s);
            if (!hess) continue;
            for (int j = 0; j < 3; ++j) {
                const int dj = dof[fc[j]];
                if (dj < 0) continue;
                const double hij =
                    cv[i]->dot(M * (*cv[j])) / (2.0 * s) - dw[i] * dw[j] / (2.0 * s * s * s);
                hess->emplace_back(di, dj, hij);
            }
        }
    }
    return total;
}

}  // namespace

BoundaryQuad build_boundary(double H, int m, int k, double ell_tilde, int samples) {
    if (k < 3) throw DomainError("build_boundary: the solver requires k >= 3");
    BoundaryQuad bq;
    bq.tri = base_triangle(H, m, k, ell_tilde);
    bq.kt = kappa_tau_of(H, epsilon_of(m, k));
    bq.chart = centered_chart(bq.tri);
    const M2 geo(bq.tri.kappa);

    const double limit = ell_tilde_limit_regime(H, epsilon_of(m, k), k);
    if (std::isfinite(limit) && bq.tri.len_beta1 < 0.01 * limit) bq.slit_warning = true;

    auto sample_side = [&](const Vec3& a, const Vec3& b, std::vector<Vec3>& out) {
        out.clear();
        for (int i = 0; i <= samples; ++i)
            out.push_back(geo.interpolate(a, b, double(i) / samples));
    };
    sample_side(bq.tri.P1, bq.tri.P2, bq.h1_base);
    sample_side(bq.tri.P2, bq.tri.P3, bq.h2_base);
    sample_side(bq.tri.P3, bq.tri.P1, bq.h3_base);

    const LiftResult l1 = horizontal_lift(bq.chart, bq.kt.tau, bq.h1_base, 0.0);
    const LiftResult l2 = horizontal_lift(bq.chart, bq.kt.tau, bq.h2_base, l1.z.back());
    const LiftResult l3 = horizontal_lift(bq.chart, bq.kt.tau, bq.h3_base, l2.z.back());
    bq.h1_z = l1.z;
    bq.h2_z = l2.z;
    bq.h3_z = l3.z;
    bq.max_lift_residual =
        std::max({l1.max_ortho_residual, l2.max_ortho_residual, l3.max_ortho_residual});
    bq.v_gap_signed = l3.z.back() - l1.z.front();  // z(4~) - z(1~)
    bq.v_length = std::abs(bq.v_gap_signed);
    bq.closure_gap = geo.dist(bq.h3_base.back(), bq.h1_base.front());
    return bq;
}

namespace {

DiskMesh build_disk_grid(const BoundaryQuad& bq, int n) {
    if (n < 4) throw DomainError("solve_plateau: resolution too small");
    DiskMesh m;
    m.kt = bq.kt;
    m.chart = bq.chart;
    m.tri = bq.tri;
    m.slit_warning = bq.slit_warning;
    m.ns = n;
    m.nt = n;
    const M2 geo(bq.tri.kappa);
    const int ns = m.ns, nt = m.nt;
    const int nv = (ns + 1) * (nt + 1);
    m.base_model.resize(nv);
    m.xy.resize(nv);
    m.z.assign(nv, 0.0);
    m.vtag.assign(nv, SideTag::Interior);

    // Graded samples of beta2~: spacing proportional to the local ray length
    // from P1, so cells stay near-isotropic even when beta1~ degenerates.
    const double L2 = bq.tri.len_beta2;
    auto ray_len = [&](double s) {
        return geo.dist(bq.tri.P1, geo.interpolate(bq.tri.P2, bq.tri.P3, s / L2));
    };
    auto march = [&](double c) {  // returns s_n(c) - L2
        double s = 0.0;
        for (int i = 0; i < ns; ++i) s += c * (ray_len(std::min(s, L2)) + 1e-6 * L2);
        return s - L2;
    };
    double c_lo = 0.0, c_hi = 2.0 * L2 / ns / (std::min(bq.tri.len_beta1, bq.tri.len_beta3));
    while (march(c_hi) < 0.0) c_hi *= 2.0;
    for (int it = 0; it < 200 && (c_hi - c_lo) > 1e-15 * c_hi; ++it) {
        const double c = 0.5 * (c_lo + c_hi);
        (march(c) < 0.0 ? c_lo : c_hi) = c;
    }
    const double c_star = 0.5 * (c_lo + c_hi);
    m.s_beta2.assign(ns + 1, 0.0);
    for (int i = 0; i < ns; ++i)
        m.s_beta2[i + 1] =
            m.s_beta2[i] + c_star * (ray_len(std::min(m.s_beta2[i], L2)) + 1e-6 * L2);
    m.s_beta2[ns] = L2;

    std::vector<Vec3> b2(ns + 1);
    for (int i = 0; i <= ns; ++i)
        b2[i] = geo.interpolate(bq.tri.P2, bq.tri.P3, m.s_beta2[i] / L2);

    // Shared radial profile along the rays, geometrically graded into the
    // apex (log-polar near P1) and capped to at most ~2x uniform outside, so
    // cells stay near-isotropic all the way into the slit.
    {
        const double delta_g = std::max(1e-4 / nt, std::min(bq.v_length, L2) /
                                                       (nt * std::max(bq.tri.len_beta3, L2)));
        const double cap_g = 2.0 / nt;
        auto g_march = [&](double c) {
            double g = 0.0;
            for (int j = 0; j < nt; ++j) g += c * std::min(g + delta_g, cap_g);
            return g - 1.0;
        };
        double c_lo = 0.0, c_hi = 1.0;
        while (g_march(c_hi) < 0.0) c_hi *= 2.0;
        for (int it2 = 0; it2 < 200 && (c_hi - c_lo) > 1e-15 * c_hi; ++it2) {
            const double c = 0.5 * (c_lo + c_hi);
            (g_march(c) < 0.0 ? c_lo : c_hi) = c;
        }
        const double c = 0.5 * (c_lo + c_hi);
        m.t_profile.assign(nt + 1, 0.0);
        for (int j = 0; j < nt; ++j)
            m.t_profile[j + 1] = m.t_profile[j] + c * std::min(m.t_profile[j] + delta_g, cap_g);
        m.t_profile[nt] = 1.0;
    }

    for (int i = 0; i <= ns; ++i) {
        for (int j = 0; j <= nt; ++j) {
            const Vec3 p = j == 0 ? bq.tri.P1
                                  : (j == nt ? b2[i]
                                             : geo.interpolate(bq.tri.P1, b2[i],
                                                               m.t_profile[j]));
            const int v = m.idx(i, j);
            m.base_model[v] = p;
            m.xy[v] = bq.chart.to_chart(p);
        }
    }

    // tags and corners (sides take precedence in the order V, H2, H1, H3 at corners)
    for (int j = 0; j <= nt; ++j) {
        m.vtag[m.idx(0, j)] = SideTag::H1;
        m.vtag[m.idx(ns, j)] = SideTag::H3;
    }
    for (int i = 0; i <= ns; ++i) m.vtag[m.idx(i, nt)] = SideTag::H2;
    for (int i = 1; i < ns; ++i) m.vtag[m.idx(i, 0)] = SideTag::V;
    m.c1 = m.idx(0, 0);
    m.c2 = m.idx(0, nt);
    m.c3 = m.idx(ns, nt);
    m.c4 = m.idx(ns, 0);
    m.vtag[m.c1] = SideTag::H1;  // corner 1~ = h1 n v
    m.vtag[m.c4] = SideTag::H3;  // corner 4~ = h3 n v

    // boundary heights by horizontal lift along h1~, h2~, h3~
    auto column_pts = [&](int i) {
        std::vector<Vec3> pts(nt + 1);
        for (int j = 0; j <= nt; ++j) pts[j] = m.base_model[m.idx(i, j)];
        return pts;
    };
    std::vector<Vec3> row_pts(ns + 1);
    for (int i = 0; i <= ns; ++i) row_pts[i] = m.base_model[m.idx(i, nt)];

    const LiftResult l1 = horizontal_lift(bq.chart, bq.kt.tau, column_pts(0), 0.0);
    const LiftResult l2 = horizontal_lift(bq.chart, bq.kt.tau, row_pts, l1.z.back());
    std::vector<Vec3> col3 = column_pts(ns);
    std::reverse(col3.begin(), col3.end());  // lift 3~ -> 4~
    const LiftResult l3 = horizontal_lift(bq.chart, bq.kt.tau, col3, l2.z.back());

    for (int j = 0; j <= nt; ++j) m.z[m.idx(0, j)] = l1.z[j];
    for (int i = 0; i <= ns; ++i) m.z[m.idx(i, nt)] = l2.z[i];
    for (int j = 0; j <= nt; ++j) m.z[m.idx(ns, j)] = l3.z[nt - j];
    const double z1 = l1.z.front(), z4 = l3.z.back();
    m.v_gap_signed = z4 - z1;
    m.v_length = std::abs(m.v_gap_signed);
    // v~ subdivided proportionally to the ray angle at P1: matches the
    // helicoidal structure of the disk near the corner fiber
    std::vector<double> phi(ns + 1, 0.0);
    for (int i = 1; i <= ns; ++i)
        phi[i] = geo.angle(bq.tri.P1, bq.tri.P2, b2[i]);
    phi[ns] = bq.tri.angle1;
    for (int i = 0; i <= ns; ++i)
        m.z[m.idx(i, 0)] = z1 + (z4 - z1) * phi[i] / bq.tri.angle1;

    // center v~ around z = 0
    const double shift = 0.5 * (z1 + z4);
    for (int i = 0; i <= ns; ++i)
        for (int j = 0; j <= nt; ++j)
            if (m.is_boundary(m.idx(i, j))) m.z[m.idx(i, j)] -= shift;

    // Coons-patch initialization of the interior heights
    for (int i = 1; i < ns; ++i) {
        const double s = m.s_beta2[i] / L2;
        for (int j = 1; j < nt; ++j) {
            const double t = m.t_profile[j];
            const double L = m.z[m.idx(0, j)], R = m.z[m.idx(ns, j)];
            const double B = m.z[m.idx(i, 0)], T = m.z[m.idx(i, nt)];
            const double z00 = m.z[m.idx(0, 0)], z10 = m.z[m.idx(ns, 0)];
            const double z01 = m.z[m.idx(0, nt)], z11 = m.z[m.idx(ns, nt)];
            m.z[m.idx(i, j)] = (1 - s) * L + s * R + (1 - t) * B + t * T -
                               ((1 - s) * (1 - t) * z00 + s * (1 - t) * z10 +
                                (1 - s) * t * z01 + s * t * z11);
        }
    }

    // faces, consistently wound so non-fan projected areas are positive
    m.faces.reserve(2 * ns * nt);
    for (int j = 0; j < nt; ++j) {
        for (int i = 0; i < ns; ++i) {
            const int v00 = m.idx(i, j), v10 = m.idx(i + 1, j);
            const int v11 = m.idx(i + 1, j + 1), v01 = m.idx(i, j + 1);
            m.faces.push_back({v00, v10, v11});
            m.faces.push_back({v00, v11, v01});
        }
    }
    {
        // orientation probe on a cell away from the slit
        const int f = 2 * ((nt - 1) * ns + ns / 2) + 1;
        const auto& fc = m.faces[f];
        const Eigen::Vector2d e1 = m.xy[fc[1]] - m.xy[fc[0]];
        const Eigen::Vector2d e2 = m.xy[fc[2]] - m.xy[fc[0]];
        if (e1.x() * e2.y() - e1.y() * e2.x() < 0.0)
            for (auto& face : m.faces) std::swap(face[1], face[2]);
    }
    build_face_cache(m);

    // graph sanity of the base triangulation
    for (size_t f = 0; f < m.faces.size(); ++f) {
        if (m.face_fan[f]) continue;
        const auto& fc = m.faces[f];
        const Eigen::Vector2d e1 = m.xy[fc[1]] - m.xy[fc[0]];
        const Eigen::Vector2d e2 = m.xy[fc[2]] - m.xy[fc[0]];
        if (e1.x() * e2.y() - e1.y() * e2.x() <= 0.0)
            throw SolveError("solve_plateau: flipped projected face in the base grid");
    }
    return m;
}

// bilinear transfer of interior heights through the (s, t) parametrization
void prolong_heights(const DiskMesh& coarse, DiskMesh& fine) {
    for (int i = 1; i < fine.ns; ++i) {
        const double s = fine.s_beta2[i];
        int is = int(std::upper_bound(coarse.s_beta2.begin(), coarse.s_beta2.end(), s) -
                     coarse.s_beta2.begin()) - 1;
        is = std::clamp(is, 0, coarse.ns - 1);
        const double ds = coarse.s_beta2[is + 1] - coarse.s_beta2[is];
        const double a = ds > 0 ? std::clamp((s - coarse.s_beta2[is]) / ds, 0.0, 1.0) : 0.0;
        for (int j = 1; j < fine.nt; ++j) {
            const double tf = fine.t_profile[j];
            int jt = int(std::upper_bound(coarse.t_profile.begin(), coarse.t_profile.end(),
                                          tf) -
                         coarse.t_profile.begin()) - 1;
            jt = std::clamp(jt, 0, coarse.nt - 1);
            const double dt = coarse.t_profile[jt + 1] - coarse.t_profile[jt];
            const double b = dt > 0 ? std::clamp((tf - coarse.t_profile[jt]) / dt, 0.0, 1.0) : 0.0;
            const double z =
                (1 - a) * (1 - b) * coarse.z[coarse.idx(is, jt)] +
                a * (1 - b) * coarse.z[coarse.idx(is + 1, jt)] +
                (1 - a) * b * coarse.z[coarse.idx(is, jt + 1)] +
                a * b * coarse.z[coarse.idx(is + 1, jt + 1)];
            fine.z[fine.idx(i, j)] = z;
        }
    }
}

// Pointwise nonlinear Gauss-Seidel sweeps: each interior height is minimized
// in its own (convex, smooth) 1D star problem. Robust regardless of the
// global Hessian conditioning; used as a smoother around the LM steps.
void gauss_seidel_sweeps(DiskMesh& m, int sweeps) {
    const int nv = m.n_vertices();
    std::vector<std::vector<int>> vert_faces(nv);
    for (size_t f = 0; f < m.faces.size(); ++f)
        for (int t = 0; t < 3; ++t) vert_faces[m.faces[f][t]].push_back(int(f));
    auto star_energy = [&](int v) {
        double e = 0.0;
        for (int f : vert_faces[v]) {
            const auto& fc = m.faces[f];
            const FaceAffine fa = face_affine(m, f);
            const Vec3 w = fa.w0 + m.z[fc[0]] * fa.ca + m.z[fc[1]] * fa.cb +
                           m.z[fc[2]] * fa.cc;
            e += 0.5 * std::sqrt(std::max(w.dot(m.face_M[f] * w), 1e-300));
        }
        return e;
    };
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (int v = 0; v < nv; ++v) {
            if (m.is_boundary(v)) continue;
            // local step scale: spread of the neighbouring heights
            double zmin = m.z[v], zmax = m.z[v];
            for (int f : vert_faces[v])
                for (int t = 0; t < 3; ++t) {
                    zmin = std::min(zmin, m.z[m.faces[f][t]]);
                    zmax = std::max(zmax, m.z[m.faces[f][t]]);
                }
            const double clamp_step = std::max(zmax - zmin, 1e-9);
            for (int newton = 0; newton < 4; ++newton) {
                double g = 0.0, h = 0.0;
                for (int f : vert_faces[v]) {
                    const auto& fc = m.faces[f];
                    const FaceAffine fa = face_affine(m, f);
                    const Vec3 w = fa.w0 + m.z[fc[0]] * fa.ca + m.z[fc[1]] * fa.cb +
                                   m.z[fc[2]] * fa.cc;
                    const Vec3& cv = fc[0] == v ? fa.ca : (fc[1] == v ? fa.cb : fa.cc);
                    const Mat3& M = m.face_M[f];
                    const double q = std::max(w.dot(M * w), 1e-300);
                    const double s = std::sqrt(q);
                    const double dw = cv.dot(M * w);
                    g += dw / (2.0 * s);
                    h += cv.dot(M * cv) / (2.0 * s) - dw * dw / (2.0 * s * q);
                }
                if (!(h > 0.0)) break;
                double step = std::clamp(-g / h, -clamp_step, clamp_step);
                const double e0 = star_energy(v);
                const double z0 = m.z[v];
                bool moved = false;
                for (int bt = 0; bt < 8; ++bt) {
                    m.z[v] = z0 + step;
                    if (star_energy(v) <= e0) {
                        moved = true;
                        break;
                    }
                    step *= 0.5;
                }
                if (!moved) {
                    m.z[v] = z0;
                    break;
                }
                if (std::abs(step) < 1e-14) break;
            }
        }
    }
}

void optimize_heights(DiskMesh& m, const SolveOptions& opts) {
    const int nv = m.n_vertices();
    // interior degrees of freedom
    std::vector<int> dof(nv, -1);
    int ndof = 0;
    for (int v = 0; v < nv; ++v)
        if (!m.is_boundary(v)) dof[v] = ndof++;

    Eigen::VectorXd grad(ndof);
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::SparseMatrix<double> Hs(ndof, ndof);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;

    // Levenberg-Marquardt with diagonal (Marquardt) scaling: the damped system
    // (H + mu diag(H)) d = -g interpolates between Newton and scaled descent,
    // which copes with the strong metric anisotropy of near-limit meshes.
    gauss_seidel_sweeps(m, 2);
    double area = area_and_derivs(m, dof, nullptr, nullptr);
    const double area_scale = std::max(area, 1e-12);
    double mu = 1e-6;
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        grad.setZero();
        trip.clear();
        area = area_and_derivs(m, dof, &grad, &trip);
        m.grad_inf = grad.lpNorm<Eigen::Infinity>();
        if (m.grad_inf < 1e-14 * std::max(1.0, area_scale)) {
            m.converged = true;
            break;
        }
        Hs.setFromTriplets(trip.begin(), trip.end());
        Eigen::VectorXd hdiag(ndof);
        for (int i = 0; i < ndof; ++i)
            hdiag[i] = std::max(Hs.coeff(i, i), 1e-30);

        const std::vector<double> z_save = m.z;
        bool accepted = false;
        double new_area = area, rho = 0.0, full_newton_drop = 0.0;
        for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
            Eigen::SparseMatrix<double> Hmu = Hs;
            for (int i = 0; i < ndof; ++i) Hmu.coeffRef(i, i) += mu * hdiag[i];
            ldlt.compute(Hmu);
            if (ldlt.info() != Eigen::Success) {
                mu *= 10.0;
                continue;
            }
            const Eigen::VectorXd d = ldlt.solve(-grad);
            if (ldlt.info() != Eigen::Success || !d.allFinite()) {
                mu *= 10.0;
                continue;
            }
            for (int v = 0; v < nv; ++v)
                if (dof[v] >= 0) m.z[v] = z_save[v] + d[dof[v]];
            new_area = area_and_derivs(m, dof, nullptr, nullptr);
            const double pred = -(grad.dot(d) + 0.5 * d.dot(Hs * d));
            const double actual = area - new_area;
            rho = pred > 0.0 ? actual / pred : -1.0;
            if (new_area <= area && std::isfinite(new_area)) {
                accepted = true;
                full_newton_drop = actual;
                if (rho > 0.9)
                    mu = std::max(mu / 10.0, 1e-14);
                else if (rho > 0.5)
                    mu = std::max(mu / 3.0, 1e-14);
                else if (rho < 0.25)
                    mu *= 3.0;
            } else {
                m.z = z_save;
                mu *= 10.0;
            }
        }
        if (opts.verbose)
            std::fprintf(stderr, "  it=%3d area=%.12f drop=%.3e rho=%.2f mu=%.3e |g|=%.3e\n",
                         it, new_area, area - new_area, rho, mu, m.grad_inf);
        if (!accepted) {
            m.z = z_save;
            m.converged = true;  // descent exhausted at rounding scale
            break;
        }
        area = new_area;
        if (full_newton_drop / area_scale <= opts.tol && mu <= 1e-5) {
            m.converged = true;
            ++it;
            break;
        }
        if (mu > 10.0) gauss_seidel_sweeps(m, 1);  // smooth the stiff local modes
    }
    m.iterations = it;
    m.area = area;
    if (!m.converged && !opts.allow_nonconverged)
        throw SolveError("solve_plateau: no convergence after " +
                         std::to_string(opts.max_iters) + " iterations, area " +
                         std::to_string(area) + ", |grad|_inf " +
                         std::to_string(m.grad_inf));
}

}  // namespace

DiskMesh solve_plateau(const BoundaryQuad& bq, int n, const SolveOptions& opts) {
    // coarse-to-fine cascade: each level warm-starts the next through the
    // (s,t) parametrization, so the fine Newton solve starts in its basin
    std::vector<int> levels{n};
    while (levels.back() > 23) levels.push_back(levels.back() / 2);
    std::reverse(levels.begin(), levels.end());

    DiskMesh mesh;
    bool have_coarse = false;
    int total_iters = 0;
    for (size_t li = 0; li < levels.size(); ++li) {
        DiskMesh cur = build_disk_grid(bq, levels[li]);
        if (have_coarse) prolong_heights(mesh, cur);
        SolveOptions level_opts = opts;
        if (li + 1 < levels.size())
            level_opts.max_iters = std::max(opts.max_iters, 400);
        if (opts.verbose)
            std::fprintf(stderr, " level n=%d\n", levels[li]);
        optimize_heights(cur, level_opts);
        total_iters += cur.iterations;
        mesh = std::move(cur);
        have_coarse = true;
    }
    mesh.iterations = total_iters;
    return mesh;
}

double area_of(const DiskMesh& m) {
    std::vector<int> dof(m.n_vertices(), -1);
    return area_and_derivs(m, dof, nullptr, nullptr);
}

NuField angle_function(const DiskMesh& m) {
    NuField nu;
    const size_t nf = m.faces.size();
    nu.face_nu.resize(nf);
    for (size_t f = 0; f < nf; ++f) {
        const Vec3 w = face_w(m, static_cast<int>(f));
        // nu = <N, xi> with N = G^{-1} w normalized; w^T G^{-1} w = w^T M w / det G
        const double q = std::max(w.dot(m.face_M[f] * w), 1e-300);
        nu.face_nu[f] = -w.z() * std::sqrt(m.face_G[f].determinant() / q);
    }

    // vertex values: area-weighted face means, then one-sided extrapolation
    // from the two face layers adjacent to each boundary side
    const int nv = m.n_vertices();
    nu.vertex_nu.assign(nv, 0.0);
    std::vector<double> wsum(nv, 0.0);
    for (size_t f = 0; f < nf; ++f) {
        const Vec3 w = face_w(m, static_cast<int>(f));
        const double a = 0.5 * std::sqrt(std::max(w.dot(m.face_M[f] * w), 1e-300));
        for (int t = 0; t < 3; ++t) {
            nu.vertex_nu[m.faces[f][t]] += a * nu.face_nu[f];
            wsum[m.faces[f][t]] += a;
        }
    }
    for (int v = 0; v < nv; ++v)
        if (wsum[v] > 0.0) nu.vertex_nu[v] /= wsum[v];

    const int ns = m.ns, nt = m.nt;
    auto cell_mean = [&](int ci0, int ci1, int cj0, int cj1) {
        double s = 0.0;
        int cnt = 0;
        for (int ci = std::max(ci0, 0); ci <= std::min(ci1, ns - 1); ++ci) {
            for (int cj = std::max(cj0, 0); cj <= std::min(cj1, nt - 1); ++cj) {
                const int f0 = 2 * (cj * ns + ci);
                s += nu.face_nu[f0] + nu.face_nu[f0 + 1];
                cnt += 2;
            }
        }
        return cnt ? s / cnt : 0.0;
    };
    // layer centroids sit about h/2 and 3h/2 inside: value at the boundary
    // extrapolates linearly as (3 l1 - l2) / 2
    auto extrap = [](double l1, double l2) { return 1.5 * l1 - 0.5 * l2; };

    std::vector<double> side_h1(nt + 1), side_h3(nt + 1), side_h2(ns + 1), side_v(ns + 1);
    for (int j = 0; j <= nt; ++j) {
        side_h1[j] = extrap(cell_mean(0, 0, j - 1, j), cell_mean(1, 1, j - 1, j));
        side_h3[j] = extrap(cell_mean(ns - 1, ns - 1, j - 1, j),
                            cell_mean(ns - 2, ns - 2, j - 1, j));
    }
    for (int i = 0; i <= ns; ++i) {
        side_h2[i] = extrap(cell_mean(i - 1, i, nt - 1, nt - 1), cell_mean(i - 1, i, nt - 2, nt - 2));
        side_v[i] = extrap(cell_mean(i - 1, i, 0, 0), cell_mean(i - 1, i, 1, 1));
    }
    // layered extrapolation per side; corners get the mean of their two sides
    for (int j = 1; j < nt; ++j) {
        nu.vertex_nu[m.idx(0, j)] = side_h1[j];
        nu.vertex_nu[m.idx(ns, j)] = side_h3[j];
    }
    for (int i = 1; i < ns; ++i) {
        nu.vertex_nu[m.idx(i, nt)] = side_h2[i];
        nu.vertex_nu[m.idx(i, 0)] = side_v[i];
    }
    nu.vertex_nu[m.c1] = 0.5 * (side_h1[0] + side_v[0]);
    nu.vertex_nu[m.c2] = 0.5 * (side_h1[nt] + side_h2[0]);
    nu.vertex_nu[m.c3] = 0.5 * (side_h2[ns] + side_h3[nt]);
    nu.vertex_nu[m.c4] = 0.5 * (side_h3[0] + side_v[ns]);
    nu.nu_corner_spread = std::max(std::abs(side_h1[0] - side_v[0]),
                                   std::abs(side_h3[0] - side_v[ns]));

    const auto [mn, mx] = std::minmax_element(nu.face_nu.begin(), nu.face_nu.end());
    nu.min_nu = *mn;
    nu.max_nu = *mx;
    return nu;
}

PieceFunctionals piece_functionals(const DiskMesh& m, const NuField& nu) {
    PieceFunctionals fn;
    const int ns = m.ns, nt = m.nt;

    double ell = 0.0;
    fn.z2_profile.assign(ns + 1, 0.0);
    for (int i = 0; i < ns; ++i) {
        const double ds2 = m.s_beta2[i + 1] - m.s_beta2[i];
        const double na = nu.vertex_nu[m.idx(i, nt)], nb = nu.vertex_nu[m.idx(i + 1, nt)];
        ell += -0.5 * (na + nb) * ds2;
        const double nmid = 0.5 * (na + nb);
        fn.z2_profile[i + 1] =
            fn.z2_profile[i] + std::sqrt(std::max(0.0, 1.0 - nmid * nmid)) * ds2;
    }
    fn.ell = ell;

    double b1 = 0.0, b3 = 0.0;
    for (int j = 0; j < nt; ++j) {
        const double dt = m.t_profile[j + 1] - m.t_profile[j];
        b1 += -0.5 * (nu.vertex_nu[m.idx(0, j)] + nu.vertex_nu[m.idx(0, j + 1)]) * dt *
              m.tri.len_beta1;
        b3 += -0.5 * (nu.vertex_nu[m.idx(ns, j)] + nu.vertex_nu[m.idx(ns, j + 1)]) * dt *
              m.tri.len_beta3;
    }
    fn.len_beta = {b1, fn.ell, b3};

    fn.graph_min_area2 = std::numeric_limits<double>::infinity();
    fn.graph_ok = true;
    for (size_t f = 0; f < m.faces.size(); ++f) {
        if (m.face_fan[f]) continue;
        const auto& fc = m.faces[f];
        const Eigen::Vector2d e1 = m.xy[fc[1]] - m.xy[fc[0]];
        const Eigen::Vector2d e2 = m.xy[fc[2]] - m.xy[fc[0]];
        const double a2 = e1.x() * e2.y() - e1.y() * e2.x();
        fn.graph_min_area2 = std::min(fn.graph_min_area2, a2);
        if (a2 <= 0.0) fn.graph_ok = false;
    }
    return fn;
}

RootFindResult find_ell_tilde(double H, int m, int k, const RootFindOptions& opts) {
    const int eps = epsilon_of(m, k);
    if (eps == 0) throw FlatCaseError("find_ell_tilde: flat case out of scope");
    if (k < 3) throw DomainError("find_ell_tilde: k >= 3 required");
    const double a = alpha(m, k);
    if (!(4.0 * H * H < a) || !(H > 0.0))
        throw DomainError("find_ell_tilde requires 0 < 4H^2 < alpha(m,k)");

    RootFindResult res;
    res.ell_target = ell_target(m, k);
    const double limit = ell_tilde_limit_regime(H, eps, k);
    const bool supercritical = 4.0 * H * H + eps > 0.0;

    struct Eval {
        DiskMesh mesh;
        NuField nu;
        PieceFunctionals fn;
    };
    auto evaluate = [&](double lt, int n) {
        Eval e;
        const BoundaryQuad bq = build_boundary(H, m, k, lt, 32);
        e.mesh = solve_plateau(bq, n, opts.solve);
        e.nu = angle_function(e.mesh);
        e.fn = piece_functionals(e.mesh, e.nu);
        if (!e.fn.graph_ok)
            throw SolveError("find_ell_tilde: flipped projected face at ell_tilde = " +
                             std::to_string(lt));
        res.history.push_back({lt, e.fn.ell, n});
        return e;
    };

    double lo, hi;
    if (std::isfinite(limit)) {
        lo = opts.delta_frac * limit;
        hi = (1.0 - opts.delta_frac) * limit;
    } else {
        lo = 0.05 * res.ell_target;
        hi = 2.0 * res.ell_target;
    }

    Eval e_lo = evaluate(lo, opts.n_coarse);
    double f_lo = e_lo.fn.ell - res.ell_target;
    Eval e_hi = evaluate(hi, opts.n_coarse);
    double f_hi = e_hi.fn.ell - res.ell_target;
    while (!std::isfinite(limit) && f_hi < 0.0 && hi < 64.0 * res.ell_target) {
        hi *= 2.0;
        e_hi = evaluate(hi, opts.n_coarse);
        f_hi = e_hi.fn.ell - res.ell_target;
    }
    if (!(f_lo < 0.0 && f_hi > 0.0))
        throw SolveError("find_ell_tilde: no sign change in bracket: ell(" +
                         std::to_string(lo) + ") = " + std::to_string(e_lo.fn.ell) +
                         ", ell(" + std::to_string(hi) + ") = " + std::to_string(e_hi.fn.ell) +
                         " vs target " + std::to_string(res.ell_target) +
                         " (resolution too coarse or H out of range)");

    auto bisect_at = [&](int n, double& lo_, double& hi_) -> Eval {
        for (int it = 0; it < opts.max_bisect; ++it) {
            const double mid = 0.5 * (lo_ + hi_);
            Eval e = evaluate(mid, n);
            const double fm = e.fn.ell - res.ell_target;
            if (std::abs(fm) <= opts.tol) return e;
            (fm < 0.0 ? lo_ : hi_) = mid;
        }
        throw SolveError("find_ell_tilde: bisection did not reach tolerance " +
                         std::to_string(opts.tol));
    };

    // coarse phase narrows the bracket, final phase certifies at n_final
    double clo = lo, chi = hi;
    if (opts.n_coarse < opts.n_final) {
        for (int it = 0; it < opts.max_bisect; ++it) {
            const double mid = 0.5 * (clo + chi);
            Eval e = evaluate(mid, opts.n_coarse);
            const double fm = e.fn.ell - res.ell_target;
            if (std::abs(fm) <= 0.5 * opts.tol || (chi - clo) < 1e-4 * (hi - lo)) break;
            (fm < 0.0 ? clo : chi) = mid;
        }
        // re-establish the bracket signs at the final resolution
        Eval el = evaluate(clo, opts.n_final);
        const double flo = el.fn.ell - res.ell_target;
        if (std::abs(flo) <= opts.tol) {
            res.ell_tilde_star = clo;
            res.mesh = std::move(el.mesh);
            res.nu = std::move(el.nu);
            res.fn = std::move(el.fn);
        } else {
            Eval eh = evaluate(chi, opts.n_final);
            const double fhi = eh.fn.ell - res.ell_target;
            if (std::abs(fhi) <= opts.tol) {
                res.ell_tilde_star = chi;
                res.mesh = std::move(eh.mesh);
                res.nu = std::move(eh.nu);
                res.fn = std::move(eh.fn);
            } else {
                if (flo > 0.0) {
                    chi = clo;  // root left of the coarse bracket
                    clo = lo;
                } else if (fhi < 0.0) {
                    clo = chi;  // root right of the coarse bracket
                    chi = hi;
                }
                Eval e = bisect_at(opts.n_final, clo, chi);
                res.ell_tilde_star = res.history.back().ell_tilde;
                res.mesh = std::move(e.mesh);
                res.nu = std::move(e.nu);
                res.fn = std::move(e.fn);
            }
        }
    } else {
        Eval e = bisect_at(opts.n_final, clo, chi);
        res.ell_tilde_star = res.history.back().ell_tilde;
        res.mesh = std::move(e.mesh);
        res.nu = std::move(e.nu);
        res.fn = std::move(e.fn);
    }

    // supercritical monotone-trend guard over same-resolution samples
    if (supercritical) {
        std::vector<BisectSample> samples = res.history;
        std::sort(samples.begin(), samples.end(),
                  [](const BisectSample& a, const BisectSample& b) {
                      return a.ell_tilde < b.ell_tilde;
                  });
        for (size_t i = 0; i + 1 < samples.size(); ++i) {
            if (samples[i].n != samples[i + 1].n) continue;
            if (samples[i + 1].ell < samples[i].ell - 1e-4)
                throw SolveError("find_ell_tilde: ell(ell_tilde) monotonicity violated by " +
                                 std::to_string(samples[i].ell - samples[i + 1].ell));
        }
    }
    return res;
}

double gradient_fd_check(const DiskMesh& mesh, int n_samples, unsigned seed) {
    DiskMesh m = mesh;
    std::vector<int> dof(m.n_vertices(), -1);
    int ndof = 0;
    for (int v = 0; v < m.n_vertices(); ++v)
        if (!m.is_boundary(v)) dof[v] = ndof++;

    std::mt19937_64 rng(seed);
    // perturb off the minimizer so gradients are O(1) and relative error is meaningful
    const auto [zmin, zmax] = std::minmax_element(m.z.begin(), m.z.end());
    const double amp = 0.05 * (*zmax - *zmin + 0.1);
    std::uniform_real_distribution<double> unif(-amp, amp);
    for (int v = 0; v < m.n_vertices(); ++v)
        if (dof[v] >= 0) m.z[v] += unif(rng);

    Eigen::VectorXd grad(ndof);
    grad.setZero();
    area_and_derivs(m, dof, &grad, nullptr);

    std::uniform_int_distribution<int> pick(0, m.n_vertices() - 1);
    const double h = 1e-6;
    double worst = 0.0;
    int done = 0;
    while (done < n_samples) {
        const int v = pick(rng);
        if (dof[v] < 0) continue;
        const double z0 = m.z[v];
        m.z[v] = z0 + h;
        const double ap = area_and_derivs(m, dof, nullptr, nullptr);
        m.z[v] = z0 - h;
        const double am = area_and_derivs(m, dof, nullptr, nullptr);
        m.z[v] = z0;
        const double fd = (ap - am) / (2.0 * h);
        const double an = grad[dof[v]];
        worst = std::max(worst, std::abs(fd - an) / std::max(1e-8, std::abs(an) + std::abs(fd)));
        ++done;
    }
    return worst;
}

double stationarity_probe(const DiskMesh& mesh, int n_probes, double delta, unsigned seed) {
    DiskMesh m = mesh;
    std::vector<int> dof(m.n_vertices(), -1);
    int ndof = 0;
    for (int v = 0; v < m.n_vertices(); ++v)
        if (!m.is_boundary(v)) dof[v] = ndof++;
    const double a0 = area_and_derivs(m, dof, nullptr, nullptr);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::vector<double> z0 = m.z;
    double worst = std::numeric_limits<double>::infinity();
    for (int p = 0; p < n_probes; ++p) {
        Eigen::VectorXd u(ndof);
        for (int i = 0; i < ndof; ++i) u[i] = gauss(rng);
        u.normalize();
        for (int v = 0; v < m.n_vertices(); ++v)
            if (dof[v] >= 0) m.z[v] = z0[v] + delta * u[dof[v]];
        worst = std::min(worst, area_and_derivs(m, dof, nullptr, nullptr) - a0);
        m.z = z0;
    }
    return worst;
}

}  // namespace cmc
