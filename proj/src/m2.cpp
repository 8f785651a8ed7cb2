#include "cmc/m2.hpp"

#include <algorithm>
#include <cmath>

#include "cmc/errors.hpp"

namespace cmc {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;

inline Vec3 lorentz_flip(const Vec3& v) { return {v.x(), v.y(), -v.z()}; }
}  // namespace

M2::M2(double kappa) : kappa_(kappa) {
    R_ = kappa == 0.0 ? 1.0 : 1.0 / std::sqrt(std::abs(kappa));
}

double M2::inner(const Vec3& a, const Vec3& b) const {
    if (spherical()) return a.dot(b);
    if (flat()) return a.x() * b.x() + a.y() * b.y();
    return a.x() * b.x() + a.y() * b.y() - a.z() * b.z();
}

Vec3 M2::normalize(const Vec3& p) const {
    if (spherical()) return p.normalized();
    if (flat()) {
        if (p.z() == 0.0) throw DomainError("flat model point must have z != 0");
        return p / p.z();
    }
    const double q = -inner(p, p);
    if (!(q > 0.0)) throw DomainError("point is not on the hyperboloid model");
    Vec3 u = p / std::sqrt(q);
    if (u.z() < 0.0) u = -u;
    return u;
}

double M2::dist(const Vec3& p, const Vec3& q) const {
    if (spherical()) {
        const double c = std::clamp(p.dot(q), -1.0, 1.0);
        return R_ * std::atan2(p.cross(q).norm(), c);
    }
    if (flat()) return (q - p).head<2>().norm();
    const double c = std::max(1.0, -inner(p, q));
    return R_ * std::acosh(c);
}

Vec3 M2::log_dir(const Vec3& p, const Vec3& q) const {
    if (flat()) {
        Vec3 d = q - p;
        d.z() = 0.0;
        const double n = d.norm();
        if (n < 1e-15) throw DomainError("log_dir: coincident points");
        return d / n;
    }
    const double du = dist(p, q) / R_;
    if (du < 1e-14) throw DomainError("log_dir: coincident points");
    if (spherical() && du > kPi - 1e-9)
        throw DomainError("log_dir: antipodal pair, geodesic not unique");
    Vec3 w;
    if (spherical()) {
        w = (q - std::cos(du) * p) / std::sin(du);
        w -= p.dot(w) * p;
    } else {
        w = (q - std::cosh(du) * p) / std::sinh(du);
        w -= -inner(p, w) * p;  // remove the timelike component
    }
    return w / std::sqrt(std::max(1e-300, inner(w, w)));
}

Vec3 M2::exp(const Vec3& p, const Vec3& dir, double s) const {
    if (flat()) return p + s * dir;
    const double t = s / R_;
    if (spherical()) return (std::cos(t) * p + std::sin(t) * dir).normalized();
    return normalize(std::cosh(t) * p + std::sinh(t) * dir);
}

Vec3 M2::interpolate(const Vec3& p, const Vec3& q, double t) const {
    if (flat()) return p + t * (q - p);
    const double du = dist(p, q) / R_;
    if (du < 1e-14) return p;
    if (spherical()) {
        if (du > kPi - 1e-9)
            throw DomainError("interpolate: antipodal pair, geodesic not unique");
        return ((std::sin((1.0 - t) * du) * p + std::sin(t * du) * q) / std::sin(du))
            .normalized();
    }
    return normalize((std::sinh((1.0 - t) * du) * p + std::sinh(t * du) * q) /
                     std::sinh(du));
}

double M2::angle(const Vec3& at, const Vec3& p, const Vec3& q) const {
    const Vec3 u = log_dir(at, p), v = log_dir(at, q);
    return std::acos(std::clamp(inner(u, v), -1.0, 1.0));
}

Vec3 M2::rotate_tangent(const Vec3& p, const Vec3& dir, double ang) const {
    Vec3 j;
    if (spherical())
        j = p.cross(dir);
    else if (flat())
        j = Vec3(-dir.y(), dir.x(), 0.0);
    else
        j = lorentz_flip(p.cross(dir));
    return std::cos(ang) * dir + std::sin(ang) * j;
}

Mat3 M2::reflection(const Vec3& p, const Vec3& q) const {
    if (spherical()) {
        const Vec3 n = p.cross(q).normalized();
        return Mat3::Identity() - 2.0 * n * n.transpose();
    }
    if (flat()) {
        const Vec3 d = log_dir(p, q);
        const Eigen::Vector2d n(-d.y(), d.x());
        const Eigen::Vector2d p2 = p.head<2>();
        Mat3 M = Mat3::Identity();
        M.topLeftCorner<2, 2>() -= 2.0 * n * n.transpose();
        M.topRightCorner<2, 1>() = 2.0 * (n.dot(p2)) * n;
        return M;
    }
    Vec3 n = lorentz_flip(p.cross(q));
    const double nn = inner(n, n);
    if (!(nn > 0.0)) throw DomainError("reflection: degenerate geodesic");
    n /= std::sqrt(nn);
    Mat3 eta = Mat3::Identity();
    eta(2, 2) = -1.0;
    return Mat3::Identity() - 2.0 * n * (eta * n).transpose();
}

Mat3 M2::align(const Vec3& p, const Vec3& u, const Vec3& q, const Vec3& v) const {
    if (flat()) {
        // rotation taking u to v, then translation p -> q
        Mat3 M = Mat3::Identity();
        const double c = u.x() * v.x() + u.y() * v.y();
        const double s = u.x() * v.y() - u.y() * v.x();
        M(0, 0) = c; M(0, 1) = -s;
        M(1, 0) = s; M(1, 1) = c;
        const Eigen::Vector2d t = q.head<2>() - M.topLeftCorner<2, 2>() * p.head<2>();
        M.topRightCorner<2, 1>() = t;
        return M;
    }
    auto frame = [&](const Vec3& pt, const Vec3& d) {
        Mat3 F;
        F.col(0) = d;
        F.col(1) = spherical() ? Vec3(pt.cross(d)) : Vec3(lorentz_flip(pt.cross(d)));
        F.col(2) = pt;
        return F;
    };
    const Mat3 Fp = frame(p, u), Fq = frame(q, v);
    if (spherical()) return Fq * Fp.transpose();
    Mat3 eta = Mat3::Identity();
    eta(2, 2) = -1.0;
    return Fq * (eta * Fp.transpose() * eta);
}

Vec3 M2::apply(const Mat3& M, const Vec3& p) const { return normalize(M * p); }

double M2::side(const Vec3& p, const Vec3& q, const Vec3& x) const {
    return p.cross(q).dot(x);
}

M2::RightTriangle M2::solve_right_triangle(double angleB, double a) const {
    if (!(a > 0.0)) throw DomainError("right triangle: side a must be positive");
    if (!(angleB > 0.0 && angleB < kPi / 2.0))
        throw DomainError("right triangle: angle B must lie in (0, pi/2)");
    RightTriangle out;
    if (flat()) {
        out.b = a * std::tan(angleB);
        out.c = std::hypot(a, out.b);
        out.angleA = kPi / 2.0 - angleB;
        return out;
    }
    const double au = a / R_;
    if (spherical()) {
        if (au >= kPi)
            throw RangeError("right triangle: side exceeds the diameter of S^2(kappa)");
        const double bu = std::atan(std::tan(angleB) * std::sin(au));
        const double cu = std::acos(std::clamp(std::cos(au) * std::cos(bu), -1.0, 1.0));
        out.b = bu * R_;
        out.c = cu * R_;
        out.angleA = std::acos(std::clamp(std::sin(angleB) * std::cos(au), -1.0, 1.0));
        return out;
    }
    const double t = std::tan(angleB) * std::sinh(au);
    if (t >= 1.0)
        throw RangeError("right triangle: side exceeds the ideal limit in H^2(kappa)");
    const double bu = std::atanh(t);
    const double cu = std::acosh(std::cosh(au) * std::cosh(bu));
    out.b = bu * R_;
    out.c = cu * R_;
    out.angleA = std::acos(std::clamp(std::sin(angleB) * std::cosh(au), -1.0, 1.0));
    return out;
}

double M2::law_of_cosines_residual(double a, double b, double c, double A) const {
    if (flat())
        return std::abs(a - std::sqrt(std::max(0.0, b * b + c * c - 2 * b * c * std::cos(A))));
    const double au = a / R_, bu = b / R_, cu = c / R_;
    if (spherical())
        return std::abs(std::cos(au) - (std::cos(bu) * std::cos(cu) +
                                        std::sin(bu) * std::sin(cu) * std::cos(A)));
    return std::abs(std::cosh(au) - (std::cosh(bu) * std::cosh(cu) -
                                     std::sinh(bu) * std::sinh(cu) * std::cos(A)));
}

double M2::triangle_area(double A, double B, double C) const {
    if (flat()) throw DomainError("triangle_area from angles needs kappa != 0");
    return (A + B + C - kPi) / kappa_;
}

}  // namespace cmc
