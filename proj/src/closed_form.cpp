#include "cmc/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cmc/errors.hpp"

namespace cmc {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_mk(int m, int k) {
    if (m < 2 || k < 2)
        throw DomainError("(m,k) must both be >= 2, got (" + std::to_string(m) + "," +
                          std::to_string(k) + ")");
    if (m == 2 && k == 2) throw DomainError("(m,k) = (2,2) is excluded");
}

void check_H(double H) {
    if (!(H > 0.0)) throw DomainError("H must be positive");
}

// Minimal exact fraction, just enough for the Euler characteristic identity.
struct Frac {
    std::int64_t num = 0, den = 1;
    static Frac make(std::int64_t n, std::int64_t d) {
        if (d < 0) { n = -n; d = -d; }
        const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
        return {g ? n / g : n, g ? d / g : d};
    }
    Frac operator+(Frac o) const { return make(num * o.den + o.num * den, den * o.den); }
    Frac operator-(Frac o) const { return make(num * o.den - o.num * den, den * o.den); }
    Frac operator*(Frac o) const { return make(num * o.num, den * o.den); }
    Frac operator/(Frac o) const { return make(num * o.den, den * o.num); }
    bool is_integer() const { return den == 1; }
};

// Adaptive Simpson on [a,b], absolute tolerance tol.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, int depth, double fa,
                        double fm, double fb, double whole, double* err_acc) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double err = (left + right - whole) / 15.0;
    if (depth <= 0) throw QuadratureError("adaptive quadrature: max depth reached, est err " +
                                          std::to_string(std::abs(err)));
    if (std::abs(err) <= tol) {
        if (err_acc) *err_acc += std::abs(err);
        return left + right + err;
    }
    return adaptive_simpson(f, a, m, 0.5 * tol, depth - 1, fa, flm, fm, left, err_acc) +
           adaptive_simpson(f, m, b, 0.5 * tol, depth - 1, fm, frm, fb, right, err_acc);
}

template <class F>
double integrate(const F& f, double a, double b, double tol, double* err_acc) {
    if (b <= a) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, tol, 60, fa, fm, fb, whole, err_acc);
}

}  // namespace

double cos_pi_over(int n) { return n == 2 ? 0.0 : std::cos(kPi / n); }
double sin_pi_over(int n) { return n == 2 ? 1.0 : std::sin(kPi / n); }

int epsilon_of(int m, int k) {
    check_mk(m, k);
    // sign(1/k + 1/m - 1/2) = sign(2m + 2k - mk)
    const std::int64_t s = 2LL * m + 2LL * k - 1LL * m * k;
    return (s > 0) - (s < 0);
}

double alpha(int m, int k) {
    const int eps = epsilon_of(m, k);
    if (eps == 0) return kInf;
    const double s = sin_pi_over(k), c = cos_pi_over(m);
    return (s + c) / (eps * (s - c));
}

double ell_target(int m, int k) {
    const int eps = epsilon_of(m, k);
    if (eps == 0)
        throw FlatCaseError("ell_target: flat case (epsilon = 0) has no length scale");
    const double q = cos_pi_over(m) / sin_pi_over(k);
    return eps == 1 ? std::acos(q) : std::acosh(q);
}

Regime regime_of(double H, int epsilon) {
    check_H(H);
    if (epsilon != 1 && epsilon != -1 && epsilon != 0)
        throw DomainError("epsilon must be in {-1,0,1}");
    const double kappa = 4.0 * H * H + epsilon;
    if (kappa > 0.0) return Regime::Supercritical;
    if (kappa == 0.0) return Regime::Critical;
    return Regime::Subcritical;
}

double ell_tilde_limit_regime(double H, int epsilon, int k) {
    const double kappa = 4.0 * H * H + epsilon;
    switch (regime_of(H, epsilon)) {
        case Regime::Supercritical: return kPi / std::sqrt(kappa);
        case Regime::Critical: return kInf;
        case Regime::Subcritical:
            if (k < 2) throw DomainError("k must be >= 2");
            return std::atanh(cos_pi_over(k)) / std::sqrt(-kappa);
    }
    return kNaN;  // unreachable
}

double ell_tilde_limit(double H, int m, int k) {
    return ell_tilde_limit_regime(H, epsilon_of(m, k), k);
}

double ell_limit_supercritical(double H, int epsilon) {
    check_H(H);
    if (epsilon != 1 && epsilon != -1)
        throw FlatCaseError("ell_limit: epsilon must be +-1");
    if (regime_of(H, epsilon) != Regime::Supercritical)
        throw RegimeError("ell_limit is defined in closed form only in the supercritical regime");
    return epsilon == 1 ? 2.0 * std::atan(1.0 / (2.0 * H))
                        : 2.0 * std::atanh(1.0 / (2.0 * H));
}

double sphere_height(double H, int epsilon, double r) {
    const double rlim = ell_limit_supercritical(H, epsilon);
    if (r < -1e-12 || r > rlim * (1.0 + 1e-9) + 1e-12)
        throw RangeError("sphere_height: r outside [0, ell_limit]");
    if (r >= rlim) return 0.0;  // exact zero at the bigraph radius
    if (epsilon == 1) {
        const double c = std::sqrt(4.0 * H * H + 1.0);
        const double u = std::max(1.0, (c / (2.0 * H)) * std::cos(0.5 * r));
        return (4.0 * H / c) * std::acosh(u);
    }
    const double c = std::sqrt(4.0 * H * H - 1.0);
    const double u = std::clamp((c / (2.0 * H)) * std::cosh(0.5 * r), -1.0, 1.0);
    return (4.0 * H / c) * std::acos(u);
}

double barrier_lower_bound(double H, int k) {
    check_H(H);
    if (k < 2) throw DomainError("k must be >= 2");
    if (!(4.0 * H * H < 1.0))
        throw RegimeError("barrier_lower_bound requires the subcritical regime (4H^2 < 1)");
    const double s = sin_pi_over(k), h2 = 4.0 * H * H;
    return std::acosh((1.0 - h2 * s) / ((1.0 - h2) * s));
}

double umbrella_angle_integral(double H, int k, double* abs_err) {
    check_H(H);
    if (k < 2) throw DomainError("k must be >= 2");
    if (!(4.0 * H * H < 1.0))
        throw RegimeError("umbrella_angle_integral requires the subcritical regime");
    const double h2 = 4.0 * H * H;
    const double s = std::sqrt(1.0 - h2);
    const double upper = std::atanh(cos_pi_over(k)) / s;
    const auto integrand = [&](double t) {
        return std::sqrt(2.0 - 2.0 * h2) * std::cosh(0.5 * s * t) /
               std::sqrt(std::cosh(s * t) + 1.0 - 2.0 * h2);
    };
    double err = 0.0;
    const double value = integrate(integrand, 0.0, upper, 1e-12, &err);
    if (abs_err) *abs_err = err;
    if (!(err < 1e-10))
        throw QuadratureError("umbrella_angle_integral: achieved error " + std::to_string(err));
    return value;
}

double piece_curvature(int k) {
    if (k < 2) throw DomainError("k must be >= 2");
    return kPi / k - kPi / 2.0;
}

GenusInfo genus(int m, int k) {
    if (epsilon_of(m, k) != 1)
        throw RegimeError("genus: compact surfaces require epsilon = 1");
    // 1/m + 1/k - 1/2 = (2k + 2m - mk) / (2mk) > 0 here.
    const Frac excess = Frac::make(2LL * k + 2LL * m - 1LL * m * k, 2LL * m * k);
    const Frac g = Frac::make(1, 1) - Frac::make(2 - k, k) / excess;  // 1 - 2(1/k-1/2)/excess
    const Frac pieces = Frac::make(8, 1) / excess;
    if (!g.is_integer() || !pieces.is_integer())
        throw DomainError("genus: non-integer result for (m,k)");
    GenusInfo out;
    out.genus = g.num;
    out.n_pieces = pieces.num;
    out.n_triangles = pieces.num / 2;
    // chi consistency: n_pieces * (1/k - 1/2) / 2 == 2 - 2g, exactly.
    const Frac chi = Frac::make(out.n_pieces, 2) * Frac::make(2 - k, 2 * k);
    if (!(chi.is_integer() && chi.num == 2 - 2 * out.genus))
        throw DomainError("genus: Euler characteristic identity failed");
    return out;
}

std::int64_t nonorientable_genus(std::int64_t g) {
    if (g < 3 || g % 2 == 0)
        throw DomainError("nonorientable_genus requires odd g = 2n-1, n >= 2");
    return g + 1;  // 2n
}

RegimeParams regime_params(double H, int m, int k) {
    const int eps = epsilon_of(m, k);
    if (eps == 0) throw FlatCaseError("regime_params: flat case is out of scope");
    RegimeParams rp;
    rp.H = H;
    rp.epsilon = eps;
    rp.kappa = 4.0 * H * H + eps;
    rp.regime = regime_of(H, eps);
    rp.ell_tilde_limit = ell_tilde_limit_regime(H, eps, k);
    rp.ell_limit = rp.regime == Regime::Supercritical ? ell_limit_supercritical(H, eps) : kNaN;
    return rp;
}

TessellationParams tessellation_params(int m, int k) {
    TessellationParams tp;
    tp.m = m;
    tp.k = k;
    tp.epsilon = epsilon_of(m, k);
    tp.alpha = alpha(m, k);
    tp.ell_target = tp.epsilon == 0 ? kNaN : ell_target(m, k);
    if (tp.epsilon == 1) {
        const GenusInfo gi = genus(m, k);
        tp.genus = gi.genus;
        tp.n_triangles = gi.n_triangles;
        tp.n_pieces = gi.n_pieces;
    }
    return tp;
}

}  // namespace cmc
