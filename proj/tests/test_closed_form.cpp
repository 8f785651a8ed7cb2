#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "cmc/closed_form.hpp"
#include "cmc/errors.hpp"

using namespace cmc;

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

TEST_CASE("epsilon_of matches the sign of 1/k + 1/m - 1/2") {
    CHECK(epsilon_of(2, 3) == 1);
    CHECK(epsilon_of(4, 4) == 0);
    CHECK(epsilon_of(3, 6) == 0);
    CHECK(epsilon_of(6, 3) == 0);
    CHECK(epsilon_of(4, 6) == -1);
    CHECK(epsilon_of(7, 3) == -1);
    CHECK(epsilon_of(3, 3) == 1);
    CHECK_THROWS_AS(epsilon_of(1, 3), DomainError);
    CHECK_THROWS_AS(epsilon_of(3, 1), DomainError);
    CHECK_THROWS_AS(epsilon_of(2, 2), DomainError);
}

TEST_CASE("alpha reproduces Table 1 exactly") {
    CHECK(alpha(3, 3) == doctest::Approx(2.0 + std::sqrt(3.0)).epsilon(1e-12));
    CHECK(alpha(4, 3) == doctest::Approx(5.0 + 2.0 * std::sqrt(6.0)).epsilon(1e-12));
    CHECK(alpha(3, 4) == doctest::Approx(3.0 + 2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(alpha(5, 3) ==
          doctest::Approx(8.0 + 4.0 * std::sqrt(3.0) + 3.0 * std::sqrt(5.0) +
                          2.0 * std::sqrt(15.0))
              .epsilon(1e-12));
    CHECK(alpha(3, 5) ==
          doctest::Approx(4.0 + std::sqrt(5.0) + 2.0 * std::sqrt(5.0 + 2.0 * std::sqrt(5.0)))
              .epsilon(1e-12));
    // beach ball: exactly 1 for every k
    for (int k = 3; k <= 40; ++k) CHECK(alpha(2, k) == 1.0);
    // degenerated: cot^2(pi/(2+2g))
    for (int g = 2; g <= 6; ++g) {
        const double c = 1.0 / std::tan(kPi / (2.0 + 2.0 * g));
        CHECK(alpha(g + 1, 2) == doctest::Approx(c * c).epsilon(1e-12));
    }
    CHECK(std::isinf(alpha(4, 4)));
    CHECK(std::isinf(alpha(3, 6)));
}

TEST_CASE("ell_target") {
    for (int g = 2; g <= 6; ++g) CHECK(ell_target(2, g + 1) == kPi / 2.0);
    CHECK(ell_target(4, 3) == doctest::Approx(0.61547970867038734107).epsilon(1e-14));
    CHECK(ell_target(4, 6) == doctest::Approx(0.88137358701954302523).epsilon(1e-14));
    CHECK(ell_target(3, 3) == doctest::Approx(0.95531661812450927816).epsilon(1e-14));
    CHECK_THROWS_AS(ell_target(4, 4), FlatCaseError);
}

TEST_CASE("ell_tilde_limit per regime") {
    // critical
    CHECK(std::isinf(ell_tilde_limit_regime(0.5, -1, 3)));
    // supercritical: diameter of S^2(4H^2+eps)
    CHECK(ell_tilde_limit_regime(0.5, 1, 3) == doctest::Approx(kPi / std::sqrt(2.0)).epsilon(1e-14));
    // subcritical branch, frozen oracle value
    CHECK(ell_tilde_limit_regime(0.3, -1, 3) ==
          doctest::Approx(0.68663268041756855712).epsilon(1e-14));
    CHECK(ell_tilde_limit(0.3, 7, 3) == doctest::Approx(0.68663268041756855712).epsilon(1e-14));
}

TEST_CASE("ell_limit_supercritical and sphere height") {
    CHECK(ell_limit_supercritical(0.5, 1) == doctest::Approx(kPi / 2.0).epsilon(1e-14));
    CHECK(ell_limit_supercritical(0.3, 1) ==
          doctest::Approx(2.0607536530486249276).epsilon(1e-14));
    CHECK(ell_limit_supercritical(0.8, -1) ==
          doctest::Approx(1.4663370687934270447).epsilon(1e-14));
    CHECK_THROWS_AS(ell_limit_supercritical(0.3, -1), RegimeError);

    // h(ell_limit) = 0 exactly
    for (double H : {0.2, 0.3, 0.48, 0.5, 0.9}) {
        CHECK(sphere_height(H, 1, ell_limit_supercritical(H, 1)) == 0.0);
    }
    CHECK(sphere_height(0.8, -1, ell_limit_supercritical(0.8, -1)) == 0.0);
    // apex heights (oracle)
    CHECK(sphere_height(0.3, 1, 0.0) == doctest::Approx(1.3210148386352818241).epsilon(1e-13));
    CHECK(sphere_height(0.5, 1, 0.0) == doctest::Approx(1.2464504802804610268).epsilon(1e-13));
    CHECK(sphere_height(0.8, -1, 0.0) == doctest::Approx(1.7297210551168840567).epsilon(1e-13));
    CHECK(sphere_height(0.5, 1, kPi / 2.0) == 0.0);

    // strictly decreasing on (0, ell_limit)
    const double rl = ell_limit_supercritical(0.3, 1);
    double prev = sphere_height(0.3, 1, 0.0);
    for (int i = 1; i <= 50; ++i) {
        const double h = sphere_height(0.3, 1, rl * i / 50.0);
        CHECK(h < prev);
        prev = h;
    }
    CHECK_THROWS_AS(sphere_height(0.3, 1, rl * 1.01), RangeError);
    CHECK_THROWS_AS(sphere_height(0.3, -1, 0.1), RegimeError);
}

TEST_CASE("barrier bound and umbrella integral agree (Lemma identity)") {
    // frozen oracle values
    CHECK(barrier_lower_bound(0.3, 3) == doctest::Approx(0.68200337815136767725).epsilon(1e-13));
    CHECK(umbrella_angle_integral(0.3, 3) ==
          doctest::Approx(0.68200337815136767725).epsilon(1e-10));
    CHECK(barrier_lower_bound(0.1, 4) == doctest::Approx(0.89842603722779310865).epsilon(1e-13));
    // limit H -> 0+
    CHECK(barrier_lower_bound(1e-9, 3) ==
          doctest::Approx(0.5493061443340548457).epsilon(1e-9));
    CHECK_THROWS_AS(barrier_lower_bound(0.5, 3), RegimeError);
    CHECK_THROWS_AS(umbrella_angle_integral(0.6, 3), RegimeError);

    // identity on a grid, 1e-8
    for (double H = 0.05; H < 0.46; H += 0.05)
        for (int k = 3; k <= 8; ++k)
            CHECK(std::abs(umbrella_angle_integral(H, k) - barrier_lower_bound(H, k)) < 1e-8);

    // second inequality: barrier > ell_target for subcritical (m,k)
    for (int k = 3; k <= 8; ++k)
        for (int m = 2; m <= 12; ++m) {
            if (epsilon_of(m, k) != -1) continue;
            for (double H = 0.05; H < 0.46; H += 0.05)
                CHECK(barrier_lower_bound(H, k) > ell_target(m, k));
        }
}

TEST_CASE("piece curvature") {
    CHECK(piece_curvature(3) == doctest::Approx(-kPi / 6.0).epsilon(1e-15));
    CHECK(piece_curvature(2) == 0.0);
    CHECK(piece_curvature(6) == doctest::Approx(-kPi / 3.0).epsilon(1e-15));
}

TEST_CASE("genus and piece counts") {
    CHECK(genus(4, 3).genus == 5);
    CHECK(genus(3, 3).genus == 3);
    CHECK(genus(3, 4).genus == 7);
    CHECK(genus(5, 3).genus == 11);
    CHECK(genus(3, 5).genus == 19);
    for (int g = 2; g <= 6; ++g) {
        const auto gi = genus(2, g + 1);
        CHECK(gi.genus == g);
        CHECK(gi.n_pieces == 8 * (g + 1));
        CHECK(gi.n_triangles == 4 * (g + 1));
        CHECK(genus(g + 1, 2).genus == 1);
    }
    CHECK(genus(3, 3).n_pieces == 48);
    CHECK_THROWS_AS(genus(4, 6), RegimeError);
    CHECK_THROWS_AS(genus(4, 4), RegimeError);
}

TEST_CASE("nonorientable genus") {
    CHECK(nonorientable_genus(3) == 4);
    CHECK(nonorientable_genus(5) == 6);
    CHECK_THROWS_AS(nonorientable_genus(4), DomainError);
    // cross-check 2 - chi with chi = 2 - 2n
    for (std::int64_t n = 2; n <= 6; ++n) {
        const std::int64_t g = 2 * n - 1;
        CHECK(nonorientable_genus(g) == 2 - (2 - 2 * n));
    }
}

TEST_CASE("Lemma 3.3 sign equivalence on a grid") {
    // sign(ell_target - ell_limit) == sign(4H^2 - alpha) over eps=1 rows
    int points = 0;
    const int mks[][2] = {{2, 3}, {2, 4}, {2, 5}, {2, 6}, {2, 7},
                          {3, 3}, {4, 3}, {3, 4}, {5, 3}, {3, 5}};
    for (const auto& mk : mks) {
        const double a = alpha(mk[0], mk[1]);
        const double lt = ell_target(mk[0], mk[1]);
        for (int i = 1; i <= 25; ++i) {
            const double h2 = a * (0.06 * i);  // spans (0, 1.5 alpha)
            const double H = 0.5 * std::sqrt(h2);
            const double ll = ell_limit_supercritical(H, 1);
            const double s1 = lt - ll, s2 = 4.0 * H * H - a;
            CHECK(((s1 < 0 && s2 < 0) || (s1 > 0 && s2 > 0) ||
                   (std::abs(s1) < 1e-12 && std::abs(s2) < 1e-12)));
            ++points;
        }
    }
    CHECK(points >= 200);
}

TEST_CASE("regime params and tessellation params") {
    const auto rp = regime_params(0.3, 2, 4);
    CHECK(rp.epsilon == 1);
    CHECK(rp.regime == Regime::Supercritical);
    CHECK(rp.kappa == doctest::Approx(1.36));
    const auto rc = regime_params(0.5, 4, 6);
    CHECK(rc.regime == Regime::Critical);
    CHECK(std::isinf(rc.ell_tilde_limit));
    const auto rs = regime_params(0.3, 4, 6);
    CHECK(rs.regime == Regime::Subcritical);

    const auto tp = tessellation_params(4, 3);
    CHECK(tp.genus == 5);
    CHECK(tp.n_triangles == 48);
    CHECK(tp.n_pieces == 96);
    const auto tf = tessellation_params(4, 4);
    CHECK(std::isinf(tf.alpha));
    CHECK(std::isnan(tf.ell_target));
}
