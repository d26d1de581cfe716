#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "snsmart/errors.hpp"
#include "snsmart/numerics.hpp"

using namespace snsmart;

namespace {
bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }
} // namespace

TEST_CASE("log_gamma matches closed forms and the recurrence") {
    CHECK(close(log_gamma(1.0), 0.0, 1e-15));
    CHECK(close(log_gamma(2.0), 0.0, 1e-15));
    CHECK(close(log_gamma(0.5), 0.5 * std::log(M_PI), 1e-14));
    CHECK(close(log_gamma(10.0), std::log(362880.0), 1e-12));
    // Gamma(x+1) = x Gamma(x) across scales, including the small-x branch.
    for (double x : {1e-3, 0.04, 0.3, 0.7, 1.5, 3.25, 12.0, 90.5, 4000.0}) {
        const double lhs = log_gamma(x + 1.0);
        const double rhs = log_gamma(x) + std::log(x);
        CHECK(close(lhs, rhs, 1e-12 * std::max(1.0, std::fabs(rhs))));
    }
    // Cross-check against the C library implementation.
    for (double x = 0.05; x < 50.0; x += 0.377) {
        CHECK(close(log_gamma(x), std::lgamma(x),
                    1e-13 * std::max(1.0, std::fabs(std::lgamma(x)))));
    }
    CHECK_THROWS_AS(log_gamma(0.0), DomainError);
    CHECK_THROWS_AS(log_gamma(-1.5), DomainError);
}

TEST_CASE("log_beta known values and symmetry") {
    CHECK(close(log_beta(1.0, 1.0), 0.0, 1e-15));
    CHECK(close(log_beta(2.0, 2.0), std::log(1.0 / 6.0), 1e-12));
    CHECK(close(log_beta(5.0, 6.0), std::log(1.0 / 1260.0), 1e-12));
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> shape(0.1, 40.0);
    for (int i = 0; i < 200; ++i) {
        const double a = shape(gen);
        const double b = shape(gen);
        CHECK(log_beta(a, b) == log_beta(b, a));
    }
    CHECK_THROWS_AS(log_beta(0.0, 1.0), DomainError);
}

TEST_CASE("beta moments, pdf, cdf") {
    CHECK(beta_mean({2.0, 3.0}) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(beta_sd({2.0, 3.0}) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(close(beta_cdf({1.0, 1.0}, 0.3), 0.3, 1e-14));
    CHECK(close(beta_cdf({2.0, 2.0}, 0.5), 0.5, 1e-13));
    // Beta(2,2) cdf is 3x^2 - 2x^3.
    CHECK(close(beta_cdf({2.0, 2.0}, 0.25), 0.15625, 1e-13));
    CHECK(beta_cdf({3.0, 7.0}, 0.0) == 0.0);
    CHECK(beta_cdf({3.0, 7.0}, 1.0) == 1.0);
    // cdf equals the integral of the pdf: int_0^c pdf = c int_0^1 pdf(c u) du.
    for (const BetaParams p : {BetaParams{2.5, 3.5}, BetaParams{0.7, 1.9},
                               BetaParams{8.0, 2.0}}) {
        for (double c : {0.11, 0.37, 0.62, 0.93}) {
            const double by_quad = c * quad_01(
                [&](double u) { return std::exp(beta_log_pdf(p, c * u)); },
                1e-12);
            CHECK(close(beta_cdf(p, c), by_quad, 1e-10));
        }
    }
    CHECK_THROWS_AS(beta_cdf({2.0, 2.0}, 1.5), DomainError);
    CHECK_THROWS_AS(beta_log_pdf({2.0, 2.0}, 0.0), DomainError);
}

TEST_CASE("beta_quantile inverts beta_cdf") {
    const BetaParams shapes[] = {{1.0, 1.0}, {2.0, 5.0}, {0.5, 0.5}, {30.0, 70.0}};
    const double probs[] = {0.001, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999};
    for (const auto& p : shapes) {
        for (double q : probs) {
            const double x = beta_quantile(p, q);
            CHECK(x > 0.0);
            CHECK(x < 1.0);
            CHECK(close(beta_cdf(p, x), q, 1e-10));
        }
    }
    CHECK(beta_quantile({3.0, 4.0}, 0.0) == 0.0);
    CHECK(beta_quantile({3.0, 4.0}, 1.0) == 1.0);
    CHECK_THROWS_AS(beta_quantile({2.0, 2.0}, -0.1), DomainError);
}

TEST_CASE("hypergeometric log pmf values and domain") {
    // C(10,3) C(10,7) / C(20,10) = 14400 / 184756.
    CHECK(close(log_hypergeom_pmf(3, 20, 10, 10),
                std::log(14400.0 / 184756.0), 1e-12));
    CHECK(close(log_hypergeom_pmf(0, 20, 10, 10), std::log(1.0 / 184756.0),
                1e-12));
    // Degenerate draws: a single support point with probability one.
    CHECK(log_hypergeom_pmf(0, 10, 0, 5) == 0.0);
    CHECK(log_hypergeom_pmf(5, 10, 10, 5) == 0.0);
    CHECK(log_hypergeom_pmf(0, 10, 4, 0) == 0.0);
    CHECK_THROWS_AS(log_hypergeom_pmf(6, 20, 5, 10), DomainError);
    CHECK_THROWS_AS(log_hypergeom_pmf(-1, 20, 5, 10), DomainError);
    CHECK_THROWS_AS(log_hypergeom_pmf(0, 20, 25, 10), DomainError);
}

TEST_CASE("hypergeometric pmf sums to one over the support") {
    // Exhaustive over small populations, randomized over larger ones.
    for (long long total = 0; total <= 80; ++total) {
        for (long long succ = 0; succ <= total; ++succ) {
            for (long long draws = 0; draws <= total; draws += 3) {
                const long long lo = std::max(0LL, draws - (total - succ));
                const long long hi = std::min(draws, succ);
                double sum = 0.0;
                for (long long x = lo; x <= hi; ++x) {
                    sum += std::exp(log_hypergeom_pmf(x, total, succ, draws));
                }
                CHECK(close(sum, 1.0, 1e-11));
            }
        }
    }
    std::mt19937_64 gen(7);
    for (int i = 0; i < 400; ++i) {
        const long long total = 81 + static_cast<long long>(gen() % 120);
        const long long succ = static_cast<long long>(gen() % (total + 1));
        const long long draws = static_cast<long long>(gen() % (total + 1));
        const long long lo = std::max(0LL, draws - (total - succ));
        const long long hi = std::min(draws, succ);
        double sum = 0.0;
        for (long long x = lo; x <= hi; ++x) {
            sum += std::exp(log_hypergeom_pmf(x, total, succ, draws));
        }
        CHECK(close(sum, 1.0, 1e-10));
    }
}

TEST_CASE("grid minimizers find lattice minima") {
    const auto quadratic = [](double x, double y) {
        return (x - 0.4) * (x - 0.4) + (y - 0.7) * (y - 0.7);
    };
    const GridMin2 best = grid_minimize_2d(quadratic, 0.0, 0.01, 2);
    CHECK(close(best.x1, 0.4, 1e-4 + 1e-12));
    CHECK(close(best.x2, 0.7, 1e-4 + 1e-12));
    CHECK(best.value <= quadratic(0.4, 0.7) + 1e-8);

    // A constant surface resolves to the lowest lattice point.
    const GridMin2 flat = grid_minimize_2d(
        [](double, double) { return 5.0; }, 0.0, 0.01, 2);
    CHECK(flat.x1 == 0.0);
    CHECK(flat.x2 == 0.0);
    const GridMin2 flat_floored = grid_minimize_2d(
        [](double, double) { return 5.0; }, 0.001, 0.01, 2);
    CHECK(flat_floored.x1 == 0.001);
    CHECK(flat_floored.x2 == 0.001);

    // Non-finite values are skipped, not propagated.
    const GridMin2 pocket = grid_minimize_2d(
        [](double x, double y) {
            if (std::fabs(x - 0.55) > 0.06 || std::fabs(y - 0.35) > 0.06) {
                return std::nan("");
            }
            return (x - 0.55) * (x - 0.55) + (y - 0.35) * (y - 0.35);
        },
        0.0, 0.01, 2);
    CHECK(close(pocket.x1, 0.55, 1e-3));
    CHECK(close(pocket.x2, 0.35, 1e-3));

    CHECK_THROWS_AS(grid_minimize_2d(
                        [](double, double) { return std::nan(""); }, 0.0, 0.01, 2),
                    NumericError);

    const GridMin1 line = grid_minimize_1d(
        [](double x) { return std::cos(7.0 * x); }, 0.0, 0.01, 2);
    CHECK(close(line.x, M_PI / 7.0, 1e-4 + 1e-12));

    // The right endpoint belongs to the lattice even when the step does not
    // divide the span evenly.
    const GridMin1 edge = grid_minimize_1d(
        [](double x) { return -x; }, 0.0, 0.03, 0);
    CHECK(edge.x == 1.0);
}

TEST_CASE("adaptive quadrature on [0,1]") {
    CHECK(close(quad_01([](double) { return 1.0; }, 1e-12), 1.0, 1e-14));
    CHECK(close(quad_01([](double x) { return x * x; }, 1e-12), 1.0 / 3.0,
                1e-13));
    CHECK(close(quad_01([](double x) { return std::exp(x); }, 1e-12),
                std::exp(1.0) - 1.0, 1e-12));
    // Integrable endpoint singularity.
    CHECK(close(quad_01([](double x) { return 0.5 / std::sqrt(x); }, 1e-9),
                1.0, 1e-8));
    // Beta(2,2) density integrates to one.
    CHECK(close(quad_01([](double x) { return 6.0 * x * (1.0 - x); }, 1e-12),
                1.0, 1e-13));
    // A divergent integrand exhausts the interval budget.
    CHECK_THROWS_AS(quad_01([](double x) { return 1.0 / x; }, 1e-10),
                    NumericError);
}
