#pragma once

#include <functional>

namespace snsmart {

// Shape parameters of a beta distribution; both must be positive and finite.
struct BetaParams {
    double a;
    double b;
};

// ln Gamma(x) for x > 0 via a Lanczos series (g = 607/128, 15 terms).
double log_gamma(double x);

// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a+b).
double log_beta(double a, double b);
double log_beta(const BetaParams& p);

// Log density of Beta(p) at x in (0,1).
double beta_log_pdf(const BetaParams& p, double x);

// Mean and standard deviation of Beta(p).
double beta_mean(const BetaParams& p);
double beta_sd(const BetaParams& p);

// Regularized incomplete beta function I_x(a, b) and its inverse.
double beta_cdf(const BetaParams& p, double x);
double beta_quantile(const BetaParams& p, double prob);

// ln P[X = x] for X ~ Hypergeometric(total, successes, draws), i.e.
// ln[ C(successes, x) C(total-successes, draws-x) / C(total, draws) ].
// x must lie in the support.
double log_hypergeom_pmf(long long x, long long total, long long successes,
                         long long draws);

struct GridMin1 {
    double x = 0.0;
    double value = 0.0;
};

struct GridMin2 {
    double x1 = 0.0;
    double x2 = 0.0;
    double value = 0.0;
};

// Deterministic minimization over the box [lo, 1]^2: evaluate a coarse
// lattice with spacing coarse_step (the upper bound 1 is always a lattice
// point), then refine refine_rounds times around the incumbent, shrinking
// the spacing by 10x and searching +-1 cell of the previous spacing.
// Ties break toward the lowest x1, then the lowest x2. Non-finite
// objective values are skipped; if no lattice point is finite a
// NumericError is thrown.
GridMin2 grid_minimize_2d(const std::function<double(double, double)>& objective,
                          double lo, double coarse_step, int refine_rounds);

// One-dimensional variant over [lo, 1], same refinement and tie rules.
GridMin1 grid_minimize_1d(const std::function<double(double)>& objective,
                          double lo, double coarse_step, int refine_rounds);

// Adaptive Gauss-Kronrod (G7, K15) quadrature of f over (0, 1) to the
// requested absolute tolerance. Endpoints are never evaluated, so
// integrable endpoint singularities are allowed. Throws NumericError if
// the subdivision budget is exhausted before the error bound is met.
double quad_01(const std::function<double(double)>& f, double abs_tol = 1e-10);

} // namespace snsmart
