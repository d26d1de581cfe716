#include "snsmart/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "snsmart/errors.hpp"

namespace snsmart {

namespace {

inline bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

} // namespace

double log_gamma(double x) {
    if (!positive_finite(x)) {
        throw DomainError("log_gamma: argument must be positive and finite");
    }
    // Lanczos approximation, g = 607/128, 15 coefficients (Godfrey's set).
    static constexpr double kG = 607.0 / 128.0;
    static constexpr std::array<double, 15> kCoef = {
        0.99999999999999709182,
        57.156235665862923517,
        -59.597960355475491248,
        14.136097974741747174,
        -0.49191381609762019978,
        0.33994649984811888699e-4,
        0.46523628927048575665e-4,
        -0.98374475304879564677e-4,
        0.15808870322491248884e-3,
        -0.21026444172410488319e-3,
        0.21743961811521264320e-3,
        -0.16431810653676389022e-3,
        0.84418223983852743293e-4,
        -0.26190838401581408670e-4,
        0.36899182659531622704e-5,
    };
    static const double kLogSqrt2Pi = 0.5 * std::log(2.0 * M_PI);

    // Reflection is unnecessary on x > 0, but the series loses accuracy for
    // tiny x; use ln Gamma(x) = ln Gamma(x+1) - ln x there.
    if (x < 0.5) {
        return log_gamma(x + 1.0) - std::log(x);
    }
    double series = kCoef[0];
    for (std::size_t i = 1; i < kCoef.size(); ++i) {
        series += kCoef[i] / (x - 1.0 + static_cast<double>(i));
    }
    const double t = x + kG - 0.5;
    return kLogSqrt2Pi + (x - 0.5) * std::log(t) - t + std::log(series);
}

double log_beta(double a, double b) {
    if (!positive_finite(a) || !positive_finite(b)) {
        throw DomainError("log_beta: shapes must be positive and finite");
    }
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double log_beta(const BetaParams& p) { return log_beta(p.a, p.b); }

double beta_log_pdf(const BetaParams& p, double x) {
    if (!(x > 0.0 && x < 1.0)) {
        throw DomainError("beta_log_pdf: x must lie in (0,1)");
    }
    return (p.a - 1.0) * std::log(x) + (p.b - 1.0) * std::log1p(-x) - log_beta(p);
}

double beta_mean(const BetaParams& p) {
    if (!positive_finite(p.a) || !positive_finite(p.b)) {
        throw DomainError("beta_mean: shapes must be positive and finite");
    }
    return p.a / (p.a + p.b);
}

double beta_sd(const BetaParams& p) {
    if (!positive_finite(p.a) || !positive_finite(p.b)) {
        throw DomainError("beta_sd: shapes must be positive and finite");
    }
    const double s = p.a + p.b;
    return std::sqrt(p.a * p.b / (s * s * (s + 1.0)));
}

namespace {

// Continued fraction for the incomplete beta function (Lentz's method).
double beta_cont_frac(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = std::numeric_limits<double>::epsilon();
    const double fpmin = std::numeric_limits<double>::min() / kEps;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= kEps) return h;
    }
    throw NumericError("beta_cdf: continued fraction did not converge");
}

} // namespace

double beta_cdf(const BetaParams& p, double x) {
    if (!positive_finite(p.a) || !positive_finite(p.b)) {
        throw DomainError("beta_cdf: shapes must be positive and finite");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError("beta_cdf: x must lie in [0,1]");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double lbeta = log_beta(p);
    const double front =
        std::exp(p.a * std::log(x) + p.b * std::log1p(-x) - lbeta);
    if (x < (p.a + 1.0) / (p.a + p.b + 2.0)) {
        return front * beta_cont_frac(p.a, p.b, x) / p.a;
    }
    return 1.0 - front * beta_cont_frac(p.b, p.a, 1.0 - x) / p.b;
}

double beta_quantile(const BetaParams& p, double prob) {
    if (!(prob >= 0.0 && prob <= 1.0)) {
        throw DomainError("beta_quantile: probability must lie in [0,1]");
    }
    if (prob == 0.0) return 0.0;
    if (prob == 1.0) return 1.0;
    // Bisection to a narrow bracket, then Newton polish.
    double lo = 0.0, hi = 1.0;
    double x = beta_mean(p);
    for (int i = 0; i < 80; ++i) {
        if (beta_cdf(p, x) < prob) {
            lo = x;
        } else {
            hi = x;
        }
        x = 0.5 * (lo + hi);
        if (hi - lo < 1e-14) break;
    }
    for (int i = 0; i < 4; ++i) {
        if (!(x > 0.0 && x < 1.0)) break;
        const double f = beta_cdf(p, x) - prob;
        const double dens = std::exp(beta_log_pdf(p, x));
        if (dens <= 0.0 || !std::isfinite(dens)) break;
        const double step = f / dens;
        const double next = x - step;
        if (next <= lo || next >= hi) break;
        x = next;
    }
    return x;
}

double log_hypergeom_pmf(long long x, long long total, long long successes,
                         long long draws) {
    if (total < 0 || successes < 0 || draws < 0 || successes > total ||
        draws > total) {
        throw DomainError("log_hypergeom_pmf: inconsistent population counts");
    }
    const long long lo = std::max(0LL, draws - (total - successes));
    const long long hi = std::min(draws, successes);
    if (x < lo || x > hi) {
        throw DomainError("log_hypergeom_pmf: x outside the support");
    }
    auto log_choose = [](long long n, long long k) {
        if (k == 0 || k == n) return 0.0;
        return log_gamma(static_cast<double>(n) + 1.0) -
               log_gamma(static_cast<double>(k) + 1.0) -
               log_gamma(static_cast<double>(n - k) + 1.0);
    };
    return log_choose(successes, x) + log_choose(total - successes, draws - x) -
           log_choose(total, draws);
}

namespace {

// Lattice over [lo, hi] with the given spacing; hi is always included.
std::vector<double> make_lattice(double lo, double hi, double step) {
    std::vector<double> pts;
    const double span = hi - lo;
    const auto n = static_cast<long long>(std::floor(span / step + 1e-12));
    pts.reserve(static_cast<std::size_t>(n) + 2);
    for (long long i = 0; i <= n; ++i) {
        pts.push_back(lo + static_cast<double>(i) * step);
    }
    if (hi - pts.back() > 1e-12 * std::max(1.0, std::fabs(hi))) {
        pts.push_back(hi);
    } else {
        pts.back() = hi;
    }
    return pts;
}

} // namespace

GridMin2 grid_minimize_2d(const std::function<double(double, double)>& objective,
                          double lo, double coarse_step, int refine_rounds) {
    if (!(lo >= 0.0 && lo < 1.0)) {
        throw DomainError("grid_minimize_2d: lower bound must lie in [0,1)");
    }
    if (!(coarse_step > 0.0)) {
        throw DomainError("grid_minimize_2d: step must be positive");
    }
    bool found = false;
    GridMin2 best{lo, lo, std::numeric_limits<double>::infinity()};
    auto scan = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
        for (double x : xs) {
            for (double y : ys) {
                const double v = objective(x, y);
                if (!std::isfinite(v)) continue;
                if (!found || v < best.value) {
                    found = true;
                    best = {x, y, v};
                }
            }
        }
    };
    scan(make_lattice(lo, 1.0, coarse_step), make_lattice(lo, 1.0, coarse_step));
    if (!found) {
        throw NumericError("grid_minimize_2d: objective non-finite everywhere");
    }
    double step = coarse_step;
    for (int round = 0; round < refine_rounds; ++round) {
        const double fine = step / 10.0;
        const auto xs = make_lattice(std::max(lo, best.x1 - step),
                                     std::min(1.0, best.x1 + step), fine);
        const auto ys = make_lattice(std::max(lo, best.x2 - step),
                                     std::min(1.0, best.x2 + step), fine);
        scan(xs, ys);
        step = fine;
    }
    return best;
}

GridMin1 grid_minimize_1d(const std::function<double(double)>& objective,
                          double lo, double coarse_step, int refine_rounds) {
    if (!(lo >= 0.0 && lo < 1.0)) {
        throw DomainError("grid_minimize_1d: lower bound must lie in [0,1)");
    }
    if (!(coarse_step > 0.0)) {
        throw DomainError("grid_minimize_1d: step must be positive");
    }
    bool found = false;
    GridMin1 best{lo, std::numeric_limits<double>::infinity()};
    auto scan = [&](const std::vector<double>& xs) {
        for (double x : xs) {
            const double v = objective(x);
            if (!std::isfinite(v)) continue;
            if (!found || v < best.value) {
                found = true;
                best = {x, v};
            }
        }
    };
    scan(make_lattice(lo, 1.0, coarse_step));
    if (!found) {
        throw NumericError("grid_minimize_1d: objective non-finite everywhere");
    }
    double step = coarse_step;
    for (int round = 0; round < refine_rounds; ++round) {
        const double fine = step / 10.0;
        scan(make_lattice(std::max(lo, best.x - step),
                          std::min(1.0, best.x + step), fine));
        step = fine;
    }
    return best;
}

namespace {

// 7-point Gauss / 15-point Kronrod pair on [-1, 1] (QUADPACK constants).
constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
};

struct GkEstimate {
    double integral;
    double error;
};

GkEstimate gauss_kronrod(const std::function<double(double)>& f, double a,
                         double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::array<double, 15> fv{};
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(mid - half * kKronrodNodes[static_cast<std::size_t>(i)]);
        fv[14 - i] = f(mid + half * kKronrodNodes[static_cast<std::size_t>(i)]);
    }
    fv[7] = f(mid);
    double kron = 0.0;
    for (int i = 0; i < 7; ++i) {
        kron += kKronrodWeights[static_cast<std::size_t>(i)] * (fv[i] + fv[14 - i]);
    }
    kron += kKronrodWeights[7] * fv[7];
    double gauss = kGaussWeights[3] * fv[7];
    for (int i = 0; i < 3; ++i) {
        gauss += kGaussWeights[static_cast<std::size_t>(i)] *
                 (fv[2 * i + 1] + fv[13 - 2 * i]);
    }
    return {kron * half, std::fabs((kron - gauss) * half)};
}

} // namespace

double quad_01(const std::function<double(double)>& f, double abs_tol) {
    if (!(abs_tol > 0.0)) {
        throw DomainError("quad_01: tolerance must be positive");
    }
    struct Interval {
        double a, b, integral, error;
    };
    std::vector<Interval> heap;
    auto first = gauss_kronrod(f, 0.0, 1.0);
    if (!std::isfinite(first.integral) || !std::isfinite(first.error)) {
        throw NumericError("quad_01: integrand produced a non-finite value");
    }
    heap.push_back({0.0, 1.0, first.integral, first.error});
    double total_err = first.error;

    constexpr int kMaxIntervals = 5000;
    while (total_err > abs_tol) {
        if (heap.size() >= kMaxIntervals) {
            throw NumericError("quad_01: subdivision budget exhausted");
        }
        // Split the interval with the largest error estimate.
        std::size_t worst = 0;
        for (std::size_t i = 1; i < heap.size(); ++i) {
            if (heap[i].error > heap[worst].error) worst = i;
        }
        const Interval iv = heap[worst];
        const double mid = 0.5 * (iv.a + iv.b);
        if (mid <= iv.a || mid >= iv.b) {
            throw NumericError("quad_01: interval too small to split further");
        }
        const auto left = gauss_kronrod(f, iv.a, mid);
        const auto right = gauss_kronrod(f, mid, iv.b);
        if (!std::isfinite(left.integral) || !std::isfinite(left.error) ||
            !std::isfinite(right.integral) || !std::isfinite(right.error)) {
            throw NumericError("quad_01: integrand produced a non-finite value");
        }
        heap[worst] = {iv.a, mid, left.integral, left.error};
        heap.push_back({mid, iv.b, right.integral, right.error});
        total_err = 0.0;
        for (const auto& h : heap) total_err += h.error;
    }
    double total = 0.0;
    for (const auto& h : heap) total += h.integral;
    return total;
}

} // namespace snsmart
