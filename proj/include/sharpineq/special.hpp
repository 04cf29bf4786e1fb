#ifndef SHARPINEQ_SPECIAL_HPP
#define SHARPINEQ_SPECIAL_HPP

/*
 * Gamma-function calculus and every closed-form constant used by the
 * other modules.  All functions are pure; everything is evaluated in
 * log space whenever an argument can exceed ~170 so that ratios of
 * Gamma functions stay representable.
 *
 * Error budget: gamma_fn/log_gamma are delegated to libm (tgamma /
 * lgamma), which is well below the 1e-13 relative target on (0, 200];
 * digamma is a Bernoulli asymptotic series pushed to x >= 10 by the
 * recurrence psi(x) = psi(x+1) - 1/x, truncation < 1e-16 there.
 */

#include <cmath>
#include <stdexcept>
#include <string>

#include "sharpineq/errors.hpp"

namespace sharpineq {

/** Dimension/order pair (n, s) with every derived exponent.
 *
 * Single source of truth for the exponents used throughout:
 *   q = 2n/(n-2s), p = 2n/(n+2s), r = (n+2s)/(n-2s), m = 1/r,
 *   lambda = n-2s.
 */
struct Params {
    int n = 2;
    double s = 0.5;
    double q = 0.0;
    double p = 0.0;
    double r = 0.0;
    double m = 0.0;
    double lambda = 0.0;

    static Params make(int n, double s) {
        if (n < 1 || n > 8)
            throw std::domain_error("Params: n must be an integer in [1, 8], got " + std::to_string(n));
        if (!(s > 0.0) || !(s < 0.5 * n))
            throw std::domain_error("Params: s must satisfy 0 < s < n/2, got s = " + std::to_string(s));
        Params P;
        P.n = n;
        P.s = s;
        P.q = 2.0 * n / (n - 2.0 * s);
        P.p = 2.0 * n / (n + 2.0 * s);
        P.r = (n + 2.0 * s) / (n - 2.0 * s);
        P.m = (n - 2.0 * s) / (n + 2.0 * s);
        P.lambda = n - 2.0 * s;
        return P;
    }
};

inline double gamma_fn(double x) {
    if (!(x > 0.0))
        throw std::domain_error("gamma_fn: argument must be positive");
    return std::tgamma(x);
}

inline double log_gamma(double x) {
    if (!(x > 0.0))
        throw std::domain_error("log_gamma: argument must be positive");
    return std::lgamma(x);
}

/** Digamma Psi(a) = (log Gamma(a))'. */
inline double digamma(double x) {
    if (!(x > 0.0))
        throw std::domain_error("digamma: argument must be positive");
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    // psi(x) ~ ln x - 1/(2x) - sum_k B_{2k}/(2k x^{2k})
    const double inv = 1.0 / x;
    const double w = inv * inv;
    const double series =
        w * (1.0 / 12.0 -
        w * (1.0 / 120.0 -
        w * (1.0 / 252.0 -
        w * (1.0 / 240.0 -
        w * (1.0 / 132.0 -
        w * (691.0 / 32760.0 -
        w * (1.0 / 12.0)))))));
    return acc + std::log(x) - 0.5 * inv - series;
}

/** Surface area |S^n| = 2 pi^{(n+1)/2} / Gamma((n+1)/2). */
inline double sphere_area(int n) {
    if (n < 1)
        throw std::domain_error("sphere_area: n must be >= 1");
    return 2.0 * std::pow(M_PI, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
}

/** Sharp fractional Sobolev constant S_{n,s}. */
inline double sobolev_constant(const Params& P) {
    const double n = P.n, s = P.s;
    const double lg = log_gamma(0.5 * (n - 2.0 * s)) - log_gamma(0.5 * (n + 2.0 * s))
                    - 2.0 * s * std::log(2.0) - s * std::log(M_PI)
                    + (2.0 * s / n) * (log_gamma(n) - log_gamma(0.5 * n));
    return std::exp(lg);
}

/** Sharp HLS constant for the kernel |x-y|^{-lambda} on R^n. */
inline double hls_constant(int n, double lambda) {
    if (!(lambda > 0.0) || !(lambda < n))
        throw std::domain_error("hls_constant: lambda must satisfy 0 < lambda < n");
    const double lg = 0.5 * lambda * std::log(M_PI)
                    + log_gamma(0.5 * (n - lambda)) - log_gamma(n - 0.5 * lambda)
                    + (1.0 - lambda / n) * (log_gamma(n) - log_gamma(0.5 * n));
    return std::exp(lg);
}

/** Green's-function normalization of (-Delta)^{-s}:
 *  (-Delta)^{-s} f = riesz_normalization * |x|^{-(n-2s)} * f  (convolution). */
inline double riesz_normalization(const Params& P) {
    const double n = P.n, s = P.s;
    const double lg = log_gamma(0.5 * (n - 2.0 * s)) - log_gamma(s)
                    - 2.0 * s * std::log(2.0) - 0.5 * n * std::log(M_PI);
    return std::exp(lg);
}

/** Sphere-lifted HLS constant B_lambda for |xi-eta|^{-lambda} on S^n (dsigma). */
inline double sphere_hls_constant(int n, double lambda) {
    if (!(lambda > 0.0) || !(lambda < n))
        throw std::domain_error("sphere_hls_constant: lambda must satisfy 0 < lambda < n");
    const double lg = -lambda * std::log(2.0)
                    + log_gamma(0.5 * (n - lambda)) - log_gamma(n - 0.5 * lambda)
                    + log_gamma(n) - log_gamma(0.5 * n);
    return std::exp(lg);
}

/** Riesz eigenvalue gamma_k = Gamma(k + (n-2s)/2) / Gamma(k + (n+2s)/2). */
inline double gamma_k(const Params& P, long k) {
    if (k < 0)
        throw std::domain_error("gamma_k: k must be >= 0");
    return std::exp(log_gamma(k + 0.5 * (P.n - 2.0 * P.s)) - log_gamma(k + 0.5 * (P.n + 2.0 * P.s)));
}

/** Linearized Sobolev-side modal coefficient, k >= 2.  Equals 1/gamma_k - 1/gamma_1. */
inline double alpha_k(const Params& P, long k) {
    if (k < 2)
        throw std::domain_error("alpha_k: k must be >= 2");
    return 1.0 / gamma_k(P, k) - 1.0 / gamma_k(P, 1);
}

/** Linearized HLS-side modal coefficient, k >= 2.  Equals gamma_1 - gamma_k. */
inline double beta_k(const Params& P, long k) {
    if (k < 2)
        throw std::domain_error("beta_k: k must be >= 2");
    return gamma_k(P, 1) - gamma_k(P, k);
}

/** A(n) = -(Psi(n) - Psi(n/2) - log 4); mean of log(|xi-eta|^2) over S^n. */
inline double log_kernel_mean(int n) {
    if (n < 1)
        throw std::domain_error("log_kernel_mean: n must be >= 1");
    return -(digamma(static_cast<double>(n)) - digamma(0.5 * n) - std::log(4.0));
}

/** Dirichlet coefficient Gamma(n+k)/(Gamma(n)Gamma(k)) of the MT functional, k >= 1. */
inline double mto_eigenvalue(int n, long k) {
    if (k < 1)
        throw std::domain_error("mto_eigenvalue: k must be >= 1");
    return std::exp(log_gamma(n + static_cast<double>(k)) - log_gamma(n) - log_gamma(static_cast<double>(k)));
}

/** Funk-Hecke eigenvalue of the kernel log(|xi-eta|^2) on S^n (dsigma-normalized).
 *  k = 0 gives A(n); k >= 1 gives -Gamma(n)Gamma(k)/Gamma(n+k). */
inline double log_sq_kernel_eigenvalue(int n, long k) {
    if (k < 0)
        throw std::domain_error("log_sq_kernel_eigenvalue: k must be >= 0");
    if (k == 0)
        return log_kernel_mean(n);
    return -1.0 / mto_eigenvalue(n, k);
}

/** Mass of the extremal: integral of u_*^q over R^n = pi^{n/2} Gamma(n/2)/Gamma(n). */
inline double ustar_mass(const Params& P) {
    return std::pow(M_PI, 0.5 * P.n) * std::exp(log_gamma(0.5 * P.n) - log_gamma(P.n));
}

/** Euler-Lagrange constant of u_*:
 *  (-Delta)^s u_* = ustar_el_constant * u_* (1+|x|^2)^{-2s}. */
inline double ustar_el_constant(const Params& P) {
    return std::exp(2.0 * P.s * std::log(2.0)
                    + log_gamma(0.5 * (P.n + 2.0 * P.s)) - log_gamma(0.5 * (P.n - 2.0 * P.s)));
}

/** Lower endpoint of the Theorem-1 bracket: (n-2s+2)/(n+2s+2) * S_{n,s}. */
inline double theorem1_lower_bound(const Params& P) {
    return (P.n - 2.0 * P.s + 2.0) / (P.n + 2.0 * P.s + 2.0) * sobolev_constant(P);
}

} // namespace sharpineq

#endif
