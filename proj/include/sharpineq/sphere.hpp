#ifndef SHARPINEQ_SPHERE_HPP
#define SHARPINEQ_SPHERE_HPP

/*
 * Stereographic projection geometry and the zonal harmonic calculus on
 * S^n that diagonalizes every kernel appearing in the sharp-inequality
 * functionals.
 *
 * Conventions, fixed repo-wide:
 *   - dsigma is the normalized surface measure; |S^n| converts to the
 *     unnormalized one.
 *   - A zonal function is stored by its coefficients in the orthonormal
 *     Gegenbauer basis of ZonalBasis, so Parseval reads
 *     integral(F^2 dsigma) = sum c_k^2.
 *   - S(x) = (2x/(1+|x|^2), (|x|^2-1)/(1+|x|^2)), J_S = (2/(1+|x|^2))^n,
 *     J_{S^-1}(omega) = (1-omega_{n+1})^{-n}.
 */

#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sharpineq/errors.hpp"
#include "sharpineq/quadrature.hpp"
#include "sharpineq/special.hpp"

namespace sharpineq {

inline double squared_norm(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc;
}

/** S: R^n -> S^n \ {N}. */
inline std::vector<double> stereographic(std::span<const double> x) {
    const double r2 = squared_norm(x);
    const double d = 1.0 + r2;
    std::vector<double> w(x.size() + 1);
    for (std::size_t i = 0; i < x.size(); ++i) w[i] = 2.0 * x[i] / d;
    w[x.size()] = (r2 - 1.0) / d;
    return w;
}

/** Inverse map; throws SingularityError at the north pole. */
inline std::vector<double> stereographic_inv(std::span<const double> w) {
    const double last = w[w.size() - 1];
    if (!(1.0 - last > 1e-300))
        throw SingularityError("stereographic_inv: point at the north pole");
    std::vector<double> x(w.size() - 1);
    for (std::size_t i = 0; i + 1 < w.size(); ++i) x[i] = w[i] / (1.0 - last);
    return x;
}

inline double jacobian_S(std::span<const double> x) {
    const int n = static_cast<int>(x.size());
    return std::pow(2.0 / (1.0 + squared_norm(x)), n);
}

inline double jacobian_Sinv(std::span<const double> w) {
    const int n = static_cast<int>(w.size()) - 1;
    const double last = w[w.size() - 1];
    if (!(1.0 - last > 1e-300))
        throw SingularityError("jacobian_Sinv: point at the north pole");
    return std::pow(1.0 - last, -n);
}

/** Polar coordinate of S(x) as a function of the radius: t = (r^2-1)/(r^2+1). */
inline double polar_of_radius(double r) { return (r * r - 1.0) / (r * r + 1.0); }

/** Radius as a function of the polar coordinate t in [-1, 1). */
inline double radius_of_polar(double t) { return std::sqrt((1.0 + t) / (1.0 - t)); }

/** Band-limited zonal function F(omega) = sum_k c_k C^_k(omega_{n+1}).
 *
 *  lift_order records the exponent family the function came from
 *  (P.q or P.p for lifts, 0 for intrinsic sphere functions) and
 *  projection_tail the relative spectral mass beyond the band when the
 *  coefficients were obtained by projection.
 */
struct ZonalFunction {
    int n = 2;
    double lift_order = 0.0;
    int band_limit = 0;
    std::vector<double> coeffs;
    double projection_tail = 0.0;

    static ZonalFunction from_coeffs(int n, std::vector<double> c, double lift_order = 0.0) {
        ZonalFunction f;
        f.n = n;
        f.lift_order = lift_order;
        f.band_limit = static_cast<int>(c.size()) - 1;
        f.coeffs = std::move(c);
        return f;
    }

    double l2_norm_sq() const {
        double acc = 0.0;
        for (double c : coeffs) acc += c * c;
        return acc;
    }
};

/** Pointwise evaluation at polar coordinate t via the basis recurrence. */
inline double zonal_value(const ZonalFunction& f, const ZonalBasis& basis, double t) {
    double acc = 0.0;
    for (int k = 0; k <= f.band_limit; ++k) {
        if (f.coeffs[k] != 0.0) acc += f.coeffs[k] * basis.basis_at(k, t);
    }
    return acc;
}

/** Text serialization: one header line "n s K", then K+1 coefficients,
 *  one per line, 17 significant digits. */
inline void serialize(const ZonalFunction& f, std::ostream& os) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d %.17g %d\n", f.n, f.lift_order, f.band_limit);
    os << buf;
    for (double c : f.coeffs) {
        std::snprintf(buf, sizeof buf, "%.17g\n", c);
        os << buf;
    }
}

inline ZonalFunction deserialize_zonal(std::istream& is) {
    ZonalFunction f;
    if (!(is >> f.n >> f.lift_order >> f.band_limit))
        throw std::runtime_error("ZonalFunction: malformed header");
    if (f.band_limit < 0)
        throw std::runtime_error("ZonalFunction: negative band limit");
    f.coeffs.resize(f.band_limit + 1);
    for (double& c : f.coeffs) {
        if (!(is >> c)) throw std::runtime_error("ZonalFunction: truncated coefficient list");
    }
    return f;
}

enum class LiftMode { Q, P };

/** Conformal lift of a radial function u on R^n to the sphere:
 *  F(omega) = u(S^-1(omega)) J_{S^-1}(omega)^{1/e} with e = q or p,
 *  returned as coefficients through quadrature projection.
 */
inline ZonalFunction lift(const Params& P, const std::function<double(double)>& u_radial,
                          LiftMode mode, const ZonalBasis& basis) {
    const double e = (mode == LiftMode::Q) ? P.q : P.p;
    const int q = basis.size();
    std::vector<double> nodal(q);
    for (int i = 0; i < q; ++i) {
        const double t = basis.nodes()[i];
        const double r = radius_of_polar(t);
        const double val = u_radial(r) * std::pow(1.0 - t, -P.n / e);
        if (!std::isfinite(val))
            throw LiftUnboundedError("lift: non-finite sample (u does not decay fast enough)");
        nodal[i] = val;
    }
    // blow-up monitor: compare the pole-adjacent samples with the bulk
    double bulk = 0.0;
    for (int i = q / 4; i < (3 * q) / 4; ++i) bulk = std::max(bulk, std::abs(nodal[i]));
    const double edge = std::max(std::abs(nodal[q - 1]), std::abs(nodal[q - 2]));
    if (edge > 1e8 * (bulk + 1e-300))
        throw LiftUnboundedError("lift: samples blow up toward the pole");

    std::vector<double> c = basis.project(nodal);
    ZonalFunction f = ZonalFunction::from_coeffs(basis.n(), std::move(c), e);
    // tail indicator: share of the captured energy sitting in the last decade of the band
    double total = f.l2_norm_sq(), tail = 0.0;
    const int k0 = std::max(1, basis.band_limit() - basis.band_limit() / 10);
    for (int k = k0; k <= f.band_limit; ++k) tail += f.coeffs[k] * f.coeffs[k];
    f.projection_tail = (total > 0.0) ? tail / total : 0.0;
    // an algebraically blowing-up lift shows as a non-decaying coefficient tail
    if (f.projection_tail > 1e-3)
        throw LiftUnboundedError("lift: coefficient tail does not decay (u lacks the required decay)");
    return f;
}

/** Evaluate the R^n function represented by a lift at a given radius:
 *  u(x) = F(S(x)) * J_S(x)^{1/e}. */
inline double lift_eval(const ZonalFunction& f, const ZonalBasis& basis, double radius) {
    if (f.lift_order == 0.0)
        throw std::invalid_argument("lift_eval: function carries no lift order");
    const double t = polar_of_radius(radius);
    return zonal_value(f, basis, t) * std::pow(1.0 - t, f.n / f.lift_order);
}

/** Kernel K(<omega,eta>) = smooth(t) * (1-t)^{endpoint_power}; the
 *  endpoint factor is absorbed into the Jacobi weight so that endpoint
 *  singularities (Riesz) are integrated by a matched rule. */
struct ZonalKernel {
    std::function<double(double)> smooth;
    double endpoint_power = 0.0;
};

namespace detail {

inline double funk_hecke_eigen_once(int n, const ZonalKernel& kernel, int degree, int q) {
    const double alpha = 0.5 * (n - 2);
    const GaussRule& rule = cached_gauss_jacobi(q, alpha + kernel.endpoint_power, alpha);
    const double mu0 = jacobi_mu0(alpha, alpha);
    // R_degree = C^_degree / C^_degree(1)
    const double at_one = zonal_basis_value(n, degree, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double t = rule.nodes[i];
        acc += rule.weights[i] * kernel.smooth(t) * zonal_basis_value(n, degree, t) / at_one;
    }
    return acc / mu0;
}

} // namespace detail

/** Funk-Hecke eigenvalue of the kernel on H_degree, computed by
 *  quadrature with automatic doubling until two successive estimates
 *  agree to stab_tol. */
inline double funk_hecke_eigen(int n, const ZonalKernel& kernel, int degree,
                               int q0 = 200, double stab_tol = 1e-11) {
    int q = std::max(q0, 2 * degree + 8);
    double prev = detail::funk_hecke_eigen_once(n, kernel, degree, q);
    for (int iter = 0; iter < 5; ++iter) {
        q *= 2;
        const double cur = detail::funk_hecke_eigen_once(n, kernel, degree, q);
        if (std::abs(cur - prev) <= stab_tol * std::max(1.0, std::abs(cur)))
            return cur;
        prev = cur;
    }
    throw AccuracyError("funk_hecke_eigen: eigenvalue estimate did not stabilize");
}

/** Diagonal action: multiplies each coefficient by the kernel eigenvalue. */
inline ZonalFunction funk_hecke_apply(const ZonalKernel& kernel, const ZonalFunction& f,
                                      int q0 = 200, double stab_tol = 1e-11) {
    ZonalFunction out = f;
    for (int k = 0; k <= f.band_limit; ++k)
        out.coeffs[k] = f.coeffs[k] * funk_hecke_eigen(f.n, kernel, k, q0, stab_tol);
    return out;
}

/** Chordal Riesz kernel of Lemma-dual form, normalized so that its
 *  Funk-Hecke eigenvalues are gamma_k:
 *  K(t) = riesz_normalization * |S^n| * (2-2t)^{-(n-2s)/2}. */
inline ZonalKernel riesz_kernel(const Params& P) {
    const double c = riesz_normalization(P) * sphere_area(P.n)
                   * std::pow(2.0, -0.5 * (P.n - 2.0 * P.s));
    return ZonalKernel{[c](double) { return c; }, -0.5 * (P.n - 2.0 * P.s)};
}

/** Matched-rule eigenvalue of the chordal Riesz kernel: the endpoint
 *  singularity is part of the Jacobi weight, so a Q-point rule is exact
 *  for every degree <= 2Q-2-n/2ish; reproduces gamma_k to rounding. */
inline double riesz_eigenvalue_numeric(const Params& P, int degree, int q = 200) {
    return detail::funk_hecke_eigen_once(P.n, riesz_kernel(P), degree, q);
}

/** Quadrature value of the Funk-Hecke eigenvalue of log(|xi-eta|^2):
 *  log(2-2t) is reached as -2 d/dlambda (2-2t)^{-lambda/2} at lambda=0,
 *  where each (2-2t)^{-lambda/2} eigenvalue is computed by a matched
 *  exact rule.  Independent of the closed Gamma form. */
inline double log_sq_kernel_eigenvalue_numeric(int n, int degree, int q = 200) {
    auto E = [&](double lam) {
        const double c = std::pow(2.0, -0.5 * lam);
        ZonalKernel ker{[c](double) { return c; }, -0.5 * lam};
        return detail::funk_hecke_eigen_once(n, ker, degree, q);
    };
    const double h = 1e-3;
    const double d = (-E(2.0 * h) + 8.0 * E(h) - 8.0 * E(-h) + E(-2.0 * h)) / (12.0 * h);
    return -2.0 * d;
}

} // namespace sharpineq

#endif
