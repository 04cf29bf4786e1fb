#ifndef SHARPINEQ_MTO_HPP
#define SHARPINEQ_MTO_HPP

/*
 * Moser-Trudinger-Onofri and logarithmic HLS functionals on S^n, the
 * improved inequality that couples them, the Euclidean Onofri corollary
 * for n = 2, and the endpoint differentiation s -> n/2 that connects
 * them to the Sobolev/HLS pair.
 *
 * The exponential-class double integrals reduce to spectral sums: e^F
 * is expanded in the zonal basis and the kernels log|xi-eta| and
 * log(|xi-eta|^2) act diagonally with the closed-form eigenvalues of
 * special.hpp (pinned against the matched-quadrature oracle in the
 * sphere tests).
 */

#include <cmath>
#include <span>
#include <vector>

#include "sharpineq/errors.hpp"
#include "sharpineq/functionals.hpp"
#include "sharpineq/quadrature.hpp"
#include "sharpineq/special.hpp"
#include "sharpineq/sphere.hpp"

namespace sharpineq {

struct MtoReport {
    double dirichlet_term = 0.0;      // sum_{k>=1} Gamma(n+k)/(Gamma(n)Gamma(k)) int F_k^2
    double mean = 0.0;                // int F dsigma
    double log_integral = 0.0;        // log int e^F dsigma
    double entropy = 0.0;             // Ent_sigma(e^F)
    double log_kernel_energy = 0.0;   // double integral e^F log|xi-eta| e^F
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    double Cn = 0.0;
};

struct EndpointRow {
    double t = 0.0;
    double s = 0.0;
    double lhs_sobolev = 0.0;   // S ||u||_q^{8s/(n-2s)} F[u] at finite t
    double limit_sobolev = 0.0;
    double err_sobolev = 0.0;
    double lhs_hls = 0.0;       // G[u^r] at finite t
    double limit_hls = 0.0;
    double err_hls = 0.0;
};

class MtoFunctionals {
public:
    explicit MtoFunctionals(int n, int quad_size = 600)
        : n_(n), basis_(n, std::min(quad_size / 2 - 2, 256), quad_size), area_(sphere_area(n)) {
        dirichlet_.assign(basis_.band_limit() + 1, 0.0);
        halflog_.assign(basis_.band_limit() + 1, 0.0);
        for (int k = 0; k <= basis_.band_limit(); ++k) {
            if (k >= 1) dirichlet_[k] = mto_eigenvalue(n, k);
            halflog_[k] = 0.5 * log_sq_kernel_eigenvalue(n, k);  // kernel log|xi-eta|
        }
    }

    int n() const { return n_; }
    const ZonalBasis& basis() const { return basis_; }

    double exp_integral(const ZonalFunction& F) const {
        const std::vector<double> nodal = basis_.values(F.coeffs);
        double acc = 0.0;
        for (int i = 0; i < basis_.size(); ++i) acc += basis_.weights()[i] * std::exp(nodal[i]);
        return acc;
    }

    /** Coefficients of e^F at the full projection band. */
    ZonalFunction exp_lift(const ZonalFunction& F) const {
        std::vector<double> nodal = basis_.values(F.coeffs);
        for (double& v : nodal) v = std::exp(v);
        return ZonalFunction::from_coeffs(n_, basis_.project(nodal));
    }

    /** Ent_sigma(e^F) = int e^F F - (int e^F) log(int e^F). */
    double entropy_exp(const ZonalFunction& F) const {
        const std::vector<double> nodal = basis_.values(F.coeffs);
        double ef = 0.0, eff = 0.0;
        for (int i = 0; i < basis_.size(); ++i) {
            const double e = std::exp(nodal[i]);
            ef += basis_.weights()[i] * e;
            eff += basis_.weights()[i] * e * nodal[i];
        }
        return eff - ef * std::log(ef);
    }

    /** Spectral value of the double integral e^F log|xi-eta| e^F. */
    double log_kernel_energy(const ZonalFunction& F) const {
        const ZonalFunction E = exp_lift(F);
        double acc = 0.0;
        for (int k = 0; k <= E.band_limit; ++k) acc += halflog_[k] * E.coeffs[k] * E.coeffs[k];
        return acc;
    }

    /** Moser-Trudinger-Onofri deficit (nonnegative). */
    double mto_deficit(const ZonalFunction& F) const {
        double spectral = 0.0;
        for (int k = 1; k <= F.band_limit; ++k)
            spectral += dirichlet_[k] * F.coeffs[k] * F.coeffs[k];
        return spectral / (2.0 * n_) + F.coeffs[0] - std::log(exp_integral(F));
    }

    /** Logarithmic HLS deficit for a density (F >= 0, unit mean). */
    double log_hls_deficit(const ZonalFunction& F) const {
        const std::vector<double> nodal = basis_.values(F.coeffs);
        for (double v : nodal) {
            if (v < -1e-12)
                throw PreconditionError("log_hls_deficit: density is negative at a node");
        }
        if (std::abs(F.coeffs[0] - 1.0) > 1e-10)
            throw PreconditionError("log_hls_deficit: density must have unit mean");
        double ent = 0.0;
        for (int i = 0; i < basis_.size(); ++i) {
            const double v = std::max(nodal[i], 0.0);
            if (v > 0.0) ent += basis_.weights()[i] * v * std::log(v);
        }
        const std::vector<double> b = basis_.project(nodal);
        double kernel = 0.0;
        for (std::size_t k = 0; k < b.size(); ++k) kernel += halflog_[k] * b[k] * b[k];
        return 0.5 * n_ * (digamma(static_cast<double>(n_)) - digamma(0.5 * n_) - std::log(4.0))
             + ent + n_ * kernel;
    }

    /** Both sides of the improved inequality at a given constant. */
    MtoReport improved_mto_margin(const ZonalFunction& F, double Cn) const {
        MtoReport rep;
        rep.Cn = Cn;
        for (int k = 1; k <= F.band_limit; ++k)
            rep.dirichlet_term += dirichlet_[k] * F.coeffs[k] * F.coeffs[k];
        rep.mean = F.coeffs.empty() ? 0.0 : F.coeffs[0];
        const double I = exp_integral(F);
        rep.log_integral = std::log(I);
        rep.entropy = entropy_exp(F);
        rep.log_kernel_energy = log_kernel_energy(F);
        const double psi_term = 0.5 * n_ * (digamma(static_cast<double>(n_)) - digamma(0.5 * n_) - std::log(4.0));
        rep.lhs = Cn * I * I * (rep.dirichlet_term / (2.0 * n_) + rep.mean - rep.log_integral);
        rep.rhs = n_ * rep.log_kernel_energy + I * I * psi_term + I * rep.entropy;
        rep.margin = rep.lhs - rep.rhs;
        return rep;
    }

    /** Closed-form supremum of the epsilon-expansion ratio: 1/(n+1). */
    static double constant_lower_bound(int n, int kmax = 500) {
        double best = 0.0;
        for (int k = 2; k <= kmax; ++k) {
            const double x = mto_eigenvalue(n, k) / n;  // Gamma(n+k)/(Gamma(n+1)Gamma(k))
            best = std::max(best, (1.0 - 1.0 / x) / (x - 1.0));
        }
        return best;
    }

    /** Numerical route to the lower bound: critical constant where the
     *  quadratic term of the margin along an H_mode direction changes
     *  sign, Richardson-extrapolated over the halving epsilon sequence. */
    double lower_bound_numeric(int mode, std::span<const double> epsilons) const {
        if (mode < 2)
            throw PreconditionError("lower_bound_numeric: direction must live in H_k, k >= 2");
        std::vector<double> est;
        for (double eps : epsilons) {
            std::vector<double> c(mode + 1, 0.0);
            c[mode] = eps;
            const ZonalFunction F = ZonalFunction::from_coeffs(n_, c);
            const double m0 = improved_mto_margin(F, 0.0).margin;
            const double m1 = improved_mto_margin(F, 1.0).margin;
            est.push_back(-m0 / (m1 - m0));  // B/A of the quadratic coefficients
        }
        std::vector<double> T = est;
        for (std::size_t level = 1; level < T.size(); ++level) {
            const double w = std::pow(2.0, static_cast<double>(level));
            for (std::size_t i = T.size() - 1; i >= level; --i) {
                T[i] = (w * T[i] - T[i - 1]) / (w - 1.0);
                if (i == level) break;
            }
        }
        return T.back();
    }

    /** Endpoint differentiation: finite-(s, t) Sobolev/HLS quantities of
     *  the lifted family u = (1 + tF)-lift against their s -> n/2 limits.
     *  Requires a mean-zero F and 1 + tF > 0 at the nodes. */
    std::vector<EndpointRow> endpoint_limit_check(const ZonalFunction& F,
                                                  std::span<const double> ts) const {
        if (std::abs(F.coeffs[0]) > 1e-12 * (std::sqrt(F.l2_norm_sq()) + 1e-300))
            throw PreconditionError("endpoint_limit_check: F must have zero mean");

        const double I = exp_integral(F);
        const double gam_n = gamma_fn(static_cast<double>(n_));

        double dirichlet = 0.0;
        for (int k = 1; k <= F.band_limit; ++k)
            dirichlet += dirichlet_[k] * F.coeffs[k] * F.coeffs[k];
        const double limit_sob = -(2.0 * area_ / (n_ * gam_n)) * I * I * std::log(I)
            + (area_ / (n_ * n_ * gam_n)) * dirichlet * I * I;

        const ZonalFunction E = exp_lift(F);
        double logsq = 0.0;
        for (int k = 0; k <= E.band_limit; ++k)
            logsq += 2.0 * halflog_[k] * E.coeffs[k] * E.coeffs[k];
        const double psi_term = digamma(static_cast<double>(n_)) - digamma(0.5 * n_) - std::log(4.0);
        const double limit_hls = (area_ / gam_n)
            * (I * I * (psi_term + (2.0 / n_) * entropy_exp(F) / I) + logsq);

        std::vector<EndpointRow> rows;
        for (double t : ts) {
            if (!(t > 0.0) || !(t < 0.5))
                throw std::domain_error("endpoint_limit_check: t must lie in (0, 1/2)");
            EndpointRow row;
            row.t = t;
            row.s = 0.5 * n_ - n_ * t;
            const Params P = Params::make(n_, row.s);
            const LiftedFunctionals ws(P, F.band_limit, basis_.size());

            std::vector<double> cu(F.coeffs.size());
            for (std::size_t k = 0; k < cu.size(); ++k) cu[k] = t * F.coeffs[k];
            cu[0] += 1.0;
            const ZonalFunction u = ZonalFunction::from_coeffs(n_, cu, P.q);
            // positivity of 1 + tF at the nodes is enforced by the quadrature path
            const double Nq = ws.uq_integral(u);
            const double Fdef = ws.S() * ws.sobolev_norm_sq(u) - std::pow(Nq, 2.0 / P.q);
            row.lhs_sobolev = ws.S() * std::pow(Nq, 4.0 * P.s / P.n) * Fdef;
            row.limit_sobolev = limit_sob;
            row.err_sobolev = std::abs(row.lhs_sobolev - limit_sob);

            const ZonalFunction v = ws.v_lift(u);
            row.lhs_hls = ws.S() * ws.lp_norm_sq(v) - ws.hls_energy(v);
            row.limit_hls = limit_hls;
            row.err_hls = std::abs(row.lhs_hls - limit_hls);
            rows.push_back(row);
        }
        return rows;
    }

    /** Euclidean Onofri margin for n = 2, term by term as on R^2, with
     *  f = F o S and dmu = dx / (pi (1+|x|^2)^2). */
    double onofri_euclidean_margin(const ZonalFunction& F, double C2) const {
        if (n_ != 2)
            throw std::domain_error("onofri_euclidean_margin: defined for n = 2 only");
        const double I = exp_integral(F);
        // |grad f|^2 on R^2 via 4 pi int |grad F|^2 dsigma, spectrally k(k+1)
        double grad = 0.0;
        for (int k = 1; k <= F.band_limit; ++k)
            grad += k * (k + 1.0) * F.coeffs[k] * F.coeffs[k];
        const double dirichlet_term = grad / 4.0;  // (1/16pi) * 4pi * sum

        const std::vector<double> nodal = basis_.values(F.coeffs);
        double ent_mu = 0.0, elogj = 0.0;
        for (int i = 0; i < basis_.size(); ++i) {
            const double w = basis_.weights()[i];
            const double e = std::exp(nodal[i]);
            const double logj = 2.0 * std::log(1.0 - basis_.nodes()[i]);
            const double logmu = logj - std::log(4.0 * M_PI);
            ent_mu += w * e * (nodal[i] + logmu - std::log(I));
            elogj += w * e * logj;
        }
        ent_mu /= I;

        // double integral of e^f mu log|x-y| e^f mu over R^2 x R^2
        const double double_log = log_kernel_energy(F) - 0.5 * I * elogj;

        const double lhs = C2 * I * I * (dirichlet_term + F.coeffs[0] - std::log(I));
        const double rhs = I * I * (1.0 + std::log(M_PI) + ent_mu) + 2.0 * double_log;
        return lhs - rhs;
    }

private:
    int n_;
    ZonalBasis basis_;
    double area_;
    std::vector<double> dirichlet_;  // Gamma(n+k)/(Gamma(n)Gamma(k)), 0 at k = 0
    std::vector<double> halflog_;    // eigenvalues of log|xi-eta|
};

} // namespace sharpineq

#endif
