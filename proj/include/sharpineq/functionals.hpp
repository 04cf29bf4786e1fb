#ifndef SHARPINEQ_FUNCTIONALS_HPP
#define SHARPINEQ_FUNCTIONALS_HPP

/*
 * Sobolev and HLS deficit functionals, the square-completion identity,
 * the linearization around the extremal u_*, and the two-sided bounds
 * on the best constant.
 *
 * Every quadratic form is evaluated in the lifted zonal representation,
 * where the relevant operators are exactly diagonal:
 *
 *   ||u||_s^2           = |S^n| sum_k c_k^2 / gamma_k          (q-lift F, coeffs c)
 *   int v (-D)^{-s} v   = |S^n| sum_k gamma_k b_k^2            (p-lift G, coeffs b)
 *   int u v dx          = |S^n| sum_k c_k b_k
 *   int f^2 (1+|x|^2)^{-2s} dx = 2^{-2s} |S^n| sum_k c_k^2
 *   int u^q dx          = |S^n| int F^q dsigma                  (quadrature)
 *
 * and the p-lift of u^r is the pointwise r-th power of the q-lift of u.
 */

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sharpineq/errors.hpp"
#include "sharpineq/quadrature.hpp"
#include "sharpineq/report.hpp"
#include "sharpineq/special.hpp"
#include "sharpineq/sphere.hpp"

namespace sharpineq {

/** The Aubin-Talenti extremal u_*(x) = (1+|x|^2)^{-(n-2s)/2} with its mass. */
struct AubinTalenti {
    Params P;
    explicit AubinTalenti(const Params& params) : P(params) {}
    double operator()(double radius) const {
        return std::pow(1.0 + radius * radius, -0.5 * P.lambda);
    }
    /** integral of u_*^q over R^n. */
    double mass() const { return ustar_mass(P); }
};

inline AubinTalenti aubin_talenti(const Params& P) { return AubinTalenti(P); }

struct DeficitReport {
    Params params;
    double sobolev_norm_sq = 0.0;
    double lq_norm = 0.0;       // ||u||_q^2
    double F_value = 0.0;
    double hls_energy = 0.0;
    double lp_norm = 0.0;       // ||u^r||_p^2
    double G_value = 0.0;
    double quotient = 0.0;      // G[u^r] / (||u||_q^{8s/(n-2s)} F[u])
    int band_limit = 0;
    int quad_size = 0;
    double projection_tail = 0.0;
};

struct VerifyResult {
    bool holds = false;
    double margin = 0.0;     // C ||u||_q^{8s/nu} F[u] - G[u^r]
    double rel_margin = 0.0; // margin / scale
    double scale = 0.0;
};

struct PoincareResult {
    bool holds = false;
    double lhs = 0.0;  // ||f||_s^2
    double rhs = 0.0;  // 2^{2s} Gamma((n+2s+4)/2)/Gamma((n-2s+4)/2) * weighted L^2
    double gap = 0.0;
};

struct QuotientResult {
    std::vector<double> epsilons;
    std::vector<double> quotients;
    double extrapolated = 0.0;
    double limit = 0.0;  // closed form S gamma_k / gamma_1
};

/** Flat key-value serialization of a DeficitReport. */
inline report::Json to_json(const DeficitReport& rep) {
    auto j = report::Json::object();
    j.set("n", rep.params.n)
        .set("s", rep.params.s)
        .set("sobolev_norm_sq", rep.sobolev_norm_sq)
        .set("lq_norm", rep.lq_norm)
        .set("F_value", rep.F_value)
        .set("hls_energy", rep.hls_energy)
        .set("lp_norm", rep.lp_norm)
        .set("G_value", rep.G_value)
        .set("quotient", rep.quotient)
        .set("band_limit", rep.band_limit)
        .set("quad_size", rep.quad_size)
        .set("projection_tail", rep.projection_tail);
    return j;
}

/** Closed-form limit of the linearization quotient along an H_k direction. */
inline double quotient_limit(const Params& P, int k) {
    return sobolev_constant(P) * gamma_k(P, k) / gamma_k(P, 1);
}

class LiftedFunctionals {
public:
    explicit LiftedFunctionals(const Params& params, int input_band = 64, int quad_size = 600)
        : P_(params),
          basis_(params.n, std::min(quad_size / 2 - 2, 256), quad_size),
          input_band_(input_band),
          S_(sobolev_constant(params)),
          area_(sphere_area(params.n)) {
        if (input_band > basis_.band_limit())
            throw std::domain_error("LiftedFunctionals: input band exceeds the projection band");
        gam_.resize(basis_.band_limit() + 1);
        for (int k = 0; k <= basis_.band_limit(); ++k) gam_[k] = gamma_k(P_, k);
    }

    const Params& params() const { return P_; }
    const ZonalBasis& basis() const { return basis_; }
    double S() const { return S_; }
    double area() const { return area_; }
    int input_band() const { return input_band_; }
    double gamma(int k) const { return gam_[k]; }

    /** q-lift of u_*: the single constant mode 2^{-(n-2s)/2}. */
    ZonalFunction ustar_lift() const {
        return ZonalFunction::from_coeffs(P_.n, {std::pow(2.0, -0.5 * P_.lambda)}, P_.q);
    }

    /** ||u||_s^2 from the q-lift. */
    double sobolev_norm_sq(const ZonalFunction& F) const {
        require_tail(F, "sobolev_norm_sq");
        double acc = 0.0;
        for (int k = 0; k <= F.band_limit; ++k) acc += F.coeffs[k] * F.coeffs[k] / gam_[k];
        return area_ * acc;
    }

    /** int u^q dx (also J of the flow section). */
    double uq_integral(const ZonalFunction& F) const {
        const std::vector<double> nodal = positive_values(F, "uq_integral");
        double acc = 0.0;
        for (int i = 0; i < basis_.size(); ++i)
            acc += basis_.weights()[i] * std::pow(nodal[i], P_.q);
        return area_ * acc;
    }

    /** ||u||_q^2. */
    double lq_norm_sq(const ZonalFunction& F) const {
        return std::pow(uq_integral(F), 2.0 / P_.q);
    }

    /** Pointwise power of a lift, reprojected at the full band.  The p-lift
     *  of u^r is power_lift(F_q, r). */
    ZonalFunction power_lift(const ZonalFunction& F, double expo) const {
        const std::vector<double> nodal = positive_values(F, "power_lift");
        std::vector<double> powed(nodal.size());
        for (std::size_t i = 0; i < nodal.size(); ++i) powed[i] = std::pow(nodal[i], expo);
        std::vector<double> c = basis_.project(powed);
        ZonalFunction G = ZonalFunction::from_coeffs(P_.n, std::move(c), P_.q / expo);
        double total = G.l2_norm_sq(), tail = 0.0;
        const int k0 = basis_.band_limit() - basis_.band_limit() / 10;
        for (int k = k0; k <= G.band_limit; ++k) tail += G.coeffs[k] * G.coeffs[k];
        G.projection_tail = (total > 0.0) ? tail / total : 0.0;
        return G;
    }

    ZonalFunction v_lift(const ZonalFunction& F) const { return power_lift(F, P_.r); }

    /** int g (-Delta)^{-s} g from the p-lift. */
    double hls_energy(const ZonalFunction& G) const {
        require_tail(G, "hls_energy");
        double acc = 0.0;
        for (int k = 0; k <= G.band_limit; ++k) acc += gam_[k] * G.coeffs[k] * G.coeffs[k];
        return area_ * acc;
    }

    /** int v^p dx from the p-lift. */
    double vp_integral(const ZonalFunction& G) const {
        const std::vector<double> nodal = positive_values(G, "vp_integral");
        double acc = 0.0;
        for (int i = 0; i < basis_.size(); ++i)
            acc += basis_.weights()[i] * std::pow(nodal[i], P_.p);
        return area_ * acc;
    }

    /** ||v||_p^2. */
    double lp_norm_sq(const ZonalFunction& G) const {
        return std::pow(vp_integral(G), 2.0 / P_.p);
    }

    /** Sobolev deficit F[u] = S ||u||_s^2 - ||u||_q^2. */
    double F_deficit(const ZonalFunction& F) const {
        return S_ * sobolev_norm_sq(F) - lq_norm_sq(F);
    }

    /** HLS deficit G[v] = S ||v||_p^2 - int v (-Delta)^{-s} v. */
    double G_deficit(const ZonalFunction& G) const {
        return S_ * lp_norm_sq(G) - hls_energy(G);
    }

    /** L^2(R^n) pairing int u v dx of a q-lift with a p-lift (Parseval). */
    double cross_pairing(const ZonalFunction& F, const ZonalFunction& G) const {
        const int kmax = std::min(F.band_limit, G.band_limit);
        double acc = 0.0;
        for (int k = 0; k <= kmax; ++k) acc += F.coeffs[k] * G.coeffs[k];
        return area_ * acc;
    }

    /** Bilinear Sobolev pairing int f (-Delta)^s g dx of two q-lifts. */
    double sobolev_pairing(const ZonalFunction& F, const ZonalFunction& G) const {
        const int kmax = std::min(F.band_limit, G.band_limit);
        double acc = 0.0;
        for (int k = 0; k <= kmax; ++k) acc += F.coeffs[k] * G.coeffs[k] / gam_[k];
        return area_ * acc;
    }

    /** Weighted pairing int f g (1+|x|^2)^{-2s} dx of two q-lifts. */
    double weighted_pairing(const ZonalFunction& F, const ZonalFunction& G) const {
        const int kmax = std::min(F.band_limit, G.band_limit);
        double acc = 0.0;
        for (int k = 0; k <= kmax; ++k) acc += F.coeffs[k] * G.coeffs[k];
        return std::pow(2.0, -2.0 * P_.s) * area_ * acc;
    }

    /** int f^2 (1+|x|^2)^{-2s} dx. */
    double weighted_l2(const ZonalFunction& F) const { return weighted_pairing(F, F); }

    DeficitReport deficit_report(const ZonalFunction& F) const {
        DeficitReport rep;
        rep.params = P_;
        rep.sobolev_norm_sq = sobolev_norm_sq(F);
        const double Nq = uq_integral(F);
        rep.lq_norm = std::pow(Nq, 2.0 / P_.q);
        rep.F_value = S_ * rep.sobolev_norm_sq - rep.lq_norm;
        const ZonalFunction G = v_lift(F);
        rep.hls_energy = hls_energy(G);
        rep.lp_norm = lp_norm_sq(G);
        rep.G_value = S_ * rep.lp_norm - rep.hls_energy;
        const double denom = std::pow(Nq, 4.0 * P_.s / P_.n) * rep.F_value;
        rep.quotient = (denom != 0.0) ? rep.G_value / denom
                                      : std::numeric_limits<double>::quiet_NaN();
        rep.band_limit = F.band_limit;
        rep.quad_size = basis_.size();
        rep.projection_tail = G.projection_tail;
        return rep;
    }

    /** Theorem-1 check: G[u^r] <= C ||u||_q^{8s/(n-2s)} F[u], with margin. */
    VerifyResult verify_main_inequality(const ZonalFunction& F, double C,
                                        double tol = 1e-9) const {
        const double sob = sobolev_norm_sq(F);
        const double Nq = uq_integral(F);
        const double lq2 = std::pow(Nq, 2.0 / P_.q);
        const double Fdef = S_ * sob - lq2;
        const ZonalFunction G = v_lift(F);
        const double Gdef = S_ * lp_norm_sq(G) - hls_energy(G);
        const double weight = std::pow(Nq, 4.0 * P_.s / P_.n);
        VerifyResult res;
        res.margin = C * weight * Fdef - Gdef;
        res.scale = S_ * weight * S_ * sob;
        res.rel_margin = res.margin / res.scale;
        res.holds = res.rel_margin >= -tol;
        return res;
    }

    /** Residual of the completion-of-the-square identity:
     *  the three-term expansion against the mode-by-mode synthesis of
     *  | S A grad (-D)^{(s-1)/2} u - grad (-D)^{-(1+s)/2} v |^2. */
    double square_identity_residual(const ZonalFunction& F) const {
        const double sob = sobolev_norm_sq(F);
        const double Nq = uq_integral(F);
        const double A = std::pow(Nq, 2.0 * P_.s / P_.n);
        const ZonalFunction G = v_lift(F);
        const double hls = hls_energy(G);

        const double route_a = S_ * S_ * A * A * sob - 2.0 * S_ * A * Nq + hls;

        double route_b = 0.0;
        for (int k = 0; k <= basis_.band_limit(); ++k) {
            const double ck = (k <= F.band_limit) ? F.coeffs[k] : 0.0;
            const double bk = (k <= G.band_limit) ? G.coeffs[k] : 0.0;
            const double sg = std::sqrt(gam_[k]);
            const double term = S_ * A * ck / sg - sg * bk;
            route_b += term * term;
        }
        route_b *= area_;

        const double scale = S_ * S_ * A * A * sob + 2.0 * S_ * A * Nq + hls;
        return std::abs(route_a - route_b) / scale;
    }

    /** Quadratic form F[f] of the linearized Sobolev deficit;
     *  precondition: f orthogonal to u_* in the weighted pairing. */
    double linearized_F(const ZonalFunction& f) const {
        require_mean_orthogonal(f, "linearized_F");
        double acc = 0.0;
        for (int k = 1; k <= f.band_limit; ++k)
            acc += (1.0 / gam_[k] - 1.0 / gam_[1]) * f.coeffs[k] * f.coeffs[k];
        return area_ * acc;
    }

    /** Quadratic form G[f] of the linearized HLS deficit. */
    double linearized_G(const ZonalFunction& f) const {
        require_mean_orthogonal(f, "linearized_G");
        double acc = 0.0;
        for (int k = 1; k <= f.band_limit; ++k)
            acc += (gam_[1] - gam_[k]) * f.coeffs[k] * f.coeffs[k];
        return std::pow(2.0, -4.0 * P_.s) * area_ * acc;
    }

    /** Poincare inequality for f orthogonal to f_0 .. f_{n+1}:
     *  ||f||_s^2 >= 2^{2s} Gamma((n+2s+4)/2)/Gamma((n-2s+4)/2) * weighted L^2. */
    PoincareResult poincare_check(const ZonalFunction& f, double slack = 1e-10) const {
        require_mean_orthogonal(f, "poincare_check");
        require_h1_orthogonal(f, "poincare_check");
        PoincareResult res;
        res.lhs = sobolev_norm_sq(f);
        res.rhs = (1.0 / gam_[2]) * std::pow(2.0, 2.0 * P_.s) * weighted_l2(f);
        res.gap = res.lhs - res.rhs;
        res.holds = res.gap >= -slack * std::max(res.lhs, res.rhs);
        return res;
    }

    /** Linearization quotient along an H_k direction evaluated at finite
     *  epsilon and Richardson-extrapolated to zero. */
    QuotientResult quotient_lower_bound(int mode, std::span<const double> epsilons) const {
        if (mode < 2)
            throw PreconditionError("quotient_lower_bound: direction must live in H_k, k >= 2");
        if (epsilons.size() < 2)
            throw std::invalid_argument("quotient_lower_bound: need at least two epsilon values");
        const double c0 = std::pow(2.0, -0.5 * P_.lambda);
        QuotientResult res;
        res.limit = quotient_limit(P_, mode);
        for (double eps : epsilons) {
            std::vector<double> c(mode + 1, 0.0);
            c[0] = c0;
            c[mode] = eps * c0;
            const ZonalFunction F = ZonalFunction::from_coeffs(P_.n, c, P_.q);
            // the perturbation direction satisfies the orthogonality ledger:
            // its k = 0 and k = 1 coefficients vanish identically
            const DeficitReport rep = deficit_report(F);
            res.epsilons.push_back(eps);
            res.quotients.push_back(rep.quotient);
        }
        // expansion validity: successive differences must shrink
        for (std::size_t j = 0; j + 2 < res.quotients.size(); ++j) {
            const double d0 = std::abs(res.quotients[j + 1] - res.quotients[j]);
            const double d1 = std::abs(res.quotients[j + 2] - res.quotients[j + 1]);
            if (d1 > d0)
                throw std::range_error("quotient_lower_bound: epsilon too large, expansion invalid");
        }
        // Richardson for a leading O(eps) error, nodes assumed halving
        std::vector<double> T = res.quotients;
        const std::size_t m = T.size();
        for (std::size_t level = 1; level < m; ++level) {
            const double w = std::pow(2.0, static_cast<double>(level));
            for (std::size_t i = m - 1; i >= level; --i) {
                T[i] = (w * T[i] - T[i - 1]) / (w - 1.0);
                if (i == level) break;
            }
        }
        res.extrapolated = T[m - 1];
        return res;
    }

    /** Nodal values of a lift (positivity-checked). */
    std::vector<double> positive_values(const ZonalFunction& F, const char* who) const {
        std::vector<double> nodal = basis_.values(F.coeffs);
        for (double v : nodal) {
            if (!(v > 0.0))
                throw PositivityError(std::string(who) + ": lift is not positive at a quadrature node");
        }
        return nodal;
    }

private:
    void require_tail(const ZonalFunction& F, const char* who) const {
        if (F.projection_tail > 1e-6)
            throw RegularityError(std::string(who) + ": spectral tail too large for the quadratic form");
    }

    void require_mean_orthogonal(const ZonalFunction& f, const char* who) const {
        const double norm = std::sqrt(f.l2_norm_sq());
        if (std::abs(f.coeffs[0]) > 1e-10 * (norm + 1e-300))
            throw PreconditionError(std::string(who) + ": f is not orthogonal to u_* in the weighted pairing");
    }

    void require_h1_orthogonal(const ZonalFunction& f, const char* who) const {
        const double norm = std::sqrt(f.l2_norm_sq());
        if (f.band_limit >= 1 && std::abs(f.coeffs[1]) > 1e-10 * (norm + 1e-300))
            throw PreconditionError(std::string(who) + ": f is not orthogonal to the H_1 directions");
    }

    Params P_;
    ZonalBasis basis_;
    int input_band_;
    double S_;
    double area_;
    std::vector<double> gam_;
};

} // namespace sharpineq

#endif
