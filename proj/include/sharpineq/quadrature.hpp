#ifndef SHARPINEQ_QUADRATURE_HPP
#define SHARPINEQ_QUADRATURE_HPP

/*
 * Gauss-Jacobi quadrature on [-1, 1] and the orthonormal zonal
 * (Gegenbauer) basis of S^n.
 *
 * Everything on the sphere is integrated against the probability
 * measure dnu_n(t) = c_n (1-t^2)^{(n-2)/2} dt, the marginal of the
 * normalized surface measure dsigma along the polar coordinate
 * t = omega_{n+1}.  Nodes/weights come from the Golub-Welsch
 * eigenproblem of the Jacobi matrix; the tridiagonal eigensolve is
 * delegated to Eigen.
 */

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "sharpineq/errors.hpp"
#include "sharpineq/special.hpp"

namespace sharpineq {

/** Total mass of the weight (1-t)^a (1+t)^b on [-1,1]. */
inline double jacobi_mu0(double a, double b) {
    return std::exp((a + b + 1.0) * std::log(2.0)
                    + log_gamma(a + 1.0) + log_gamma(b + 1.0) - log_gamma(a + b + 2.0));
}

namespace detail {

/** Monic three-term recurrence t p_k = p_{k+1} + A_k p_k + B_k p_{k-1}
 *  for the Jacobi weight (1-t)^a (1+t)^b. */
inline void jacobi_recurrence(int count, double a, double b,
                              std::vector<double>& A, std::vector<double>& B) {
    A.assign(count, 0.0);
    B.assign(count, 0.0);
    if (count == 0) return;
    A[0] = (b - a) / (a + b + 2.0);
    for (int k = 1; k < count; ++k) {
        const double d = 2.0 * k + a + b;
        A[k] = (b * b - a * a) / (d * (d + 2.0));
        if (k == 1) {
            // (k+a+b) cancels against (2k+a+b-1); written cancelled so a+b = -1 is safe
            B[k] = 4.0 * (1.0 + a) * (1.0 + b) / ((a + b + 2.0) * (a + b + 2.0) * (a + b + 3.0));
        } else {
            B[k] = 4.0 * k * (k + a) * (k + b) * (k + a + b) / (d * d * (d + 1.0) * (d - 1.0));
        }
    }
}

} // namespace detail

/** Gauss-Jacobi rule: integrates f against (1-t)^a (1+t)^b exactly for
 *  polynomial f of degree <= 2q-1. */
struct GaussRule {
    double a = 0.0;
    double b = 0.0;
    std::vector<double> nodes;
    std::vector<double> weights;

    double integrate(const std::vector<double>& values) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * values[i];
        return acc;
    }
};

inline GaussRule gauss_jacobi(int q, double a, double b) {
    if (q < 1)
        throw std::domain_error("gauss_jacobi: need at least one node");
    if (!(a > -1.0) || !(b > -1.0))
        throw std::domain_error("gauss_jacobi: exponents must be > -1");
    std::vector<double> A, B;
    detail::jacobi_recurrence(q, a, b, A, B);
    Eigen::VectorXd diag(q), sub(q > 1 ? q - 1 : 1);
    for (int k = 0; k < q; ++k) diag[k] = A[k];
    for (int k = 1; k < q; ++k) sub[k - 1] = std::sqrt(B[k]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub.head(std::max(q - 1, 0)));
    if (es.info() != Eigen::Success)
        throw AccuracyError("gauss_jacobi: tridiagonal eigensolve failed");
    GaussRule rule;
    rule.a = a;
    rule.b = b;
    rule.nodes.resize(q);
    rule.weights.resize(q);
    const double mu0 = jacobi_mu0(a, b);
    for (int i = 0; i < q; ++i) {
        rule.nodes[i] = es.eigenvalues()[i];
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

/** Shared cache: rules are immutable after construction. */
inline const GaussRule& cached_gauss_jacobi(int q, double a, double b) {
    using Key = std::tuple<int, double, double>;
    static std::map<Key, std::unique_ptr<GaussRule>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto& slot = cache[Key{q, a, b}];
    if (!slot) slot = std::make_unique<GaussRule>(gauss_jacobi(q, a, b));
    return *slot;
}

/** Quadrature for zonal integrands on S^n: nodes in (-1,1), weights for
 *  dnu_n normalized so that the weights sum to 1. */
struct Quadrature {
    int n = 2;
    std::vector<double> nodes;
    std::vector<double> weights;

    static Quadrature build(int n, int q) {
        if (n < 1)
            throw std::domain_error("Quadrature: n must be >= 1");
        const double alpha = 0.5 * (n - 2);
        const GaussRule& rule = cached_gauss_jacobi(q, alpha, alpha);
        const double mu0 = jacobi_mu0(alpha, alpha);
        Quadrature quad;
        quad.n = n;
        quad.nodes = rule.nodes;
        quad.weights = rule.weights;
        for (double& w : quad.weights) w /= mu0;
        return quad;
    }

    double integrate(const std::vector<double>& values) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * values[i];
        return acc;
    }
};

/** Orthonormal C^_k(t) of degree k on S^n, evaluated by the recurrence
 *  alone (no quadrature table). */
inline double zonal_basis_value(int n, int k, double t) {
    if (k < 0)
        throw std::domain_error("zonal_basis_value: degree must be >= 0");
    std::vector<double> A, B;
    detail::jacobi_recurrence(k + 1, 0.5 * (n - 2), 0.5 * (n - 2), A, B);
    double pm = 0.0, pk = 1.0;
    for (int j = 0; j < k; ++j) {
        const double bj = (j >= 1) ? std::sqrt(B[j]) : 0.0;
        const double pn = (t * pk - bj * pm) / std::sqrt(B[j + 1]);
        pm = pk;
        pk = pn;
    }
    return pk;
}

/** Orthonormal zonal basis C^_0..C^_K of L^2(S^n, dsigma) cached at the
 *  nodes of a Quadrature.
 *
 *  C^_k is the degree-k Gegenbauer polynomial of index (n-1)/2 rescaled
 *  so that its square integrates to 1 against dnu_n, with C^_k(1) > 0.
 *  The projection of a zonal F onto the harmonic subspace H_k is the
 *  single term c_k C^_k.
 */
class ZonalBasis {
public:
    ZonalBasis(int n, int band_limit, int quad_size)
        : n_(n), K_(band_limit), quad_(Quadrature::build(n, quad_size)) {
        if (band_limit < 0)
            throw std::domain_error("ZonalBasis: band limit must be >= 0");
        if (2 * band_limit + 2 > 2 * quad_size - 1)
            throw std::domain_error("ZonalBasis: quadrature too small for the band limit");
        const double alpha = 0.5 * (n - 2);
        detail::jacobi_recurrence(K_ + 1, alpha, alpha, recA_, recB_);
        const int q = static_cast<int>(quad_.nodes.size());
        table_.assign(static_cast<std::size_t>(K_ + 1) * q, 0.0);
        for (int i = 0; i < q; ++i) {
            eval_column(quad_.nodes[i], [&](int k, double v) { table_[idx(k, i)] = v; });
        }
    }

    int n() const { return n_; }
    int band_limit() const { return K_; }
    int size() const { return static_cast<int>(quad_.nodes.size()); }
    const Quadrature& quad() const { return quad_; }
    const std::vector<double>& nodes() const { return quad_.nodes; }
    const std::vector<double>& weights() const { return quad_.weights; }
    double basis(int k, int i) const { return table_[idx(k, i)]; }

    /** C^_k(t) anywhere via the orthonormal recurrence. */
    double basis_at(int k, double t) const {
        if (k < 0 || k > K_)
            throw std::domain_error("ZonalBasis::basis_at: degree out of range");
        double out = 0.0;
        eval_column(t, [&](int j, double v) { if (j == k) out = v; });
        return out;
    }

    /** Nodal values of sum_k coeffs[k] C^_k. */
    std::vector<double> values(std::span<const double> coeffs) const {
        const int q = size();
        const int kmax = std::min<int>(K_, static_cast<int>(coeffs.size()) - 1);
        std::vector<double> v(q, 0.0);
        for (int k = 0; k <= kmax; ++k) {
            const double c = coeffs[k];
            if (c == 0.0) continue;
            for (int i = 0; i < q; ++i) v[i] += c * table_[idx(k, i)];
        }
        return v;
    }

    /** Coefficients c_k = integral of (nodal values) * C^_k dnu, k = 0..K. */
    std::vector<double> project(std::span<const double> nodal) const {
        const int q = size();
        if (static_cast<int>(nodal.size()) != q)
            throw std::invalid_argument("ZonalBasis::project: nodal size mismatch");
        std::vector<double> c(K_ + 1, 0.0);
        for (int k = 0; k <= K_; ++k) {
            double acc = 0.0;
            for (int i = 0; i < q; ++i) acc += quad_.weights[i] * nodal[i] * table_[idx(k, i)];
            c[k] = acc;
        }
        return c;
    }

    double integrate(std::span<const double> nodal) const {
        double acc = 0.0;
        for (int i = 0; i < size(); ++i) acc += quad_.weights[i] * nodal[i];
        return acc;
    }

private:
    std::size_t idx(int k, int i) const { return static_cast<std::size_t>(k) * size() + i; }

    template <class Emit>
    void eval_column(double t, Emit&& emit) const {
        // orthonormal recurrence: p_{k+1} = (t p_k - sqrt(B_k) p_{k-1}) / sqrt(B_{k+1})
        double pm = 0.0, pk = 1.0;
        emit(0, pk);
        for (int k = 0; k < K_; ++k) {
            const double bk = (k >= 1) ? std::sqrt(recB_[k]) : 0.0;
            const double bk1 = std::sqrt(recB_[k + 1]);
            const double pn = (t * pk - bk * pm) / bk1;
            pm = pk;
            pk = pn;
            emit(k + 1, pk);
        }
    }

    int n_;
    int K_;
    Quadrature quad_;
    std::vector<double> recA_, recB_;
    std::vector<double> table_;
};

} // namespace sharpineq

#endif
