#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sharpineq/quadrature.hpp"
#include "sharpineq/special.hpp"

using namespace sharpineq;
using Catch::Approx;

namespace {

// Even moments of dnu_n: integral of t^{2j} = B(j+1/2, n/2)/B(1/2, n/2),
// evaluated through log-Gamma -- the independent oracle for exactness.
double even_moment(int n, int j) {
    const double num = log_gamma(j + 0.5) + log_gamma(0.5 * n) - log_gamma(j + 0.5 + 0.5 * n);
    const double den = log_gamma(0.5) + log_gamma(0.5 * n) - log_gamma(0.5 + 0.5 * n);
    return std::exp(num - den);
}

} // namespace

TEST_CASE("normalized sphere quadrature: weights sum to one") {
    for (int n = 1; n <= 6; ++n) {
        const Quadrature quad = Quadrature::build(n, 64);
        double sum = 0.0;
        for (double w : quad.weights) sum += w;
        CHECK(sum == Approx(1.0).margin(1e-14));
        for (double t : quad.nodes) {
            CHECK(t > -1.0);
            CHECK(t < 1.0);
        }
    }
}

TEST_CASE("polynomial exactness up to degree 2Q-1") {
    for (int n : {1, 2, 3, 5}) {
        const int q = 24;
        const Quadrature quad = Quadrature::build(n, q);
        for (int j = 0; j <= q - 1; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < quad.nodes.size(); ++i)
                acc += quad.weights[i] * std::pow(quad.nodes[i], 2 * j);
            CHECK(acc == Approx(even_moment(n, j)).epsilon(5e-13));
            // odd moments vanish by symmetry
            double odd = 0.0;
            for (std::size_t i = 0; i < quad.nodes.size(); ++i)
                odd += quad.weights[i] * std::pow(quad.nodes[i], 2 * j + 1);
            CHECK(odd == Approx(0.0).margin(1e-13));
        }
    }
}

TEST_CASE("asymmetric Gauss-Jacobi reproduces Beta-function moments") {
    // integral (1-t)^a (1+t)^b t^m dt has the closed form via substitution
    // u = (1+t)/2: 2^{a+b+1} sum over the binomial expansion of (2u-1)^m.
    const double a = -0.5, b = 0.5;
    const GaussRule rule = gauss_jacobi(20, a, b);
    auto beta_moment = [&](int m) {
        double acc = 0.0;
        double binom = 1.0;
        for (int j = 0; j <= m; ++j) {
            const double term = binom * std::pow(2.0, j) * std::pow(-1.0, m - j)
                * std::exp(log_gamma(b + j + 1.0) + log_gamma(a + 1.0) - log_gamma(a + b + j + 2.0));
            acc += term;
            binom *= static_cast<double>(m - j) / (j + 1.0);
        }
        return acc * std::pow(2.0, a + b + 1.0);
    };
    for (int m = 0; m <= 12; ++m) {
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            acc += rule.weights[i] * std::pow(rule.nodes[i], m);
        CHECK(acc == Approx(beta_moment(m)).margin(1e-13));
    }
}

TEST_CASE("zonal basis is orthonormal under the quadrature") {
    for (int n : {1, 2, 3, 4}) {
        const ZonalBasis basis(n, 24, 96);
        for (int j = 0; j <= 24; ++j) {
            for (int k = j; k <= 24; ++k) {
                double acc = 0.0;
                for (int i = 0; i < basis.size(); ++i)
                    acc += basis.weights()[i] * basis.basis(j, i) * basis.basis(k, i);
                CHECK(acc == Approx(j == k ? 1.0 : 0.0).margin(2e-13));
            }
        }
    }
}

TEST_CASE("basis recurrence agrees with the cached table and the free evaluator") {
    const ZonalBasis basis(3, 16, 64);
    for (int k : {0, 1, 5, 16}) {
        for (int i : {0, 10, 33, 63}) {
            const double t = basis.nodes()[i];
            CHECK(basis.basis_at(k, t) == Approx(basis.basis(k, i)).margin(1e-13));
            CHECK(zonal_basis_value(3, k, t) == Approx(basis.basis(k, i)).margin(1e-13));
        }
        CHECK(basis.basis_at(k, 1.0) > 0.0);  // sign convention
    }
}

TEST_CASE("projection round trip and Parseval") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    for (int n : {1, 2, 4}) {
        const ZonalBasis basis(n, 32, 128);
        std::vector<double> c(33);
        for (double& x : c) x = gauss(rng);
        const std::vector<double> nodal = basis.values(c);
        const std::vector<double> back = basis.project(nodal);
        for (int k = 0; k <= 32; ++k) CHECK(back[k] == Approx(c[k]).margin(1e-12));

        // Parseval: quadrature of F^2 equals the coefficient sum
        std::vector<double> sq(nodal.size());
        for (std::size_t i = 0; i < nodal.size(); ++i) sq[i] = nodal[i] * nodal[i];
        double csum = 0.0;
        for (double x : c) csum += x * x;
        CHECK(basis.integrate(sq) == Approx(csum).epsilon(1e-12));
    }
}

TEST_CASE("quadrature rejects invalid parameters") {
    CHECK_THROWS_AS(gauss_jacobi(0, 0.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(gauss_jacobi(8, -1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(Quadrature::build(0, 8), std::domain_error);
    CHECK_THROWS_AS(ZonalBasis(2, 16, 8), std::domain_error);
}
