#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sharpineq/corpus.hpp"
#include "sharpineq/mto.hpp"

using namespace sharpineq;
using Catch::Approx;

TEST_CASE("MTO deficit: optimizers and Taylor expansion") {
    for (int n : {2, 3}) {
        const MtoFunctionals mto(n);

        // F = 0 is an optimizer
        CHECK(mto.mto_deficit(ZonalFunction::from_coeffs(n, {0.0})) == Approx(0.0).margin(1e-14));

        // the conformal family F = -n log|1 - <xi, zeta>| + C with zeta on the
        // axis, |zeta| = 0.3, is a zonal equality case
        const double z = 0.3;
        std::vector<double> nodal(mto.basis().size());
        for (int i = 0; i < mto.basis().size(); ++i)
            nodal[i] = -n * std::log(1.0 - z * mto.basis().nodes()[i]) + 0.2;
        const ZonalFunction Fz = ZonalFunction::from_coeffs(n, mto.basis().project(nodal));
        CHECK(std::abs(mto.mto_deficit(Fz)) <= 1e-7);

        // single H_2 mode of small amplitude: deficit/eps^2 -> (D_2/n - 1)/2
        const double eps = 1e-3;
        const ZonalFunction F2 = ZonalFunction::from_coeffs(n, {0.0, 0.0, eps});
        const double expect = 0.5 * (mto_eigenvalue(n, 2) / n - 1.0);
        CHECK(mto.mto_deficit(F2) / (eps * eps) == Approx(expect).epsilon(0.01));
    }
}

TEST_CASE("MTO deficit is nonnegative on a random corpus") {
    for (int n : {2, 3}) {
        const MtoFunctionals mto(n);
        const auto corpus = random_sphere_fields(mto.basis(), 321, 50, 16, 2.5, false);
        for (const ZonalFunction& F : corpus) {
            CHECK(mto.mto_deficit(F) >= -1e-10);
        }
    }
}

TEST_CASE("logarithmic HLS deficit") {
    for (int n : {2, 3}) {
        const MtoFunctionals mto(n);

        // constant density: the A(n) identity makes the deficit vanish
        CHECK(mto.log_hls_deficit(ZonalFunction::from_coeffs(n, {1.0})) == Approx(0.0).margin(1e-12));

        // perturbations of the constant density: positive, quadratic in amplitude
        const double d1 = mto.log_hls_deficit(ZonalFunction::from_coeffs(n, {1.0, 0.0, 0.04}));
        const double d2 = mto.log_hls_deficit(ZonalFunction::from_coeffs(n, {1.0, 0.0, 0.02}));
        CHECK(d1 > 0.0);
        CHECK(d2 > 0.0);
        CHECK(d1 / d2 == Approx(4.0).epsilon(0.05));

        CHECK_THROWS_AS(mto.log_hls_deficit(ZonalFunction::from_coeffs(n, {1.0, 2.0})), PreconditionError);
        CHECK_THROWS_AS(mto.log_hls_deficit(ZonalFunction::from_coeffs(n, {2.0})), PreconditionError);
    }
}

TEST_CASE("Euclidean log-HLS at the reference density") {
    // f = mu on R^2: int f log f + 2 double-int f log|x-y| f + (1 + log pi) = 0
    const MtoFunctionals mto(2);
    const ZonalBasis& basis = mto.basis();
    double flogf = 0.0;
    for (int i = 0; i < basis.size(); ++i) {
        const double logmu = 2.0 * std::log(1.0 - basis.nodes()[i]) - std::log(4.0 * M_PI);
        flogf += basis.weights()[i] * logmu;
    }
    // double integral via the pulled-back chordal kernel at e^F = 1
    double elogj = 0.0;
    for (int i = 0; i < basis.size(); ++i)
        elogj += basis.weights()[i] * 2.0 * std::log(1.0 - basis.nodes()[i]);
    const double double_log = 0.5 * log_kernel_mean(2) - 0.5 * elogj;
    CHECK(flogf + 2.0 * double_log + 1.0 + std::log(M_PI) == Approx(0.0).margin(1e-12));
}

TEST_CASE("improved MTO inequality at C_n = 1 on a corpus") {
    for (int n : {2, 3}) {
        const MtoFunctionals mto(n);
        const auto corpus = random_sphere_fields(mto.basis(), 98765, 100, 16, 2.5, false);
        for (const ZonalFunction& F : corpus) {
            const MtoReport rep = mto.improved_mto_margin(F, 1.0);
            CHECK(rep.margin >= -1e-9);
            CHECK(rep.entropy >= -1e-12);  // Jensen
        }
        // constants are equality cases and have zero entropy
        const MtoReport flat = mto.improved_mto_margin(ZonalFunction::from_coeffs(n, {0.7}), 1.0);
        CHECK(flat.margin == Approx(0.0).margin(1e-12));
        CHECK(flat.entropy == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("margin shift covariance F -> F + c") {
    const MtoFunctionals mto(2);
    const auto corpus = random_sphere_fields(mto.basis(), 5150, 5, 12, 2.0, false);
    for (const ZonalFunction& F : corpus) {
        for (double Cn : {0.4, 1.0}) {
            const double base = mto.improved_mto_margin(F, Cn).margin;
            ZonalFunction shifted = F;
            shifted.coeffs[0] += 0.8;
            const double after = mto.improved_mto_margin(shifted, Cn).margin;
            CHECK(after == Approx(std::exp(1.6) * base).epsilon(1e-11));
        }
    }
}

TEST_CASE("quadratic expansion of the margin along a single mode") {
    // margin(eps F_k, C)/eps^2 -> [C (x_k - 1) - (1 - 1/x_k)] / 2, x_k = D_k/n
    for (int n : {2, 4}) {
        const MtoFunctionals mto(n);
        for (int k : {2, 3}) {
            const double x = mto_eigenvalue(n, k) / n;
            for (double C : {0.0, 0.5, 1.0}) {
                const double expect = 0.5 * (C * (x - 1.0) - (1.0 - 1.0 / x));
                const double eps = 5e-4;
                std::vector<double> c(k + 1, 0.0);
                c[k] = eps;
                const double m = mto.improved_mto_margin(ZonalFunction::from_coeffs(n, c), C).margin;
                CHECK(m / (eps * eps) == Approx(expect).margin(5e-3 * std::abs(expect) + 1e-5));
            }
        }
    }
}

TEST_CASE("best-constant lower bound 1/(n+1)") {
    CHECK(MtoFunctionals::constant_lower_bound(2) == Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(MtoFunctionals::constant_lower_bound(3) == Approx(0.25).epsilon(1e-13));

    for (int n = 2; n <= 5; ++n) {
        // the k = 2 ratio is (1 - 2/(n+1)) / ((n+1)/2 - 1) ... = 1/(n+1), and is the argmax
        const double x2 = mto_eigenvalue(n, 2) / n;
        CHECK((1.0 - 1.0 / x2) / (x2 - 1.0) == Approx(1.0 / (n + 1.0)).epsilon(1e-13));
        CHECK(MtoFunctionals::constant_lower_bound(n) == Approx(1.0 / (n + 1.0)).epsilon(1e-13));

        // numerical route through finite-eps margins
        const MtoFunctionals mto(n);
        const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
        CHECK(mto.lower_bound_numeric(2, eps) == Approx(1.0 / (n + 1.0)).epsilon(0.01));
    }
}

TEST_CASE("endpoint differentiation toward s = n/2") {
    const std::vector<double> ts{0.02, 0.01, 0.005};

    // F = 0: both families sit exactly at their limits
    {
        const MtoFunctionals mto(2);
        const ZonalFunction zero = ZonalFunction::from_coeffs(2, {0.0});
        for (const EndpointRow& row : mto.endpoint_limit_check(zero, ts)) {
            CHECK(row.err_sobolev <= 1e-10);
            CHECK(row.err_hls <= 1e-10);
        }
    }

    // fixed H_2 mode: distances halve with t (within +-20%)
    for (int n : {2, 3}) {
        const MtoFunctionals mto(n);
        const ZonalFunction F = ZonalFunction::from_coeffs(n, {0.0, 0.0, 0.5});
        const auto rows = mto.endpoint_limit_check(F, ts);
        REQUIRE(rows.size() == 3);
        for (int j = 0; j < 2; ++j) {
            const double ratio_s = rows[j + 1].err_sobolev / rows[j].err_sobolev;
            const double ratio_h = rows[j + 1].err_hls / rows[j].err_hls;
            CHECK(ratio_s == Approx(0.5).margin(0.1));
            CHECK(ratio_h == Approx(0.5).margin(0.1));
        }
    }

    // precondition and positivity errors
    const MtoFunctionals mto(2);
    CHECK_THROWS_AS(mto.endpoint_limit_check(ZonalFunction::from_coeffs(2, {1.0, 0.5}), ts),
                    PreconditionError);
    const ZonalFunction huge = ZonalFunction::from_coeffs(2, {0.0, 0.0, 120.0});
    CHECK_THROWS_AS(mto.endpoint_limit_check(huge, ts), PositivityError);
    const std::vector<double> bad_t{0.7};
    CHECK_THROWS_AS(mto.endpoint_limit_check(ZonalFunction::from_coeffs(2, {0.0, 0.0, 0.5}), bad_t),
                    std::domain_error);
}

TEST_CASE("Euclidean Onofri margin") {
    const MtoFunctionals mto(2);

    // f = 0: 1 + log pi cancels the constant-density log-HLS value
    for (double C2 : {0.2, 1.0}) {
        CHECK(mto.onofri_euclidean_margin(ZonalFunction::from_coeffs(2, {0.0}), C2)
              == Approx(0.0).margin(1e-12));
    }

    // pullback consistency: the Euclidean margin equals the sphere margin
    const auto corpus = random_sphere_fields(mto.basis(), 777, 30, 16, 2.0, false);
    for (const ZonalFunction& F : corpus) {
        for (double C2 : {0.35, 1.0}) {
            const double eu = mto.onofri_euclidean_margin(F, C2);
            const MtoReport sp = mto.improved_mto_margin(F, C2);
            const double scale = std::abs(sp.lhs) + std::abs(sp.rhs) + 1.0;
            CHECK(eu == Approx(sp.margin).margin(1e-9 * scale));
        }
        CHECK(mto.onofri_euclidean_margin(F, 1.0) >= -1e-8);
    }

    const MtoFunctionals mto3(3);
    CHECK_THROWS_AS(mto3.onofri_euclidean_margin(ZonalFunction::from_coeffs(3, {0.0}), 1.0),
                    std::domain_error);
}

TEST_CASE("the 1/3 lower bound is active for n = 2") {
    const MtoFunctionals mto(2);
    // at the critical constant the quadratic term vanishes and the cubic
    // term makes small positive H_2 perturbations violate the inequality
    bool violated = false;
    for (double eps : {0.02, 0.05, 0.1}) {
        const ZonalFunction F = ZonalFunction::from_coeffs(2, {0.0, 0.0, eps});
        if (mto.improved_mto_margin(F, 1.0 / 3.0).margin < 0.0) violated = true;
    }
    CHECK(violated);
    // while at C_n = 1 the same directions keep a positive margin
    for (double eps : {0.02, 0.05, 0.1}) {
        const ZonalFunction F = ZonalFunction::from_coeffs(2, {0.0, 0.0, eps});
        CHECK(mto.improved_mto_margin(F, 1.0).margin > 0.0);
    }
}
