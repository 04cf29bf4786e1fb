#ifndef SHARPINEQ_CORPUS_HPP
#define SHARPINEQ_CORPUS_HPP

/*
 * Seeded random test corpora.  Every function is deterministic in
 * (seed, index) so corpus items can be generated independently (and in
 * parallel) with reproducible output.
 */

#include <cstdint>
#include <random>
#include <vector>

#include "sharpineq/functionals.hpp"
#include "sharpineq/sphere.hpp"

namespace sharpineq {

inline std::mt19937_64 corpus_rng(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(seed * 0x9E3779B97F4A7C15ull + index * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull);
}

struct CorpusOptions {
    int count = 100;
    std::uint64_t seed = 20240901ull;
    int band = 16;
    double amplitude = 0.4;     // perturbation scale relative to the u_* mode
    double decay = 0.8;         // geometric coefficient decay
    double min_fraction = 0.3;  // enforced lower bound of the lift, relative to the u_* mode
};

/** One positive q-lift: u_* plus a random band-limited zonal perturbation,
 *  rescaled so the nodal minimum stays >= min_fraction * c0. */
inline ZonalFunction random_positive_lift(const LiftedFunctionals& ws, const CorpusOptions& opt,
                                          std::uint64_t index) {
    auto rng = corpus_rng(opt.seed, index);
    std::normal_distribution<double> gauss;
    const double c0 = std::pow(2.0, -0.5 * ws.params().lambda);
    std::vector<double> c(opt.band + 1, 0.0);
    c[0] = c0;
    double fade = opt.decay;
    for (int k = 1; k <= opt.band; ++k) {
        c[k] = opt.amplitude * c0 * fade * gauss(rng);
        fade *= opt.decay;
    }
    ZonalFunction F = ZonalFunction::from_coeffs(ws.params().n, c, ws.params().q);
    const std::vector<double> nodal = ws.basis().values(F.coeffs);
    double lowest = nodal[0];
    for (double v : nodal) lowest = std::min(lowest, v);
    const double floor = opt.min_fraction * c0;
    if (lowest < floor) {
        const double shrink = (c0 - floor) / (c0 - lowest);
        for (int k = 1; k <= opt.band; ++k) F.coeffs[k] *= shrink;
    }
    return F;
}

inline std::vector<ZonalFunction> random_positive_lifts(const LiftedFunctionals& ws,
                                                        const CorpusOptions& opt) {
    std::vector<ZonalFunction> out;
    out.reserve(opt.count);
    for (int i = 0; i < opt.count; ++i) out.push_back(random_positive_lift(ws, opt, i));
    return out;
}

/** One band-limited zonal field with sup-norm capped at sup_bound. */
inline ZonalFunction random_sphere_field(const ZonalBasis& basis, std::uint64_t seed,
                                         std::uint64_t index, int band, double sup_bound,
                                         bool zero_mean, double decay = 0.8) {
    auto rng = corpus_rng(seed, index);
    std::normal_distribution<double> gauss;
    std::vector<double> c(band + 1, 0.0);
    double fade = 1.0;
    for (int k = zero_mean ? 1 : 0; k <= band; ++k) {
        c[k] = fade * gauss(rng);
        fade *= decay;
    }
    ZonalFunction F = ZonalFunction::from_coeffs(basis.n(), c);
    const std::vector<double> nodal = basis.values(F.coeffs);
    double sup = 0.0;
    for (double v : nodal) sup = std::max(sup, std::abs(v));
    if (sup > sup_bound) {
        for (double& x : F.coeffs) x *= sup_bound / sup;
    }
    return F;
}

inline std::vector<ZonalFunction> random_sphere_fields(const ZonalBasis& basis, std::uint64_t seed,
                                                       int count, int band, double sup_bound,
                                                       bool zero_mean) {
    std::vector<ZonalFunction> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i)
        out.push_back(random_sphere_field(basis, seed, i, band, sup_bound, zero_mean));
    return out;
}

} // namespace sharpineq

#endif
