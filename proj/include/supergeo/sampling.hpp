#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "supergeo/grassmann.hpp"

namespace supergeo {

// splitmix64; fixed, documented generator so residual reports are
// reproducible across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int integer(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

private:
    std::uint64_t state_;
};

// Random Grassmann values with a controlled body range and a few soul terms.
class Sampler {
public:
    Sampler(std::uint64_t seed, int generators) : rng_(seed), generators_(generators) {}

    SplitMix64& rng() { return rng_; }
    int generators() const { return generators_; }

    // body in [lo, hi] plus `soul_terms` random even monomials of degree >= 2
    GrassmannNumber even_value(double lo, double hi, int soul_terms = 2,
                               double soul_scale = 0.5) {
        std::vector<GrassmannNumber::Term> terms;
        terms.emplace_back(0, rng_.uniform(lo, hi));
        for (int t = 0; t < soul_terms; ++t) {
            std::uint32_t mask = random_mask_with_parity(0);
            if (mask != 0)
                terms.emplace_back(mask, rng_.uniform(-soul_scale, soul_scale));
        }
        return GrassmannNumber::from_terms(generators_, std::move(terms));
    }

    // preferred_generator (1-based) receives an O(1) coefficient so that
    // bindings of distinct odd coordinates stay generically independent.
    GrassmannNumber odd_value(int preferred_generator = 0, double scale = 1.0) {
        std::vector<GrassmannNumber::Term> terms;
        if (preferred_generator >= 1 && preferred_generator <= generators_)
            terms.emplace_back(std::uint32_t{1} << (preferred_generator - 1),
                               rng_.uniform(0.5, 1.5));
        std::uint32_t mask = random_mask_with_parity(1);
        if (mask != 0)
            terms.emplace_back(mask, rng_.uniform(-scale, scale));
        return GrassmannNumber::from_terms(generators_, std::move(terms));
    }

    GrassmannNumber homogeneous(Parity parity, int terms_count = 3, double scale = 2.0) {
        std::vector<GrassmannNumber::Term> terms;
        for (int t = 0; t < terms_count; ++t) {
            std::uint32_t mask = random_mask_with_parity(parity == Parity::Odd ? 1 : 0);
            if (parity == Parity::Odd && mask == 0)
                continue;
            terms.emplace_back(mask, rng_.uniform(-scale, scale));
        }
        return GrassmannNumber::from_terms(generators_, std::move(terms));
    }

private:
    // random mask whose popcount has the requested parity (possibly empty
    // for even parity)
    std::uint32_t random_mask_with_parity(int odd) {
        if (generators_ == 0)
            return 0;
        for (int attempt = 0; attempt < 64; ++attempt) {
            std::uint32_t mask =
                static_cast<std::uint32_t>(rng_.next()) & ((std::uint32_t{1} << generators_) - 1);
            if (std::popcount(mask) % 2 == odd)
                return mask;
        }
        return odd ? (generators_ >= 1 ? 1u : 0u) : 0u;
    }

    SplitMix64 rng_;
    int generators_;
};

} // namespace supergeo
