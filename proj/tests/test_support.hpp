#pragma once

#include "fts/fts.hpp"

// Deterministic data generators for the test and acceptance suites, built on
// the library's own counter RNG so runs are identical on every platform.
namespace ts {

struct Rng {
    std::uint64_t seed;
    std::uint64_t counter = 0;

    explicit Rng(std::uint64_t s) : seed(s) {}

    double uniform() { return fts::detail::uniform01(fts::detail::stream_bits(seed, counter++, 0)); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(uniform() * (hi - lo + 1)) % (hi - lo + 1);
    }

    fts::Matrix matrix(int rows, int cols, double lo = -1.0, double hi = 1.0) {
        fts::Matrix m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
        return m;
    }

    fts::Matrix spd(int n, double shift = 0.3) {
        const fts::Matrix g = matrix(n, n);
        return fts::symmetrized(g.transpose() * g + shift * fts::Matrix::Identity(n, n));
    }

    fts::StochasticSystem system(int n, int T, double lo = -1.0, double hi = 1.0) {
        fts::StochasticSystem sys;
        sys.n = n;
        sys.T = T;
        for (int k = 0; k < T; ++k) {
            sys.A.push_back(matrix(n, n, lo, hi));
            sys.C.push_back(matrix(n, n, lo, hi));
        }
        return sys;
    }

    fts::FtsSpec spec_random(int n, int T, double c1, double c2) {
        fts::FtsSpec spec;
        spec.c1 = c1;
        spec.c2 = c2;
        spec.T = T;
        for (int k = 0; k <= T; ++k) spec.R.push_back(spd(n));
        return spec;
    }
};

inline fts::FtsSpec identity_spec(int n, int T, double c1, double c2) {
    fts::FtsSpec spec;
    spec.c1 = c1;
    spec.c2 = c2;
    spec.T = T;
    for (int k = 0; k <= T; ++k) spec.R.push_back(fts::Matrix::Identity(n, n));
    return spec;
}

inline fts::Matrix scalar_matrix(double v) {
    fts::Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

// The scalar two-step regression system: A = {1, 2}, C = {1, 2},
// R = {1, 2, 2}, c1 = 0.25, c2 = 8.
inline fts::StochasticSystem example1_system() {
    fts::StochasticSystem sys;
    sys.n = 1;
    sys.T = 2;
    sys.A = {scalar_matrix(1.0), scalar_matrix(2.0)};
    sys.C = {scalar_matrix(1.0), scalar_matrix(2.0)};
    return sys;
}

inline fts::FtsSpec example1_spec() {
    fts::FtsSpec spec;
    spec.c1 = 0.25;
    spec.c2 = 8.0;
    spec.T = 2;
    spec.R = {scalar_matrix(1.0), scalar_matrix(2.0), scalar_matrix(2.0)};
    return spec;
}

// Scalar family A_k = C_k = a with unit weights; finite-time stable iff
// 2^k a^{2k} < c2/c1 for all k <= T.
inline fts::StochasticSystem scalar_system(double a, int T) {
    fts::StochasticSystem sys;
    sys.n = 1;
    sys.T = T;
    for (int k = 0; k < T; ++k) {
        sys.A.push_back(scalar_matrix(a));
        sys.C.push_back(scalar_matrix(a));
    }
    return sys;
}

// Random system rescaled so the identity-weight one-step mean-square maps of
// the scaled dynamics (with respect to spec.R) are strict contractions; such
// systems carry Lyapunov certificates at alpha = 0 by construction.
inline fts::StochasticSystem contractive_system(Rng& rng, const fts::FtsSpec& spec, int n, int T,
                                                double target_lo = 0.6, double target_hi = 0.95) {
    fts::StochasticSystem sys = rng.system(n, T);
    const fts::ScaledSystem sc = fts::scaled(sys, spec);
    for (int j = 0; j < T; ++j) {
        const fts::Matrix m = fts::symmetrized(
            sc.Abar[static_cast<size_t>(j)].transpose() * sc.Abar[static_cast<size_t>(j)] +
            sc.Cbar[static_cast<size_t>(j)].transpose() * sc.Cbar[static_cast<size_t>(j)]);
        const double lam = fts::lambda_max_sym(m);
        const double s = rng.uniform(target_lo, target_hi) / std::sqrt(std::max(lam, 1e-12));
        sys.A[static_cast<size_t>(j)] *= s;
        sys.C[static_cast<size_t>(j)] *= s;
    }
    return sys;
}

}  // namespace ts
