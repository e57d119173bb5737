#pragma once

#include "fts/kron.hpp"

namespace fts {

// Weighted Gramians H_k = phi'_{k,0} (I ⊗ R_k) phi_{k,0}, one n x n matrix per
// step. Computed by the polynomial-size backward pullback, not the explicit
// transition matrices.
struct GramianSequence {
    std::vector<Matrix> H;  // T+1 entries; H[0] = R_0
};

// Second moments S_k = E[x_k x_k'].
struct MomentSequence {
    std::vector<Matrix> S;  // T+1 entries; S[0] = x0 x0'
};

struct FtsVerdict {
    bool stable = false;
    std::vector<double> margins;  // c2/c1 - lambda_max(R_0^{-1/2} H_k R_0^{-1/2}), per k
    std::optional<int> first_violation;
    bool boundary = false;  // min margin is 0 within 1e-10
};

// For each terminal step k, pull the weight R_k back to time 0 through
// G <- A_j' G A_j + C_j' G C_j. Total cost O(T^2 n^3).
inline GramianSequence weighted_gram(const StochasticSystem& sys, const FtsSpec& spec) {
    require_valid(sys, spec);
    GramianSequence out;
    out.H.reserve(static_cast<size_t>(spec.T) + 1);
    for (int k = 0; k <= spec.T; ++k) {
        Matrix g = symmetrized(spec.R[static_cast<size_t>(k)]);
        for (int j = k - 1; j >= 0; --j) {
            const Matrix& a = sys.A[static_cast<size_t>(j)];
            const Matrix& c = sys.C[static_cast<size_t>(j)];
            g = symmetrized(a.transpose() * g * a + c.transpose() * g * c);
        }
        out.H.push_back(std::move(g));
    }
    return out;
}

namespace detail {

inline FtsVerdict verdict_from_margins(std::vector<double> margins) {
    FtsVerdict v;
    v.margins = std::move(margins);
    v.stable = true;
    double min_margin = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < v.margins.size(); ++k) {
        min_margin = std::min(min_margin, v.margins[k]);
        if (!(v.margins[k] > 0.0) && v.stable) {
            v.stable = false;
            v.first_violation = static_cast<int>(k);
        }
    }
    v.boundary = std::abs(min_margin) <= 1e-10;
    return v;
}

}  // namespace detail

// Exact (necessary and sufficient) finite-time stability test: stable iff
// H_k < (c2/c1) R_0 strictly for every k. The boundary flag marks cases where
// the smallest margin vanishes to within 1e-10, where the strict verdict and
// a non-strict reading disagree.
inline FtsVerdict check_fts_exact(const StochasticSystem& sys, const FtsSpec& spec) {
    const GramianSequence gram = weighted_gram(sys, spec);
    const Matrix r0_inv_sqrt = spd_roots(spec.R[0]).inv_sqrt;
    const double budget = spec.c2 / spec.c1;
    std::vector<double> margins;
    margins.reserve(gram.H.size());
    for (const Matrix& h : gram.H)
        margins.push_back(budget - lambda_max_sym(symmetrized(r0_inv_sqrt * h * r0_inv_sqrt)));
    return detail::verdict_from_margins(std::move(margins));
}

struct UnweightedBoundResult {
    bool holds = false;
    std::vector<double> margins;   // bound - lambda_max(R_0^{-1/2} U_k R_0^{-1/2})
    double max_lambda_r = 0.0;     // max_k lambda_max(R_k)
    double bound = 0.0;            // c2 / (c1 * max_lambda_r)
};

// Sufficient-only test using the unweighted Gramians U_k = phi'_{k,0} phi_{k,0}
// against c2 R_0 / (c1 max_k lambda_max(R_k)).
inline UnweightedBoundResult check_fts_sufficient_unweighted(const StochasticSystem& sys,
                                                             const FtsSpec& spec) {
    require_valid(sys, spec);
    UnweightedBoundResult out;
    for (const Matrix& r : spec.R) out.max_lambda_r = std::max(out.max_lambda_r, lambda_max_sym(r));
    out.bound = spec.c2 / (spec.c1 * out.max_lambda_r);
    const Matrix r0_inv_sqrt = spd_roots(spec.R[0]).inv_sqrt;
    out.holds = true;
    for (int k = 0; k <= spec.T; ++k) {
        Matrix g = Matrix::Identity(sys.n, sys.n);
        for (int j = k - 1; j >= 0; --j) {
            const Matrix& a = sys.A[static_cast<size_t>(j)];
            const Matrix& c = sys.C[static_cast<size_t>(j)];
            g = symmetrized(a.transpose() * g * a + c.transpose() * g * c);
        }
        const double margin = out.bound - lambda_max_sym(symmetrized(r0_inv_sqrt * g * r0_inv_sqrt));
        out.margins.push_back(margin);
        if (!(margin > 0.0)) out.holds = false;
    }
    return out;
}

// Exact second-moment propagation S_{k+1} = A_k S_k A_k' + C_k S_k C_k'.
inline MomentSequence moment_propagate(const StochasticSystem& sys, const Vector& x0) {
    if (x0.size() != sys.n) throw std::invalid_argument("moment_propagate: x0 has wrong length");
    MomentSequence out;
    out.S.reserve(static_cast<size_t>(sys.T) + 1);
    out.S.push_back(x0 * x0.transpose());
    for (int k = 0; k < sys.T; ++k) {
        const Matrix& a = sys.A[static_cast<size_t>(k)];
        const Matrix& c = sys.C[static_cast<size_t>(k)];
        const Matrix& s = out.S.back();
        out.S.push_back(symmetrized(a * s * a.transpose() + c * s * c.transpose()));
    }
    return out;
}

// E||x_k||^2_{R_k} = trace(R_k S_k) per step.
inline std::vector<double> weighted_moments(const MomentSequence& ms, const FtsSpec& spec) {
    if (ms.S.size() != spec.R.size())
        throw std::invalid_argument("weighted_moments: length mismatch");
    std::vector<double> out;
    out.reserve(ms.S.size());
    for (size_t k = 0; k < ms.S.size(); ++k) out.push_back((spec.R[k] * ms.S[k]).trace());
    return out;
}

// Explicit lifted second-moment envelope P_k = phi_{k,0} R_0^{-1} phi'_{k,0},
// built by the forward block recursion and checked per step against
// (c2/c1)(I ⊗ R_k^{-1}). Exponential in k; verification-scale only.
struct LiftedGramSequence {
    std::vector<Matrix> P;           // kmax+1 entries, P_k is (2^k n) square
    std::vector<bool> constraint_ok; // P_k < (c2/c1)(I ⊗ R_k^{-1}) strictly
    double max_factor_mismatch = 0.0;  // worst relative gap to phi_{k,0} R_0^{-1} phi'_{k,0}
    bool all_ok() const {
        for (bool ok : constraint_ok)
            if (!ok) return false;
        return true;
    }
};

inline LiftedGramSequence lifted_gram_sequence(const StochasticSystem& sys, const FtsSpec& spec,
                                               int kmax, std::int64_t row_cap = kDefaultRowCap) {
    require_valid(sys, spec);
    if (kmax < 0 || kmax > spec.T)
        throw std::invalid_argument("lifted_gram_sequence: need 0 <= kmax <= T");
    detail::check_transition_args(sys, kmax, 0, row_cap);

    LiftedGramSequence out;
    const double budget = spec.c2 / spec.c1;
    const Matrix r0_inv = spd_roots(spec.R[0]).inverse;
    Matrix p = r0_inv;
    for (int k = 0; k <= kmax; ++k) {
        // cross-check against the explicit transition-matrix form
        const Matrix f = phi(sys, k, 0, row_cap).data;
        const Matrix direct = symmetrized(f * r0_inv * f.transpose());
        out.max_factor_mismatch = std::max(out.max_factor_mismatch, relative_error(p, direct));

        const Matrix rk_inv = spd_roots(spec.R[static_cast<size_t>(k)]).inverse;
        const Eigen::Index blocks = p.rows() / sys.n;
        Matrix bound = budget * kronecker(Matrix::Identity(blocks, blocks), rk_inv);
        out.constraint_ok.push_back(is_positive_definite(bound - p));
        out.P.push_back(p);

        if (k == kmax) break;
        const Matrix ka = kronecker(Matrix::Identity(blocks, blocks), sys.A[static_cast<size_t>(k)]);
        const Matrix kc = kronecker(Matrix::Identity(blocks, blocks), sys.C[static_cast<size_t>(k)]);
        Matrix next(2 * p.rows(), 2 * p.cols());
        next.topLeftCorner(p.rows(), p.cols()) = ka * p * ka.transpose();
        next.topRightCorner(p.rows(), p.cols()) = ka * p * kc.transpose();
        next.bottomLeftCorner(p.rows(), p.cols()) = kc * p * ka.transpose();
        next.bottomRightCorner(p.rows(), p.cols()) = kc * p * kc.transpose();
        p = symmetrized(next);
    }
    return out;
}

inline StochasticSystem perturbed(const StochasticSystem& sys, double eps) {
    StochasticSystem out = sys;
    const Matrix shift = eps * Matrix::Identity(sys.n, sys.n);
    for (auto& a : out.A) a += shift;
    for (auto& c : out.C) c += shift;
    return out;
}

inline double min_margin(const StochasticSystem& sys, const FtsSpec& spec) {
    const FtsVerdict v = check_fts_exact(sys, spec);
    return *std::min_element(v.margins.begin(), v.margins.end());
}

enum class PerturbDirection { Positive, Negative };

struct PerturbationMargin {
    double eps_star = 0.0;  // magnitude of the largest tested |eps| that keeps stability
    std::vector<std::pair<double, double>> samples;  // (signed eps, min margin)
};

// Largest eps in [0, eps_max] (or mirrored into [-eps_max, 0]) such that
// (A_k + eps I, C_k + eps I) stays finite-time stable. The margin curve is
// sampled on a grid to locate the first sign change, then bisected; no
// monotonicity is assumed.
inline PerturbationMargin perturbation_margin(const StochasticSystem& sys, const FtsSpec& spec,
                                              double eps_max = 1.0, double tol = 1e-8,
                                              PerturbDirection dir = PerturbDirection::Positive,
                                              int grid_samples = 33) {
    if (!(eps_max > 0.0) || !(tol > 0.0) || grid_samples < 2)
        throw std::invalid_argument("perturbation_margin: bad search parameters");
    const FtsVerdict base = check_fts_exact(sys, spec);
    if (!base.stable)
        throw std::invalid_argument("perturbation_margin: base system not strictly FTS");

    const double sign = (dir == PerturbDirection::Positive) ? 1.0 : -1.0;
    PerturbationMargin out;
    out.samples.reserve(static_cast<size_t>(grid_samples));

    double lo = 0.0;  // margin > 0 here
    std::optional<double> hi;
    for (int i = 0; i < grid_samples; ++i) {
        const double e = eps_max * static_cast<double>(i) / (grid_samples - 1);
        const double m = min_margin(perturbed(sys, sign * e), spec);
        out.samples.emplace_back(sign * e, m);
        if (!hi.has_value()) {
            if (m > 0.0) {
                lo = e;
            } else {
                hi = e;
            }
        }
    }
    if (!hi.has_value()) {
        out.eps_star = eps_max;
        return out;
    }
    double a = lo, b = *hi;
    while (b - a > tol) {
        const double mid = 0.5 * (a + b);
        if (min_margin(perturbed(sys, sign * mid), spec) > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    out.eps_star = a;
    return out;
}

}  // namespace fts
