#pragma once

#include "fts/model.hpp"

namespace fts {

inline constexpr std::int64_t kDefaultRowCap = std::int64_t{1} << 20;

// Standard Kronecker product: block (i, j) of the result is a(i, j) * b.
inline Matrix kronecker(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

enum class TransitionKind { Phi, Psi, PhiBar, PsiBar };

inline const char* to_string(TransitionKind k) {
    switch (k) {
        case TransitionKind::Phi: return "phi";
        case TransitionKind::Psi: return "psi";
        case TransitionKind::PhiBar: return "phi-bar";
        case TransitionKind::PsiBar: return "psi-bar";
    }
    return "phi";
}

// Mean-square state transition matrix from step k to step l: a stacked
// (2^{l-k} n) x n matrix satisfying E||x_l||^2 = E||phi_{l,k} x_k||^2.
struct TransitionMatrix {
    int l = 0;
    int k = 0;
    TransitionKind kind = TransitionKind::Phi;
    Matrix data;
};

namespace detail {

inline void check_transition_args(const StochasticSystem& sys, int l, int k, std::int64_t row_cap) {
    if (k < 0 || l < k || l > sys.T)
        throw std::invalid_argument("transition: need 0 <= k <= l <= T");
    const int depth = l - k;
    if (depth >= 62 || (std::int64_t{1} << depth) > row_cap / std::max(sys.n, 1)) {
        // Smallest reduction of l-k that brings the row count under the cap.
        int fit = 0;
        while (fit < depth && (std::int64_t{1} << (depth - fit)) * sys.n > row_cap) ++fit;
        std::ostringstream os;
        os << "transition: 2^" << depth << " * " << sys.n << " rows exceed the cap of " << row_cap
           << "; reduce l-k by at least " << fit;
        throw std::domain_error(os.str());
    }
}

}  // namespace detail

// Forward recursion: phi_{j+1,k} = [(I ⊗ A_j) phi_{j,k}; (I ⊗ C_j) phi_{j,k}],
// phi_{k,k} = I. The A half is stacked on top of the C half.
inline TransitionMatrix phi(const StochasticSystem& sys, int l, int k,
                            std::int64_t row_cap = kDefaultRowCap) {
    detail::check_transition_args(sys, l, k, row_cap);
    const int n = sys.n;
    Matrix cur = Matrix::Identity(n, n);
    for (int j = k; j < l; ++j) {
        const Eigen::Index blocks = cur.rows() / n;
        Matrix next(2 * cur.rows(), n);
        for (Eigen::Index b = 0; b < blocks; ++b) {
            next.middleRows(b * n, n) = sys.A[static_cast<size_t>(j)] * cur.middleRows(b * n, n);
            next.middleRows(cur.rows() + b * n, n) = sys.C[static_cast<size_t>(j)] * cur.middleRows(b * n, n);
        }
        cur = std::move(next);
    }
    return TransitionMatrix{l, k, TransitionKind::Phi, std::move(cur)};
}

// Backward recursion: psi_{l,j} = [psi_{l,j+1} A_j; psi_{l,j+1} C_j], psi_{l,l} = I.
inline TransitionMatrix psi(const StochasticSystem& sys, int l, int k,
                            std::int64_t row_cap = kDefaultRowCap) {
    detail::check_transition_args(sys, l, k, row_cap);
    const int n = sys.n;
    Matrix cur = Matrix::Identity(n, n);
    for (int j = l - 1; j >= k; --j) {
        Matrix next(2 * cur.rows(), n);
        next.topRows(cur.rows()) = cur * sys.A[static_cast<size_t>(j)];
        next.bottomRows(cur.rows()) = cur * sys.C[static_cast<size_t>(j)];
        cur = std::move(next);
    }
    return TransitionMatrix{l, k, TransitionKind::Psi, std::move(cur)};
}

// Change of variable xbar_k = R_k^{1/2} x_k, which moves the weights into the
// dynamics: Abar_k = R_{k+1}^{1/2} A_k R_k^{-1/2} (and likewise C). Square
// roots are symmetric, from the eigendecomposition of R_k.
struct ScaledSystem {
    std::vector<Matrix> Abar;
    std::vector<Matrix> Cbar;
    std::vector<Matrix> sqrt_r;      // T+1 entries, R_k^{1/2}
    std::vector<Matrix> inv_sqrt_r;  // T+1 entries, R_k^{-1/2}

    StochasticSystem as_system() const {
        return StochasticSystem{static_cast<int>(sqrt_r.front().rows()),
                                static_cast<int>(Abar.size()), Abar, Cbar};
    }
};

inline ScaledSystem scaled(const StochasticSystem& sys, const FtsSpec& spec) {
    require_valid(sys, spec);
    ScaledSystem out;
    out.sqrt_r.reserve(spec.R.size());
    out.inv_sqrt_r.reserve(spec.R.size());
    for (size_t k = 0; k < spec.R.size(); ++k) {
        try {
            SpdRoots roots = spd_roots(spec.R[k]);
            out.sqrt_r.push_back(std::move(roots.sqrt));
            out.inv_sqrt_r.push_back(std::move(roots.inv_sqrt));
        } catch (const std::domain_error&) {
            throw std::domain_error("scaled: R_" + std::to_string(k) + " is numerically singular");
        }
    }
    out.Abar.reserve(sys.A.size());
    out.Cbar.reserve(sys.C.size());
    for (int k = 0; k < sys.T; ++k) {
        const size_t ks = static_cast<size_t>(k);
        out.Abar.push_back(out.sqrt_r[ks + 1] * sys.A[ks] * out.inv_sqrt_r[ks]);
        out.Cbar.push_back(out.sqrt_r[ks + 1] * sys.C[ks] * out.inv_sqrt_r[ks]);
    }
    return out;
}

// phi'_{k,0} (I ⊗ R_k) phi_{k,0} by explicit construction of phi. Exponential
// in k; intended for verification at small horizons.
inline Matrix weighted_gram_explicit(const StochasticSystem& sys, const FtsSpec& spec, int k,
                                     std::int64_t row_cap = kDefaultRowCap) {
    require_valid(sys, spec);
    const TransitionMatrix tm = phi(sys, k, 0, row_cap);
    const int n = sys.n;
    const Eigen::Index blocks = tm.data.rows() / n;
    Matrix acc = Matrix::Zero(n, n);
    const Matrix& r = spec.R[static_cast<size_t>(k)];
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const auto blk = tm.data.middleRows(b * n, n);
        acc += blk.transpose() * r * blk;
    }
    return symmetrized(acc);
}

}  // namespace fts
