#pragma once

#include "fts/linalg.hpp"

namespace fts {

// One symmetric block of an affine matrix inequality: constant + sum_i x_i * coeff_i,
// required negative definite.
struct LmiTerm {
    int var = 0;
    Matrix coeff;
};

struct LmiBlock {
    Matrix constant;
    std::vector<LmiTerm> terms;
    Eigen::Index size() const { return constant.rows(); }
};

struct AffineMatrixInequality {
    int num_vars = 0;
    std::vector<LmiBlock> blocks;

    Matrix evaluate_block(size_t b, const Vector& x) const {
        Matrix m = blocks[b].constant;
        for (const LmiTerm& t : blocks[b].terms) m += x(t.var) * t.coeff;
        return m;
    }

    // max over blocks of lambda_max(F(x)); the phase-I objective at x.
    double max_eigenvalue(const Vector& x) const {
        double worst = -std::numeric_limits<double>::infinity();
        for (size_t b = 0; b < blocks.size(); ++b)
            worst = std::max(worst, lambda_max_sym(symmetrized(evaluate_block(b, x))));
        return worst;
    }
};

enum class FeasibilityStatus { StrictlyFeasible, InfeasibleAtTolerance, MaxIterations };

inline const char* to_string(FeasibilityStatus s) {
    switch (s) {
        case FeasibilityStatus::StrictlyFeasible: return "strictly-feasible";
        case FeasibilityStatus::InfeasibleAtTolerance: return "infeasible-at-tolerance";
        case FeasibilityStatus::MaxIterations: return "max-iterations";
    }
    return "max-iterations";
}

struct FeasibilityResult {
    FeasibilityStatus status = FeasibilityStatus::MaxIterations;
    Vector x;
    double tstar = 0.0;  // achieved max block eigenvalue at x
    int iterations = 0;
    bool feasible() const { return status == FeasibilityStatus::StrictlyFeasible; }
};

struct SolverOptions {
    double tol = 1e-9;        // strict feasibility threshold, relative to the data norm
    int max_iterations = 500; // total Newton steps across the barrier path
};

namespace detail {

// Cholesky of a PD matrix; empty result on breakdown.
inline bool chol_lower(const Matrix& m, Matrix& l) {
    const Eigen::Index n = m.rows();
    l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = m(j, j) - l.row(j).head(j).squaredNorm();
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        l(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i)
            l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
    return true;
}

// Barrier state per block: W = (tI - F(x))^{-1} and log det(tI - F(x)).
struct BlockState {
    Matrix w;
    double logdet = 0.0;
};

inline bool block_state(const AffineMatrixInequality& prob, size_t b, const Vector& x, double t,
                        BlockState& out) {
    Matrix s = t * Matrix::Identity(prob.blocks[b].size(), prob.blocks[b].size()) -
               prob.evaluate_block(b, x);
    s = symmetrized(s);
    Matrix l;
    if (!chol_lower(s, l)) return false;
    out.logdet = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) out.logdet += 2.0 * std::log(l(i, i));
    // W = L^{-T} L^{-1}
    const Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(l.rows(), l.rows()));
    out.w = linv.transpose() * linv;
    return true;
}

}  // namespace detail

// Phase-I strict feasibility for block-diagonal affine matrix inequalities:
// minimize t subject to F_b(x) <= t I per block, by a log-det barrier method
// with damped Newton steps and backtracking line search. Deterministic.
//
// Strictly feasible is declared once max_b lambda_max(F_b(x)) < -tol * scale,
// where scale = max(1, largest |entry| over all block data). Infeasible at
// tolerance is declared when the central path has converged (duality measure
// mu * sum(block sizes) <= 1e-10 * scale) without reaching that threshold.
inline FeasibilityResult solve_feasibility(const AffineMatrixInequality& prob,
                                           SolverOptions opts = {}) {
    if (prob.num_vars < 0) throw std::invalid_argument("solve_feasibility: negative variable count");
    double datanorm = 0.0;
    Eigen::Index total_size = 0;
    for (const LmiBlock& blk : prob.blocks) {
        if (blk.size() < 1 || blk.constant.rows() != blk.constant.cols())
            throw std::invalid_argument("solve_feasibility: bad block size");
        if (!blk.constant.allFinite() || relative_asymmetry(blk.constant) > 1e-12)
            throw std::invalid_argument("solve_feasibility: block constant not symmetric/finite");
        datanorm = std::max(datanorm, blk.constant.cwiseAbs().maxCoeff());
        total_size += blk.size();
        for (const LmiTerm& term : blk.terms) {
            if (term.var < 0 || term.var >= prob.num_vars)
                throw std::invalid_argument("solve_feasibility: term variable index out of range");
            if (term.coeff.rows() != blk.size() || term.coeff.cols() != blk.size())
                throw std::invalid_argument("solve_feasibility: term shape mismatch");
            if (!term.coeff.allFinite() || relative_asymmetry(term.coeff) > 1e-12)
                throw std::invalid_argument("solve_feasibility: term coefficient not symmetric/finite");
            datanorm = std::max(datanorm, term.coeff.cwiseAbs().maxCoeff());
        }
    }
    if (prob.blocks.empty())
        return FeasibilityResult{FeasibilityStatus::StrictlyFeasible, Vector::Zero(prob.num_vars),
                                 -std::numeric_limits<double>::infinity(), 0};

    const double scale = std::max(1.0, datanorm);
    const double tol_eff = opts.tol * scale;

    const int p = prob.num_vars;
    Vector x = Vector::Zero(p);
    double actual = prob.max_eigenvalue(x);
    if (actual < -tol_eff)
        return FeasibilityResult{FeasibilityStatus::StrictlyFeasible, x, actual, 0};

    double t = actual + 1.0;
    const double nu = static_cast<double>(total_size);
    const double mu_final = 1e-10 * scale / nu;
    double mu = scale;
    int iters = 0;

    std::vector<detail::BlockState> states(prob.blocks.size());
    const auto barrier_value = [&](const Vector& xc, double tc, double& value) -> bool {
        double sum = tc / mu;
        detail::BlockState st;
        for (size_t b = 0; b < prob.blocks.size(); ++b) {
            if (!detail::block_state(prob, b, xc, tc, st)) return false;
            sum -= st.logdet;
        }
        value = sum;
        return true;
    };

    while (true) {
        // Newton centering at the current mu
        for (int inner = 0; inner < 80; ++inner) {
            bool all_pd = true;
            for (size_t b = 0; b < prob.blocks.size(); ++b)
                all_pd = all_pd && detail::block_state(prob, b, x, t, states[b]);
            if (!all_pd)
                return FeasibilityResult{FeasibilityStatus::MaxIterations, x,
                                         prob.max_eigenvalue(x), iters};

            Vector grad = Vector::Zero(p + 1);
            Matrix hess = Matrix::Zero(p + 1, p + 1);
            grad(p) = 1.0 / mu;
            for (size_t b = 0; b < prob.blocks.size(); ++b) {
                const Matrix& w = states[b].w;
                const auto& terms = prob.blocks[b].terms;
                std::vector<Matrix> wg(terms.size());
                for (size_t i = 0; i < terms.size(); ++i) wg[i] = w * terms[i].coeff;
                // gradient: tr(W F_i) for vars, -tr(W) for t
                for (size_t i = 0; i < terms.size(); ++i) grad(terms[i].var) += wg[i].trace();
                grad(p) -= w.trace();
                // Hessian: tr(W G_a W G_b) with G_i = F_i and G_t = -I
                for (size_t i = 0; i < terms.size(); ++i) {
                    for (size_t j = i; j < terms.size(); ++j) {
                        const double hij = wg[i].cwiseProduct(wg[j].transpose()).sum();
                        if (i == j) {
                            hess(terms[i].var, terms[i].var) += hij;
                        } else {
                            hess(terms[i].var, terms[j].var) += hij;
                            hess(terms[j].var, terms[i].var) += hij;
                        }
                    }
                    const double hit = -(w * wg[i]).trace();
                    hess(terms[i].var, p) += hit;
                    hess(p, terms[i].var) += hit;
                }
                hess(p, p) += w.cwiseProduct(w).sum();
            }

            Vector step;
            {
                Eigen::LLT<Matrix> llt(hess);
                if (llt.info() == Eigen::Success) {
                    step = llt.solve(-grad);
                } else {
                    const double ridge = 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
                    Matrix hr = hess + ridge * Matrix::Identity(p + 1, p + 1);
                    step = Eigen::LDLT<Matrix>(hr).solve(-grad);
                }
            }
            const double decrement_sq = -grad.dot(step);
            if (!(decrement_sq > 2e-9)) break;  // centered for this mu

            double f0;
            if (!barrier_value(x, t, f0)) break;
            const double slope = grad.dot(step);
            double s = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 64; ++ls) {
                const Vector xc = x + s * step.head(p);
                const double tc = t + s * step(p);
                double fc;
                if (barrier_value(xc, tc, fc) && fc <= f0 + 0.25 * s * slope) {
                    x = xc;
                    t = tc;
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
            if (!accepted) break;  // stuck at numerical precision for this mu
            ++iters;

            actual = prob.max_eigenvalue(x);
            if (actual < -tol_eff)
                return FeasibilityResult{FeasibilityStatus::StrictlyFeasible, x, actual, iters};
            if (iters >= opts.max_iterations)
                return FeasibilityResult{FeasibilityStatus::MaxIterations, x, actual, iters};
        }

        if (mu * nu <= 1e-10 * scale) {
            actual = prob.max_eigenvalue(x);
            if (actual < -tol_eff)
                return FeasibilityResult{FeasibilityStatus::StrictlyFeasible, x, actual, iters};
            return FeasibilityResult{FeasibilityStatus::InfeasibleAtTolerance, x, actual, iters};
        }
        mu = std::max(mu * 0.2, 0.5e-10 * scale / nu);
    }
}

}  // namespace fts
