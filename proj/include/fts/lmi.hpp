#pragma once

#include "fts/gramian.hpp"
#include "fts/sdp.hpp"

namespace fts {

// Lyapunov-style sufficiency certificate: P_k > 0 with lambda2 I <= P_k <= lambda1 I,
// the per-step weighted inequality, and the scalar coupling between the bounds
// and (c1, c2). Valid for alpha > -1.
struct AnalysisCertificate {
    double alpha = 0.0;
    std::vector<Matrix> P;  // T+1 symmetric positive definite matrices
    double lambda1 = 0.0;   // upper bound scale
    double lambda2 = 0.0;   // lower bound scale
};

// Synthesis certificate in the X = (R^{1/2} P R^{1/2})^{-1} coordinates, with
// Y_j = K_j X_j; gains recover as K_j = Y_j X_j^{-1}. Valid for alpha >= 0.
struct SynthesisCertificate {
    double alpha = 0.0;
    std::vector<Matrix> X;  // T+1 symmetric positive definite matrices
    std::vector<Matrix> Y;  // T matrices, m x n
    double lhat1 = 0.0;
    double lhat2 = 0.0;
};

struct ResidualItem {
    std::string name;
    double value;  // lambda_max of a matrix inequality or the raw scalar lhs
};

struct ResidualReport {
    std::vector<ResidualItem> items;
    double worst = -std::numeric_limits<double>::infinity();
    double tol = 1e-9;
    bool pass = false;
};

namespace detail {

// Number of free parameters of a symmetric n x n matrix.
inline int sym_param_count(int n) { return n * (n + 1) / 2; }

// Basis matrix for parameter idx under the (column-major, lower triangle)
// ordering used by the assemblers and extractors.
inline Matrix sym_basis(int n, int idx) {
    Matrix e = Matrix::Zero(n, n);
    int c = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = j; i < n; ++i) {
            if (c == idx) {
                e(i, j) = 1.0;
                e(j, i) = 1.0;
                return e;
            }
            ++c;
        }
    }
    throw std::invalid_argument("sym_basis: index out of range");
}

inline Matrix sym_from_params(int n, const Vector& x, int offset) {
    Matrix m(n, n);
    int c = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = j; i < n; ++i) {
            m(i, j) = x(offset + c);
            m(j, i) = x(offset + c);
            ++c;
        }
    }
    return m;
}

// The scalar coupling factor: (alpha+1)^T for alpha >= 0, (alpha+1) for
// -1 < alpha < 0.
inline double coupling_factor(double alpha, int T) {
    return alpha >= 0.0 ? std::pow(alpha + 1.0, T) : (alpha + 1.0);
}

inline ResidualItem matrix_residual(std::string name, const Matrix& m) {
    return ResidualItem{std::move(name), lambda_max_sym(symmetrized(m))};
}

inline ResidualReport finish_report(std::vector<ResidualItem> items, double tol) {
    ResidualReport rep;
    rep.items = std::move(items);
    rep.tol = tol;
    for (const ResidualItem& it : rep.items) rep.worst = std::max(rep.worst, it.value);
    rep.pass = rep.worst < -tol;
    return rep;
}

inline constexpr double kScaleFloor = 1.0;  // lower bound on lambda2; fixes the
                                            // scale of the homogeneous certificate

}  // namespace detail

inline std::vector<double> default_analysis_alpha_grid() {
    return {-0.5, -0.25, -0.1, 0.0, 0.1, 0.5, 1.0, 2.0};
}

inline std::vector<double> default_synthesis_alpha_grid() { return {0.0, 0.1, 0.5, 1.0}; }

// Decision variables: the lower-triangular parameters of P_0..P_T followed by
// lambda1 and lambda2. Blocks, in order: the per-step inequality for each j,
// the two-sided eigenvalue bounds for each k, the scalar coupling, and the
// lambda2 floor. All blocks are affine in the variables; strictness is
// supplied by the phase-I solver.
inline AffineMatrixInequality assemble_analysis(const StochasticSystem& sys, const FtsSpec& spec,
                                                double alpha) {
    require_valid(sys, spec);
    if (!(alpha > -1.0))
        throw std::invalid_argument(
            "assemble_analysis: alpha <= -1 admits no positive definite solution sequence");
    const int n = sys.n;
    const int T = sys.T;
    const int s = detail::sym_param_count(n);
    const auto p_offset = [s](int k) { return k * s; };
    const int idx_l1 = (T + 1) * s;
    const int idx_l2 = idx_l1 + 1;

    std::vector<Matrix> sqrt_r;
    sqrt_r.reserve(spec.R.size());
    for (const Matrix& r : spec.R) sqrt_r.push_back(sqrt_spd(r));

    AffineMatrixInequality prob;
    prob.num_vars = idx_l2 + 1;

    for (int j = 0; j < T; ++j) {
        LmiBlock blk;
        blk.constant = Matrix::Zero(n, n);
        const Matrix& a = sys.A[static_cast<size_t>(j)];
        const Matrix& c = sys.C[static_cast<size_t>(j)];
        const Matrix& sj = sqrt_r[static_cast<size_t>(j)];
        const Matrix& sj1 = sqrt_r[static_cast<size_t>(j) + 1];
        for (int e = 0; e < s; ++e) {
            const Matrix basis = detail::sym_basis(n, e);
            const Matrix mid = sj1 * basis * sj1;
            blk.terms.push_back({p_offset(j + 1) + e,
                                 symmetrized(a.transpose() * mid * a + c.transpose() * mid * c)});
            blk.terms.push_back({p_offset(j) + e, symmetrized(-(alpha + 1.0) * sj * basis * sj)});
        }
        prob.blocks.push_back(std::move(blk));
    }

    for (int k = 0; k <= T; ++k) {
        LmiBlock lower;  // lambda2 I - P_k < 0
        lower.constant = Matrix::Zero(n, n);
        lower.terms.push_back({idx_l2, Matrix::Identity(n, n)});
        for (int e = 0; e < s; ++e) lower.terms.push_back({p_offset(k) + e, -detail::sym_basis(n, e)});
        prob.blocks.push_back(std::move(lower));

        LmiBlock upper;  // P_k - lambda1 I < 0
        upper.constant = Matrix::Zero(n, n);
        upper.terms.push_back({idx_l1, -Matrix::Identity(n, n)});
        for (int e = 0; e < s; ++e) upper.terms.push_back({p_offset(k) + e, detail::sym_basis(n, e)});
        prob.blocks.push_back(std::move(upper));
    }

    // factor * c1 * lambda1 - c2 * lambda2 < 0, rescaled so the coefficients
    // stay O(c1, c2) when the factor is large
    const double factor = detail::coupling_factor(alpha, T);
    const double row_scale = std::max(1.0, factor);
    LmiBlock coupling;
    coupling.constant = Matrix::Zero(1, 1);
    coupling.terms.push_back({idx_l1, (factor * spec.c1 / row_scale) * Matrix::Identity(1, 1)});
    coupling.terms.push_back({idx_l2, (-spec.c2 / row_scale) * Matrix::Identity(1, 1)});
    prob.blocks.push_back(std::move(coupling));

    LmiBlock floor_blk;  // kScaleFloor - lambda2 < 0
    floor_blk.constant = detail::kScaleFloor * Matrix::Identity(1, 1);
    floor_blk.terms.push_back({idx_l2, -Matrix::Identity(1, 1)});
    prob.blocks.push_back(std::move(floor_blk));

    return prob;
}

inline AnalysisCertificate extract_analysis_certificate(const Vector& x, int n, int T, double alpha) {
    const int s = detail::sym_param_count(n);
    AnalysisCertificate cert;
    cert.alpha = alpha;
    cert.P.reserve(static_cast<size_t>(T) + 1);
    for (int k = 0; k <= T; ++k) cert.P.push_back(detail::sym_from_params(n, x, k * s));
    cert.lambda1 = x((T + 1) * s);
    cert.lambda2 = x((T + 1) * s + 1);
    return cert;
}

// Recompute every certificate inequality from the raw system data. PASS iff
// every residual is strictly below -tol.
inline ResidualReport verify_certificate(const AnalysisCertificate& cert,
                                         const StochasticSystem& sys, const FtsSpec& spec,
                                         double tol = 1e-9) {
    require_valid(sys, spec);
    if (!(cert.alpha > -1.0))
        throw std::invalid_argument("verify_certificate: analysis certificate requires alpha > -1");
    if (cert.P.size() != static_cast<size_t>(spec.T) + 1)
        throw std::invalid_argument("verify_certificate: P sequence has wrong length");
    const int n = sys.n;
    std::vector<Matrix> sqrt_r;
    sqrt_r.reserve(spec.R.size());
    for (const Matrix& r : spec.R) sqrt_r.push_back(sqrt_spd(r));

    std::vector<ResidualItem> items;
    items.push_back({"lambda2 positive", -cert.lambda2});
    for (int k = 0; k <= spec.T; ++k) {
        const Matrix& p = cert.P[static_cast<size_t>(k)];
        items.push_back(detail::matrix_residual("lambda2*I - P_" + std::to_string(k),
                                                cert.lambda2 * Matrix::Identity(n, n) - p));
        items.push_back(detail::matrix_residual("P_" + std::to_string(k) + " - lambda1*I",
                                                p - cert.lambda1 * Matrix::Identity(n, n)));
    }
    for (int j = 0; j < spec.T; ++j) {
        const Matrix& a = sys.A[static_cast<size_t>(j)];
        const Matrix& c = sys.C[static_cast<size_t>(j)];
        const Matrix pj = sqrt_r[static_cast<size_t>(j)] * cert.P[static_cast<size_t>(j)] *
                          sqrt_r[static_cast<size_t>(j)];
        const Matrix pj1 = sqrt_r[static_cast<size_t>(j) + 1] * cert.P[static_cast<size_t>(j) + 1] *
                           sqrt_r[static_cast<size_t>(j) + 1];
        items.push_back(detail::matrix_residual(
            "step inequality j=" + std::to_string(j),
            a.transpose() * pj1 * a + c.transpose() * pj1 * c - (cert.alpha + 1.0) * pj));
    }
    items.push_back({"scalar coupling",
                     detail::coupling_factor(cert.alpha, spec.T) * spec.c1 * cert.lambda1 -
                         spec.c2 * cert.lambda2});
    return detail::finish_report(std::move(items), tol);
}

// Try each alpha in grid order; return the first certificate that the solver
// finds and that re-verifies strictly. Absence of a certificate is a value,
// not an error: the condition is sufficient only.
inline std::optional<AnalysisCertificate> check_fts_lyapunov(
    const StochasticSystem& sys, const FtsSpec& spec,
    const std::vector<double>& alpha_grid = default_analysis_alpha_grid(),
    SolverOptions opts = {}) {
    for (double alpha : alpha_grid) {
        if (!(alpha > -1.0))
            throw std::invalid_argument("check_fts_lyapunov: alpha grid values must exceed -1");
    }
    for (double alpha : alpha_grid) {
        const AffineMatrixInequality prob = assemble_analysis(sys, spec, alpha);
        const FeasibilityResult res = solve_feasibility(prob, opts);
        if (!res.feasible()) continue;
        AnalysisCertificate cert = extract_analysis_certificate(res.x, sys.n, sys.T, alpha);
        if (verify_certificate(cert, sys, spec).pass) return cert;
    }
    return std::nullopt;
}

// Decision variables: X_0..X_T (symmetric), Y_0..Y_{T-1} (m x n), lhat1, lhat2.
// Blocks: the 3n x 3n step block per j, the two-sided R^{-1} bounds per i, the
// scalar coupling, and the lhat2 floor.
inline AffineMatrixInequality assemble_synthesis(const ControlledSystem& sys, const FtsSpec& spec,
                                                 double alpha) {
    {
        const auto report = validate(sys, spec);
        if (!report.empty()) {
            std::string msg = "assemble_synthesis: invalid system/spec:";
            for (const auto& r : report) msg += " [" + r + "]";
            throw std::invalid_argument(msg);
        }
    }
    if (!(alpha >= 0.0)) throw std::invalid_argument("assemble_synthesis: alpha must be >= 0");
    const int n = sys.n;
    const int m = sys.m;
    const int T = sys.T;
    const int s = detail::sym_param_count(n);
    const auto x_offset = [s](int k) { return k * s; };
    const int y_base = (T + 1) * s;
    const auto y_offset = [y_base, m, n](int j) { return y_base + j * m * n; };
    const int idx_l1 = y_base + T * m * n;
    const int idx_l2 = idx_l1 + 1;

    std::vector<Matrix> r_inv;
    r_inv.reserve(spec.R.size());
    for (const Matrix& r : spec.R) r_inv.push_back(spd_roots(r).inverse);

    AffineMatrixInequality prob;
    prob.num_vars = idx_l2 + 1;

    for (int j = 0; j < T; ++j) {
        LmiBlock blk;
        blk.constant = Matrix::Zero(3 * n, 3 * n);
        const Matrix& a = sys.A[static_cast<size_t>(j)];
        const Matrix& b = sys.B[static_cast<size_t>(j)];
        const Matrix& c = sys.C[static_cast<size_t>(j)];
        const Matrix& d = sys.D[static_cast<size_t>(j)];
        for (int e = 0; e < s; ++e) {
            const Matrix basis = detail::sym_basis(n, e);
            Matrix coeff = Matrix::Zero(3 * n, 3 * n);
            coeff.block(0, 0, n, n) = -(alpha + 1.0) * basis;
            coeff.block(0, n, n, n) = basis * a.transpose();
            coeff.block(n, 0, n, n) = a * basis;
            coeff.block(0, 2 * n, n, n) = basis * c.transpose();
            coeff.block(2 * n, 0, n, n) = c * basis;
            blk.terms.push_back({x_offset(j) + e, std::move(coeff)});

            Matrix coeff1 = Matrix::Zero(3 * n, 3 * n);
            coeff1.block(n, n, n, n) = -basis;
            coeff1.block(2 * n, 2 * n, n, n) = -basis;
            blk.terms.push_back({x_offset(j + 1) + e, std::move(coeff1)});
        }
        for (int a_row = 0; a_row < m; ++a_row) {
            for (int b_col = 0; b_col < n; ++b_col) {
                Matrix f = Matrix::Zero(m, n);
                f(a_row, b_col) = 1.0;
                Matrix coeff = Matrix::Zero(3 * n, 3 * n);
                coeff.block(0, n, n, n) = f.transpose() * b.transpose();
                coeff.block(n, 0, n, n) = b * f;
                coeff.block(0, 2 * n, n, n) = f.transpose() * d.transpose();
                coeff.block(2 * n, 0, n, n) = d * f;
                blk.terms.push_back({y_offset(j) + a_row * n + b_col, std::move(coeff)});
            }
        }
        prob.blocks.push_back(std::move(blk));
    }

    for (int i = 0; i <= T; ++i) {
        LmiBlock lower;  // lhat2 R_i^{-1} - X_i < 0
        lower.constant = Matrix::Zero(n, n);
        lower.terms.push_back({idx_l2, r_inv[static_cast<size_t>(i)]});
        for (int e = 0; e < s; ++e) lower.terms.push_back({x_offset(i) + e, -detail::sym_basis(n, e)});
        prob.blocks.push_back(std::move(lower));

        LmiBlock upper;  // X_i - lhat1 R_i^{-1} < 0
        upper.constant = Matrix::Zero(n, n);
        upper.terms.push_back({idx_l1, -r_inv[static_cast<size_t>(i)]});
        for (int e = 0; e < s; ++e) upper.terms.push_back({x_offset(i) + e, detail::sym_basis(n, e)});
        prob.blocks.push_back(std::move(upper));
    }

    const double factor = detail::coupling_factor(alpha, T);
    const double row_scale = std::max(1.0, factor);
    LmiBlock coupling;  // factor * c1 * lhat1 - c2 * lhat2 < 0
    coupling.constant = Matrix::Zero(1, 1);
    coupling.terms.push_back({idx_l1, (factor * spec.c1 / row_scale) * Matrix::Identity(1, 1)});
    coupling.terms.push_back({idx_l2, (-spec.c2 / row_scale) * Matrix::Identity(1, 1)});
    prob.blocks.push_back(std::move(coupling));

    LmiBlock floor_blk;  // kScaleFloor - lhat2 < 0
    floor_blk.constant = detail::kScaleFloor * Matrix::Identity(1, 1);
    floor_blk.terms.push_back({idx_l2, -Matrix::Identity(1, 1)});
    prob.blocks.push_back(std::move(floor_blk));

    return prob;
}

inline SynthesisCertificate extract_synthesis_certificate(const Vector& x, int n, int m, int T,
                                                          double alpha) {
    const int s = detail::sym_param_count(n);
    SynthesisCertificate cert;
    cert.alpha = alpha;
    cert.X.reserve(static_cast<size_t>(T) + 1);
    for (int k = 0; k <= T; ++k) cert.X.push_back(detail::sym_from_params(n, x, k * s));
    const int y_base = (T + 1) * s;
    cert.Y.reserve(static_cast<size_t>(T));
    for (int j = 0; j < T; ++j) {
        Matrix y(m, n);
        for (int a_row = 0; a_row < m; ++a_row)
            for (int b_col = 0; b_col < n; ++b_col)
                y(a_row, b_col) = x(y_base + j * m * n + a_row * n + b_col);
        cert.Y.push_back(std::move(y));
    }
    cert.lhat1 = x(y_base + T * m * n);
    cert.lhat2 = x(y_base + T * m * n + 1);
    return cert;
}

inline ResidualReport verify_certificate(const SynthesisCertificate& cert,
                                         const ControlledSystem& sys, const FtsSpec& spec,
                                         double tol = 1e-9) {
    if (!(cert.alpha >= 0.0))
        throw std::invalid_argument("verify_certificate: synthesis certificate requires alpha >= 0");
    if (cert.X.size() != static_cast<size_t>(spec.T) + 1 ||
        cert.Y.size() != static_cast<size_t>(spec.T))
        throw std::invalid_argument("verify_certificate: certificate sequence lengths wrong");
    const int n = sys.n;
    std::vector<Matrix> r_inv;
    r_inv.reserve(spec.R.size());
    for (const Matrix& r : spec.R) r_inv.push_back(spd_roots(r).inverse);

    std::vector<ResidualItem> items;
    items.push_back({"lhat2 positive", -cert.lhat2});
    for (int i = 0; i <= spec.T; ++i) {
        const Matrix& x = cert.X[static_cast<size_t>(i)];
        items.push_back(detail::matrix_residual("lhat2*R_" + std::to_string(i) + "^{-1} - X_" +
                                                    std::to_string(i),
                                                cert.lhat2 * r_inv[static_cast<size_t>(i)] - x));
        items.push_back(detail::matrix_residual(
            "X_" + std::to_string(i) + " - lhat1*R_" + std::to_string(i) + "^{-1}",
            x - cert.lhat1 * r_inv[static_cast<size_t>(i)]));
    }
    for (int j = 0; j < spec.T; ++j) {
        const Matrix& a = sys.A[static_cast<size_t>(j)];
        const Matrix& b = sys.B[static_cast<size_t>(j)];
        const Matrix& c = sys.C[static_cast<size_t>(j)];
        const Matrix& d = sys.D[static_cast<size_t>(j)];
        const Matrix& xj = cert.X[static_cast<size_t>(j)];
        const Matrix& xj1 = cert.X[static_cast<size_t>(j) + 1];
        const Matrix& yj = cert.Y[static_cast<size_t>(j)];
        const Matrix axby = a * xj + b * yj;
        const Matrix cxdy = c * xj + d * yj;
        Matrix blk = Matrix::Zero(3 * n, 3 * n);
        blk.block(0, 0, n, n) = -(cert.alpha + 1.0) * xj;
        blk.block(0, n, n, n) = axby.transpose();
        blk.block(n, 0, n, n) = axby;
        blk.block(0, 2 * n, n, n) = cxdy.transpose();
        blk.block(2 * n, 0, n, n) = cxdy;
        blk.block(n, n, n, n) = -xj1;
        blk.block(2 * n, 2 * n, n, n) = -xj1;
        items.push_back(detail::matrix_residual("step block j=" + std::to_string(j), blk));
    }
    items.push_back({"scalar coupling",
                     detail::coupling_factor(cert.alpha, spec.T) * spec.c1 * cert.lhat1 -
                         spec.c2 * cert.lhat2});
    return detail::finish_report(std::move(items), tol);
}

struct SynthesisOutcome {
    FeedbackLaw law;
    SynthesisCertificate certificate;
    FtsVerdict closed_loop_verdict;  // exact post-verification of the closed loop
};

// K_j = Y_j X_j^{-1} via Cholesky-backed linear solves against X_j.
inline FeedbackLaw extract_gains(const SynthesisCertificate& cert) {
    FeedbackLaw law;
    law.K.reserve(cert.Y.size());
    for (size_t j = 0; j < cert.Y.size(); ++j) {
        Eigen::LLT<Matrix> llt(symmetrized(cert.X[j]));
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("extract_gains: certificate integrity: X_" + std::to_string(j) +
                                     " is not positive definite");
        law.K.push_back(llt.solve(cert.Y[j].transpose()).transpose());
    }
    return law;
}

// Solve the synthesis inequalities over the alpha grid; on success return the
// gains, the certificate, and the exact closed-loop verdict.
inline std::optional<SynthesisOutcome> synthesize_gains(
    const ControlledSystem& sys, const FtsSpec& spec,
    const std::vector<double>& alpha_grid = default_synthesis_alpha_grid(),
    SolverOptions opts = {}) {
    for (double alpha : alpha_grid) {
        if (!(alpha >= 0.0))
            throw std::invalid_argument("synthesize_gains: alpha grid values must be >= 0");
    }
    for (double alpha : alpha_grid) {
        const AffineMatrixInequality prob = assemble_synthesis(sys, spec, alpha);
        const FeasibilityResult res = solve_feasibility(prob, opts);
        if (!res.feasible()) continue;
        SynthesisCertificate cert =
            extract_synthesis_certificate(res.x, sys.n, sys.m, sys.T, alpha);
        if (!verify_certificate(cert, sys, spec).pass) continue;
        SynthesisOutcome out;
        out.law = extract_gains(cert);
        out.closed_loop_verdict = check_fts_exact(closed_loop(sys, out.law), spec);
        out.certificate = std::move(cert);
        return out;
    }
    return std::nullopt;
}

}  // namespace fts
