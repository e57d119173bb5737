#pragma once

#include "fts/common.hpp"

namespace fts {

struct EigSym {
    Vector values;   // ascending
    Matrix vectors;  // orthonormal columns; M * vectors.col(i) = values[i] * vectors.col(i)
};

// Symmetric eigendecomposition by cyclic Jacobi rotations. Sweeps until the
// off-diagonal Frobenius norm drops below 1e-14 * ||M||_F. Input must be
// symmetric within 1e-10 relative; it is symmetrized internally.
inline EigSym eig_sym(const Matrix& m_in) {
    if (m_in.rows() != m_in.cols()) throw std::invalid_argument("eig_sym: matrix not square");
    if (!m_in.allFinite()) throw std::invalid_argument("eig_sym: non-finite entries");
    if (relative_asymmetry(m_in) > 1e-10) throw std::invalid_argument("eig_sym: matrix not symmetric");

    Matrix a = symmetrized(m_in);
    const Eigen::Index n = a.rows();
    Matrix v = Matrix::Identity(n, n);
    const double norm = a.norm();
    const double threshold = 1e-14 * norm;

    for (int sweep = 0; sweep < 64 && norm > 0.0; ++sweep) {
        double off_sq = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off_sq += 2.0 * a(p, q) * a(p, q);
        if (std::sqrt(off_sq) <= threshold) break;

        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 0.5 / theta;
                } else {
                    t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                }
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // A <- J'AJ, rotation in the (p, q) plane
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

    EigSym out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = a(order[static_cast<size_t>(i)], order[static_cast<size_t>(i)]);
        out.vectors.col(i) = v.col(order[static_cast<size_t>(i)]);
    }
    return out;
}

inline double lambda_max_sym(const Matrix& m) {
    if (m.rows() == 1) return m(0, 0);
    const EigSym es = eig_sym(m);
    return es.values(es.values.size() - 1);
}

inline double lambda_min_sym(const Matrix& m) {
    if (m.rows() == 1) return m(0, 0);
    return eig_sym(m).values(0);
}

// Symmetric positive definite square root V diag(sqrt(lambda)) V'. Rejects
// matrices whose spectrum is not safely positive.
inline Matrix sqrt_spd(const Matrix& m) {
    const EigSym es = eig_sym(m);
    const double lmax = es.values(es.values.size() - 1);
    const double lmin = es.values(0);
    if (!(lmin > 1e-12 * std::max(lmax, 0.0)) || lmax <= 0.0)
        throw std::domain_error("sqrt_spd: matrix not positive definite within conditioning tolerance");
    return symmetrized(es.vectors * es.values.cwiseSqrt().asDiagonal() * es.vectors.transpose());
}

struct SpdRoots {
    Matrix sqrt;      // R^{1/2}
    Matrix inv_sqrt;  // R^{-1/2}
    Matrix inverse;   // R^{-1}
};

inline SpdRoots spd_roots(const Matrix& m) {
    const EigSym es = eig_sym(m);
    const double lmax = es.values(es.values.size() - 1);
    const double lmin = es.values(0);
    if (!(lmin > 1e-12 * std::max(lmax, 0.0)) || lmax <= 0.0)
        throw std::domain_error("spd_roots: matrix not positive definite within conditioning tolerance");
    SpdRoots out;
    const Vector sq = es.values.cwiseSqrt();
    out.sqrt = symmetrized(es.vectors * sq.asDiagonal() * es.vectors.transpose());
    out.inv_sqrt = symmetrized(es.vectors * sq.cwiseInverse().asDiagonal() * es.vectors.transpose());
    out.inverse = symmetrized(es.vectors * es.values.cwiseInverse().asDiagonal() * es.vectors.transpose());
    return out;
}

// Strict positive definiteness via an unpivoted Cholesky with a relative pivot
// floor. Breakdowns on matrices small enough to re-examine are resolved by the
// eigensolver; large breakdowns count as "not positive definite".
inline bool is_positive_definite(const Matrix& m, double pivot_tol = 1e-12) {
    const Eigen::Index n = m.rows();
    if (n == 0 || m.rows() != m.cols() || !m.allFinite()) return false;
    const double scale = m.diagonal().cwiseAbs().maxCoeff();
    Matrix l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = m(j, j) - l.row(j).head(j).squaredNorm();
        if (!(d > pivot_tol * scale)) {
            if (n <= 128) return lambda_min_sym(symmetrized(m)) > 0.0;
            return false;
        }
        l(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i)
            l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
    return true;
}

inline bool is_negative_definite(const Matrix& m, double pivot_tol = 1e-12) {
    return is_positive_definite(Matrix(-m), pivot_tol);
}

}  // namespace fts
