#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fts {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Largest |M - M'| entry relative to the largest |M| entry; 0 for a zero matrix.
inline double relative_asymmetry(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

inline bool approx_equal_rel(const Matrix& a, const Matrix& b, double rel) {
    const double scale = std::max(a.norm(), b.norm());
    if (scale == 0.0) return true;
    return (a - b).norm() <= rel * scale;
}

inline double relative_error(const Matrix& got, const Matrix& want) {
    const double scale = std::max(want.norm(), 1e-300);
    return (got - want).norm() / scale;
}

// x'Mx for symmetric M.
inline double quadratic_form(const Matrix& m, const Vector& x) { return x.dot(m * x); }

}  // namespace fts
