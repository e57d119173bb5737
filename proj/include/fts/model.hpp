#pragma once

#include "fts/linalg.hpp"

#include <optional>
#include <sstream>

namespace fts {

// x_{k+1} = A_k x_k + C_k x_k w_k for k = 0..T-1, state dimension n.
struct StochasticSystem {
    int n = 0;
    int T = 0;
    std::vector<Matrix> A;
    std::vector<Matrix> C;
};

// x_{k+1} = A_k x_k + B_k u_k + (C_k x_k + D_k u_k) w_k, input dimension m.
struct ControlledSystem {
    int n = 0;
    int m = 0;
    int T = 0;
    std::vector<Matrix> A;
    std::vector<Matrix> B;
    std::vector<Matrix> C;
    std::vector<Matrix> D;

    StochasticSystem open_loop() const { return StochasticSystem{n, T, A, C}; }
};

// Finite-time stability target: keep E||x_k||^2_{R_k} below c2 over k = 0..T
// whenever ||x_0||^2_{R_0} <= c1.
struct FtsSpec {
    double c1 = 0.0;
    double c2 = 0.0;
    int T = 0;
    std::vector<Matrix> R;  // T+1 symmetric positive definite weights
};

// Time-varying state feedback u_k = K_k x_k, k = 0..T-1.
struct FeedbackLaw {
    std::vector<Matrix> K;  // m x n gains
};

enum class NoiseKind { StandardNormal, Rademacher };

// Both kinds have mean 0 and unit second moment by construction.
struct NoiseModel {
    NoiseKind kind = NoiseKind::StandardNormal;
};

namespace detail {

inline std::string shape_of(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

inline void check_sequence(std::vector<std::string>& out, const std::vector<Matrix>& seq,
                           const char* name, size_t want_len, Eigen::Index rows, Eigen::Index cols) {
    if (seq.size() != want_len) {
        std::ostringstream os;
        os << name << " has " << seq.size() << " entries, expected " << want_len;
        out.push_back(os.str());
        return;
    }
    for (size_t k = 0; k < seq.size(); ++k) {
        const Matrix& m = seq[k];
        if (m.rows() != rows || m.cols() != cols) {
            std::ostringstream os;
            os << name << "_" << k << " has shape " << shape_of(m) << ", expected " << rows << "x" << cols;
            out.push_back(os.str());
        } else if (!m.allFinite()) {
            std::ostringstream os;
            os << name << "_" << k << " has non-finite entries";
            out.push_back(os.str());
        }
    }
}

}  // namespace detail

inline std::vector<std::string> validate(const StochasticSystem& sys) {
    std::vector<std::string> out;
    if (sys.n < 1) out.push_back("state dimension n must be positive");
    if (sys.T < 1) out.push_back("horizon T must be positive");
    if (sys.n < 1 || sys.T < 1) return out;
    detail::check_sequence(out, sys.A, "A", static_cast<size_t>(sys.T), sys.n, sys.n);
    detail::check_sequence(out, sys.C, "C", static_cast<size_t>(sys.T), sys.n, sys.n);
    return out;
}

inline std::vector<std::string> validate(const ControlledSystem& sys) {
    std::vector<std::string> out;
    if (sys.n < 1) out.push_back("state dimension n must be positive");
    if (sys.m < 1) out.push_back("input dimension m must be positive");
    if (sys.T < 1) out.push_back("horizon T must be positive");
    if (sys.n < 1 || sys.m < 1 || sys.T < 1) return out;
    detail::check_sequence(out, sys.A, "A", static_cast<size_t>(sys.T), sys.n, sys.n);
    detail::check_sequence(out, sys.C, "C", static_cast<size_t>(sys.T), sys.n, sys.n);
    detail::check_sequence(out, sys.B, "B", static_cast<size_t>(sys.T), sys.n, sys.m);
    detail::check_sequence(out, sys.D, "D", static_cast<size_t>(sys.T), sys.n, sys.m);
    return out;
}

inline std::vector<std::string> validate_spec(const FtsSpec& spec, int n) {
    std::vector<std::string> out;
    if (!(spec.c1 > 0.0)) out.push_back("c1 must be positive");
    if (!(spec.c2 > 0.0)) out.push_back("c2 must be positive");
    if (spec.c1 > 0.0 && spec.c2 > 0.0 && !(spec.c1 <= spec.c2)) {
        std::ostringstream os;
        os << "c1 <= c2 fails (c1=" << spec.c1 << ", c2=" << spec.c2 << ")";
        out.push_back(os.str());
    }
    if (spec.T < 1) out.push_back("horizon T must be positive");
    if (spec.T >= 1) {
        detail::check_sequence(out, spec.R, "R", static_cast<size_t>(spec.T) + 1, n, n);
        if (spec.R.size() == static_cast<size_t>(spec.T) + 1) {
            for (size_t k = 0; k < spec.R.size(); ++k) {
                const Matrix& r = spec.R[k];
                if (r.rows() != n || r.cols() != n || !r.allFinite()) continue;
                if (relative_asymmetry(r) > 1e-12) {
                    std::ostringstream os;
                    os << "R_" << k << " not symmetric (relative asymmetry " << relative_asymmetry(r) << ")";
                    out.push_back(os.str());
                } else if (!(lambda_min_sym(symmetrized(r)) > 0.0)) {
                    std::ostringstream os;
                    os << "R_" << k << " not positive definite";
                    out.push_back(os.str());
                }
            }
        }
    }
    return out;
}

// Full report for a system/spec pair; empty result means valid.
inline std::vector<std::string> validate(const StochasticSystem& sys, const FtsSpec& spec) {
    std::vector<std::string> out = validate(sys);
    const std::vector<std::string> sp = validate_spec(spec, sys.n);
    out.insert(out.end(), sp.begin(), sp.end());
    if (sys.T >= 1 && spec.T >= 1 && sys.T != spec.T) {
        std::ostringstream os;
        os << "system horizon T=" << sys.T << " does not match spec horizon T=" << spec.T;
        out.push_back(os.str());
    }
    return out;
}

inline std::vector<std::string> validate(const ControlledSystem& sys, const FtsSpec& spec) {
    std::vector<std::string> out = validate(sys);
    const std::vector<std::string> sp = validate_spec(spec, sys.n);
    out.insert(out.end(), sp.begin(), sp.end());
    if (sys.T >= 1 && spec.T >= 1 && sys.T != spec.T) {
        std::ostringstream os;
        os << "system horizon T=" << sys.T << " does not match spec horizon T=" << spec.T;
        out.push_back(os.str());
    }
    return out;
}

inline void require_valid(const StochasticSystem& sys, const FtsSpec& spec) {
    const auto report = validate(sys, spec);
    if (report.empty()) return;
    std::string msg = "invalid system/spec:";
    for (const auto& r : report) msg += " [" + r + "]";
    throw std::invalid_argument(msg);
}

// Closed loop A_k + B_k K_k, C_k + D_k K_k.
inline StochasticSystem closed_loop(const ControlledSystem& sys, const FeedbackLaw& law) {
    if (law.K.size() != static_cast<size_t>(sys.T))
        throw std::invalid_argument("closed_loop: gain count does not match horizon");
    StochasticSystem out;
    out.n = sys.n;
    out.T = sys.T;
    out.A.reserve(law.K.size());
    out.C.reserve(law.K.size());
    for (size_t k = 0; k < law.K.size(); ++k) {
        const Matrix& kk = law.K[k];
        if (kk.rows() != sys.m || kk.cols() != sys.n)
            throw std::invalid_argument("closed_loop: K_" + std::to_string(k) + " has wrong shape");
        out.A.push_back(sys.A[k] + sys.B[k] * kk);
        out.C.push_back(sys.C[k] + sys.D[k] * kk);
    }
    return out;
}

}  // namespace fts
