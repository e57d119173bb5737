#pragma once

#include "fts/model.hpp"

#include <cstdio>
#include <numbers>

namespace fts {

namespace detail {

// Murmur3-style finalizer; the basis of the counter RNG.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

// Counter-based bits for (stream, step, draw); any order of evaluation yields
// the same values, so parallel path execution stays deterministic.
inline std::uint64_t stream_bits(std::uint64_t stream, std::uint64_t step, std::uint64_t draw) {
    std::uint64_t h = mix64(stream + 0x9e3779b97f4a7c15ULL * (step + 1));
    return mix64(h + 0xc2b2ae3d27d4eb4fULL * (draw + 1));
}

// Uniform in the open interval (0, 1).
inline double uniform01(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Fixed-order pairwise reduction, independent of any execution schedule.
inline double pairwise_sum(const double* data, size_t count) {
    if (count == 0) return 0.0;
    if (count == 1) return data[0];
    if (count == 2) return data[0] + data[1];
    const size_t half = count / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}

}  // namespace detail

// Stream seed for path i under a master seed.
inline std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t path_index) {
    return detail::mix64(master_seed + 0x165667b19e3779f9ULL * (path_index + 1));
}

// One noise sample w_step for the given stream; mean 0, unit second moment.
inline double noise_draw(const NoiseModel& noise, std::uint64_t stream_seed, std::uint64_t step) {
    switch (noise.kind) {
        case NoiseKind::Rademacher:
            return (detail::stream_bits(stream_seed, step, 0) & 1u) ? 1.0 : -1.0;
        case NoiseKind::StandardNormal:
        default: {
            const double u1 = detail::uniform01(detail::stream_bits(stream_seed, step, 0));
            const double u2 = detail::uniform01(detail::stream_bits(stream_seed, step, 1));
            return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }
    }
}

struct Trajectory {
    std::vector<Vector> x;  // T+1 states; x[0] is the supplied initial state
    std::uint64_t seed = 0; // the stream seed that produced it
};

// Sample one path of x_{k+1} = A_k x_k + C_k x_k w_k.
inline Trajectory simulate(const StochasticSystem& sys, const Vector& x0, const NoiseModel& noise,
                           std::uint64_t stream_seed) {
    if (x0.size() != sys.n) throw std::invalid_argument("simulate: x0 has wrong length");
    Trajectory traj;
    traj.seed = stream_seed;
    traj.x.reserve(static_cast<size_t>(sys.T) + 1);
    traj.x.push_back(x0);
    for (int k = 0; k < sys.T; ++k) {
        const double w = noise_draw(noise, stream_seed, static_cast<std::uint64_t>(k));
        const Vector& xk = traj.x.back();
        traj.x.push_back(sys.A[static_cast<size_t>(k)] * xk + w * (sys.C[static_cast<size_t>(k)] * xk));
    }
    return traj;
}

struct McEstimate {
    std::vector<double> mean;     // T+1 estimates of E||x_k||^2_{R_k}
    std::vector<double> stderr_;  // sample std / sqrt(paths used)
    std::vector<int> n_divergent; // per-k count of non-finite path values
    int n_paths = 0;
    std::uint64_t master_seed = 0;
};

// Monte Carlo estimate of E||x_k||^2_{R_k}. Path i uses the stream seed
// derive_stream_seed(master_seed, i). Non-finite path values are excluded from
// the estimate and counted instead of aborting the run.
inline McEstimate monte_carlo(const StochasticSystem& sys, const FtsSpec& spec, const Vector& x0,
                              int n_paths, const NoiseModel& noise, std::uint64_t master_seed) {
    require_valid(sys, spec);
    if (n_paths < 2) throw std::invalid_argument("monte_carlo: need at least 2 paths");
    if (x0.size() != sys.n) throw std::invalid_argument("monte_carlo: x0 has wrong length");

    const size_t steps = static_cast<size_t>(sys.T) + 1;
    std::vector<std::vector<double>> values(steps);
    for (auto& v : values) v.reserve(static_cast<size_t>(n_paths));

    McEstimate est;
    est.n_paths = n_paths;
    est.master_seed = master_seed;
    est.n_divergent.assign(steps, 0);

    for (int i = 0; i < n_paths; ++i) {
        const Trajectory traj = simulate(sys, x0, noise, derive_stream_seed(master_seed, i));
        for (size_t k = 0; k < steps; ++k) {
            const double v = quadratic_form(spec.R[k], traj.x[k]);
            if (std::isfinite(v)) {
                values[k].push_back(v);
            } else {
                ++est.n_divergent[k];
            }
        }
    }

    est.mean.resize(steps);
    est.stderr_.resize(steps);
    std::vector<double> scratch;
    for (size_t k = 0; k < steps; ++k) {
        const auto& v = values[k];
        const size_t cnt = v.size();
        if (cnt == 0) {
            est.mean[k] = std::numeric_limits<double>::quiet_NaN();
            est.stderr_[k] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        // Shift by the first value: identical samples reduce exactly.
        const double shift = v[0];
        scratch.resize(cnt);
        for (size_t i = 0; i < cnt; ++i) scratch[i] = v[i] - shift;
        const double mean = shift + detail::pairwise_sum(scratch.data(), cnt) / static_cast<double>(cnt);
        est.mean[k] = mean;
        if (cnt < 2) {
            est.stderr_[k] = 0.0;
            continue;
        }
        for (size_t i = 0; i < cnt; ++i) {
            const double d = v[i] - mean;
            scratch[i] = d * d;
        }
        const double var =
            detail::pairwise_sum(scratch.data(), cnt) / static_cast<double>(cnt - 1);
        est.stderr_[k] = std::sqrt(var / static_cast<double>(cnt));
    }
    return est;
}

// CSV emission: one row per step.
inline std::string to_csv(const McEstimate& est) {
    std::string out = "k,mean,stderr,n_divergent\n";
    char buf[64];
    for (size_t k = 0; k < est.mean.size(); ++k) {
        out += std::to_string(k);
        out += ',';
        std::snprintf(buf, sizeof buf, "%.17g", est.mean[k]);
        out += buf;
        out += ',';
        std::snprintf(buf, sizeof buf, "%.17g", est.stderr_[k]);
        out += buf;
        out += ',';
        out += std::to_string(est.n_divergent[k]);
        out += '\n';
    }
    return out;
}

}  // namespace fts
