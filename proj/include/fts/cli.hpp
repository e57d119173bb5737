#pragma once

#include "fts/io.hpp"
#include "fts/sim.hpp"

namespace fts {

// Output bundle for one CLI command. Verdicts live in the payload; exit codes
// are reserved for operational failures, so pipelines can tell "ran and said
// unstable" from "crashed". Machine output carries no wall-clock timings and
// is bit-identical across repeated runs with the same inputs.
struct RunOutput {
    std::string machine;                          // JSON report
    std::string human;                            // text report
    std::optional<std::string> csv;               // simulate: per-step CSV
    std::optional<std::string> gains_json;        // synthesize: gains file content
    std::optional<std::string> certificate_json;  // analyze --mode lyapunov / synthesize
};

namespace detail {

inline std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline void write_header(JsonWriter& w, const char* command, const std::string& path,
                         const std::string& digest) {
    w.key("command").value(command);
    w.key("input").begin_object();
    w.key("path").value(path);
    w.key("digest").value(digest);
    w.end_object();
}

inline void write_verdict(JsonWriter& w, const FtsVerdict& v) {
    w.begin_object();
    w.key("stable").value(v.stable);
    w.key("boundary").value(v.boundary);
    w.key("first_violation");
    if (v.first_violation.has_value()) {
        w.value(*v.first_violation);
    } else {
        w.null();
    }
    w.key("margins").value(v.margins);
    w.end_object();
}

inline std::string human_verdict(const FtsVerdict& v) {
    std::string out = v.stable ? "verdict: stable (all margins > 0)" : "verdict: NOT stable";
    if (v.first_violation.has_value())
        out += ", first violation at k=" + std::to_string(*v.first_violation);
    if (v.boundary) out += " [boundary: minimum margin is 0 within 1e-10]";
    return out;
}

}  // namespace detail

inline RunOutput run_analyze(const ModelFile& mf, const std::string& path,
                             const std::string& digest, const std::string& mode,
                             const std::vector<double>& alpha_grid = default_analysis_alpha_grid()) {
    const StochasticSystem& sys = mf.system;
    const FtsSpec& spec = mf.spec;
    JsonWriter w;
    w.begin_object();
    detail::write_header(w, "analyze", path, digest);
    w.key("mode").value(mode);
    w.key("n").value(sys.n);
    w.key("T").value(sys.T);
    w.key("c1").value(spec.c1);
    w.key("c2").value(spec.c2);
    std::string human;
    std::optional<std::string> certificate_json;

    if (mode == "exact") {
        const FtsVerdict verdict = check_fts_exact(sys, spec);
        const GramianSequence gram = weighted_gram(sys, spec);
        const Matrix r0_inv_sqrt = spd_roots(spec.R[0]).inv_sqrt;
        std::vector<double> lambda;
        lambda.reserve(gram.H.size());
        for (const Matrix& h : gram.H)
            lambda.push_back(lambda_max_sym(symmetrized(r0_inv_sqrt * h * r0_inv_sqrt)));

        w.key("result").begin_object();
        w.key("stable").value(verdict.stable);
        w.key("boundary").value(verdict.boundary);
        w.key("first_violation");
        if (verdict.first_violation.has_value()) {
            w.value(*verdict.first_violation);
        } else {
            w.null();
        }
        w.key("margins").value(verdict.margins);
        w.key("lambda_max").value(lambda);
        w.key("gramian").begin_array();
        for (const Matrix& h : gram.H) w.value(h);
        w.end_array();
        w.end_object();

        human = "analyze --mode exact (" + path + ")\n";
        human += "budget c2/c1 = " + detail::fmt6(spec.c2 / spec.c1) + "\n";
        for (size_t k = 0; k < verdict.margins.size(); ++k)
            human += "k=" + std::to_string(k) + "  lambda_max=" + detail::fmt6(lambda[k]) +
                     "  margin=" + detail::fmt6(verdict.margins[k]) + "\n";
        human += detail::human_verdict(verdict) + "\n";
    } else if (mode == "cor1") {
        const UnweightedBoundResult res = check_fts_sufficient_unweighted(sys, spec);
        w.key("result").begin_object();
        w.key("holds").value(res.holds);
        w.key("bound").value(res.bound);
        w.key("max_lambda_r").value(res.max_lambda_r);
        w.key("margins").value(res.margins);
        w.end_object();

        human = "analyze --mode cor1 (" + path + ")\n";
        human += "unweighted bound = " + detail::fmt6(res.bound) +
                 " (max lambda_max(R_k) = " + detail::fmt6(res.max_lambda_r) + ")\n";
        human += res.holds ? "sufficient condition holds: stable\n"
                           : "sufficient condition does not hold (no conclusion)\n";
    } else if (mode == "lyapunov") {
        const std::optional<AnalysisCertificate> cert = check_fts_lyapunov(sys, spec, alpha_grid);
        w.key("result").begin_object();
        w.key("certificate_found").value(cert.has_value());
        if (cert.has_value()) {
            const ResidualReport rep = verify_certificate(*cert, sys, spec);
            w.key("alpha").value(cert->alpha);
            w.key("lambda1").value(cert->lambda1);
            w.key("lambda2").value(cert->lambda2);
            w.key("P").begin_array();
            for (const Matrix& p : cert->P) w.value(p);
            w.end_array();
            w.key("verification").begin_object();
            w.key("pass").value(rep.pass);
            w.key("worst_residual").value(rep.worst);
            w.end_object();
            certificate_json = certificate_to_json(*cert);
            human = "analyze --mode lyapunov (" + path + ")\n";
            human += "certificate found at alpha=" + detail::fmt6(cert->alpha) +
                     " (lambda1=" + detail::fmt6(cert->lambda1) +
                     ", lambda2=" + detail::fmt6(cert->lambda2) +
                     "); worst residual " + detail::fmt6(rep.worst) + "\n";
            human += "verdict: stable (sufficient condition)\n";
        } else {
            w.key("note").value("no certificate (condition is sufficient only)");
            human = "analyze --mode lyapunov (" + path + ")\n";
            human += "no certificate (condition is sufficient only)\n";
        }
        w.end_object();
    } else {
        throw std::invalid_argument("analyze: unknown mode '" + mode + "'");
    }

    w.end_object();
    return RunOutput{w.str() + "\n", human, std::nullopt, std::nullopt, certificate_json};
}

inline RunOutput run_synthesize(const ModelFile& mf, const std::string& path,
                                const std::string& digest,
                                const std::vector<double>& alpha_grid = default_synthesis_alpha_grid()) {
    if (!mf.control.has_value())
        throw std::runtime_error("synthesize: input file has no B/D (not a controlled system)");
    const ControlledSystem& sys = *mf.control;
    const FtsSpec& spec = mf.spec;

    const std::optional<SynthesisOutcome> outcome = synthesize_gains(sys, spec, alpha_grid);

    JsonWriter w;
    w.begin_object();
    detail::write_header(w, "synthesize", path, digest);
    w.key("n").value(sys.n);
    w.key("m").value(sys.m);
    w.key("T").value(sys.T);
    std::string human = "synthesize (" + path + ")\n";
    std::optional<std::string> gains_json;
    std::optional<std::string> certificate_json;

    w.key("result").begin_object();
    if (outcome.has_value()) {
        const ResidualReport rep = verify_certificate(outcome->certificate, sys, spec);
        w.key("status").value("ok");
        w.key("alpha").value(outcome->certificate.alpha);
        w.key("lhat1").value(outcome->certificate.lhat1);
        w.key("lhat2").value(outcome->certificate.lhat2);
        w.key("gains").begin_array();
        for (const Matrix& k : outcome->law.K) w.value(k);
        w.end_array();
        w.key("closed_loop");
        detail::write_verdict(w, outcome->closed_loop_verdict);
        w.key("verification").begin_object();
        w.key("pass").value(rep.pass);
        w.key("worst_residual").value(rep.worst);
        w.end_object();
        gains_json = gains_to_json(outcome->law, sys.n, sys.m);
        certificate_json = certificate_to_json(outcome->certificate);

        human += "feasible at alpha=" + detail::fmt6(outcome->certificate.alpha) + "\n";
        for (size_t j = 0; j < outcome->law.K.size() && j < 4; ++j) {
            human += "K_" + std::to_string(j) + " = [";
            for (Eigen::Index a = 0; a < outcome->law.K[j].rows(); ++a)
                for (Eigen::Index b = 0; b < outcome->law.K[j].cols(); ++b)
                    human += (a + b ? " " : "") + detail::fmt6(outcome->law.K[j](a, b));
            human += "]\n";
        }
        if (outcome->law.K.size() > 4) human += "...\n";
        human += "closed loop " + detail::human_verdict(outcome->closed_loop_verdict) + "\n";
    } else {
        w.key("status").value("failed");
        w.key("note").value("synthesis failed: no feasible alpha in grid");
        human += "synthesis failed: no feasible alpha in grid\n";
    }
    w.end_object();
    w.end_object();
    return RunOutput{w.str() + "\n", human, std::nullopt, gains_json, certificate_json};
}

inline RunOutput run_simulate(const ModelFile& mf, const std::string& path,
                              const std::string& digest, int n_paths, std::uint64_t seed,
                              const NoiseModel& noise,
                              const std::optional<FeedbackLaw>& gains = std::nullopt) {
    if (!mf.x0.has_value()) throw std::runtime_error("simulate: input file has no x0");
    StochasticSystem sys = mf.system;
    if (gains.has_value()) {
        if (!mf.control.has_value())
            throw std::runtime_error("simulate: gains given but input file has no B/D");
        sys = closed_loop(*mf.control, *gains);
    }
    const McEstimate est = monte_carlo(sys, mf.spec, *mf.x0, n_paths, noise, seed);
    const std::string csv = to_csv(est);

    JsonWriter w;
    w.begin_object();
    detail::write_header(w, "simulate", path, digest);
    w.key("paths").value(n_paths);
    w.key("seed").value(seed);
    w.key("noise").value(noise.kind == NoiseKind::Rademacher ? "rademacher" : "standard-normal");
    w.key("closed_loop").value(gains.has_value());
    w.key("result").begin_object();
    w.key("mean").value(est.mean);
    w.key("stderr").value(est.stderr_);
    w.key("n_divergent").begin_array();
    for (int d : est.n_divergent) w.value(d);
    w.end_array();
    w.end_object();
    w.end_object();

    std::string human = "simulate (" + path + "), " + std::to_string(n_paths) + " paths, seed " +
                        std::to_string(seed) + (gains.has_value() ? ", closed loop" : "") + "\n";
    double worst = -std::numeric_limits<double>::infinity();
    int divergent = 0;
    for (size_t k = 0; k < est.mean.size(); ++k) {
        if (std::isfinite(est.mean[k])) worst = std::max(worst, est.mean[k]);
        divergent = std::max(divergent, est.n_divergent[k]);
    }
    human += "max estimated E||x_k||^2_{R_k} = " + detail::fmt6(worst) + " (c2 = " +
             detail::fmt6(mf.spec.c2) + "), divergent paths: " + std::to_string(divergent) + "\n";
    return RunOutput{w.str() + "\n", human, csv, std::nullopt};
}

inline RunOutput run_margin(const ModelFile& mf, const std::string& path, const std::string& digest,
                            double eps_max = 1.0, double tol = 1e-8) {
    const PerturbationMargin pm = perturbation_margin(mf.system, mf.spec, eps_max, tol);

    JsonWriter w;
    w.begin_object();
    detail::write_header(w, "margin", path, digest);
    w.key("eps_max").value(eps_max);
    w.key("tol").value(tol);
    w.key("result").begin_object();
    w.key("eps_star").value(pm.eps_star);
    w.key("samples").begin_array();
    for (const auto& [eps, m] : pm.samples) {
        w.begin_array();
        w.value(eps);
        w.value(m);
        w.end_array();
    }
    w.end_array();
    w.end_object();
    w.end_object();

    std::string human = "margin (" + path + ")\n";
    human += "largest stable perturbation eps* = " + detail::fmt6(pm.eps_star) + " (searched [0, " +
             detail::fmt6(eps_max) + "], tol " + detail::fmt6(tol) + ")\n";
    human += "margin curve (eps -> min margin):\n";
    for (const auto& [eps, m] : pm.samples)
        human += "  " + detail::fmt6(eps) + " -> " + detail::fmt6(m) + "\n";
    return RunOutput{w.str() + "\n", human, std::nullopt, std::nullopt};
}

inline RunOutput run_transition(const ModelFile& mf, const std::string& path,
                                const std::string& digest, int l, int k, const std::string& kind,
                                std::int64_t row_cap = kDefaultRowCap) {
    TransitionMatrix tm;
    if (kind == "phi") {
        tm = phi(mf.system, l, k, row_cap);
    } else if (kind == "psi") {
        tm = psi(mf.system, l, k, row_cap);
    } else if (kind == "phi-bar") {
        tm = phi(scaled(mf.system, mf.spec).as_system(), l, k, row_cap);
        tm.kind = TransitionKind::PhiBar;
    } else if (kind == "psi-bar") {
        tm = psi(scaled(mf.system, mf.spec).as_system(), l, k, row_cap);
        tm.kind = TransitionKind::PsiBar;
    } else {
        throw std::invalid_argument("transition: unknown kind '" + kind +
                                    "' (expected phi, psi, phi-bar, psi-bar)");
    }

    JsonWriter w;
    w.begin_object();
    detail::write_header(w, "transition", path, digest);
    w.key("l").value(l);
    w.key("k").value(k);
    w.key("kind").value(kind);
    w.key("rows").value(static_cast<int>(tm.data.rows()));
    w.key("cols").value(static_cast<int>(tm.data.cols()));
    w.key("matrix").value(tm.data);
    w.end_object();

    std::string human = "transition " + kind + "_{" + std::to_string(l) + "," + std::to_string(k) +
                        "} (" + std::to_string(tm.data.rows()) + "x" + std::to_string(tm.data.cols()) +
                        ")\n";
    for (Eigen::Index i = 0; i < tm.data.rows(); ++i) {
        human += " [";
        for (Eigen::Index j = 0; j < tm.data.cols(); ++j)
            human += (j ? " " : "") + detail::fmt6(tm.data(i, j));
        human += "]\n";
    }
    return RunOutput{w.str() + "\n", human, std::nullopt, std::nullopt};
}

inline RunOutput run_verify(const ModelFile& mf, const std::string& path, const std::string& digest,
                            const CertificateFile& cert, const std::string& cert_path) {
    ResidualReport rep;
    std::string kind;
    if (cert.analysis.has_value()) {
        kind = "analysis";
        rep = verify_certificate(*cert.analysis, mf.system, mf.spec);
    } else if (cert.synthesis.has_value()) {
        kind = "synthesis";
        if (!mf.control.has_value())
            throw std::runtime_error("verify: synthesis certificate needs a controlled system file");
        rep = verify_certificate(*cert.synthesis, *mf.control, mf.spec);
    } else {
        throw std::runtime_error("verify: certificate file is empty");
    }

    JsonWriter w;
    w.begin_object();
    detail::write_header(w, "verify", path, digest);
    w.key("certificate").value(cert_path);
    w.key("kind").value(kind);
    w.key("result").begin_object();
    w.key("pass").value(rep.pass);
    w.key("worst_residual").value(rep.worst);
    w.key("tol").value(rep.tol);
    w.key("items").begin_array();
    for (const ResidualItem& it : rep.items) {
        w.begin_object();
        w.key("name").value(it.name);
        w.key("value").value(it.value);
        w.end_object();
    }
    w.end_array();
    w.end_object();
    w.end_object();

    std::string human = "verify " + kind + " certificate (" + cert_path + ") against " + path + "\n";
    human += std::string(rep.pass ? "PASS" : "FAIL") + ": worst residual " +
             detail::fmt6(rep.worst) + " (tolerance " + detail::fmt6(-rep.tol) + ")\n";
    if (!rep.pass)
        for (const ResidualItem& it : rep.items)
            if (!(it.value < -rep.tol)) human += "  violated: " + it.name + " = " +
                                                 detail::fmt6(it.value) + "\n";
    return RunOutput{w.str() + "\n", human, std::nullopt, std::nullopt};
}

}  // namespace fts
