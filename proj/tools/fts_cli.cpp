#include "fts/fts.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

namespace {

struct LoadedModel {
    fts::ModelFile file;
    std::string path;
    std::string digest;
};

LoadedModel load(const std::string& path) {
    const std::string bytes = fts::read_file(path);
    LoadedModel lm;
    lm.path = path;
    lm.digest = fts::fnv1a_digest(bytes);
    lm.file = fts::parse_model_json(nlohmann::json::parse(bytes), path);
    return lm;
}

// Analysis commands only need (A, C); synthesis/verify check B/D themselves.
void reject_invalid(const LoadedModel& lm) {
    std::vector<std::string> report;
    if (lm.file.control.has_value()) {
        report = fts::validate(*lm.file.control, lm.file.spec);
    } else {
        report = fts::validate(lm.file.system, lm.file.spec);
    }
    if (report.empty()) return;
    std::string msg = lm.path + ": invalid model:";
    for (const auto& r : report) msg += "\n  - " + r;
    throw std::runtime_error(msg);
}

void emit(const fts::RunOutput& out, bool machine, double elapsed_ms) {
    if (machine) {
        std::cout << out.machine;
    } else {
        std::cout << out.human;
        std::cout << "elapsed: " << fts::detail::fmt6(elapsed_ms) << " ms\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-time stability analysis, synthesis and simulation for "
                 "discrete time-varying stochastic systems with multiplicative noise"};
    app.require_subcommand(1);
    bool machine = false;
    app.add_flag("--json", machine, "emit a machine-readable JSON report on stdout");

    std::string file;
    std::string mode = "exact";
    std::vector<double> alpha_grid;
    std::string out_path;
    std::string gains_path;
    std::string cert_path;
    std::string noise_name = "standard-normal";
    std::string kind = "phi";
    int paths = 1000;
    std::uint64_t seed = 0;
    double eps_max = 1.0;
    double tol = 1e-8;
    int l = 0, k = 0;

    std::string cert_out;

    CLI::App* analyze = app.add_subcommand("analyze", "decide finite-time stability");
    analyze->add_option("file", file, "system definition (JSON)")->required();
    analyze->add_option("--mode", mode, "exact | cor1 | lyapunov")->default_val("exact");
    analyze->add_option("--alpha-grid", alpha_grid, "alpha values for --mode lyapunov")
        ->delimiter(',');
    analyze->add_option("--out", cert_out, "write the certificate here (--mode lyapunov)");

    CLI::App* synthesize = app.add_subcommand("synthesize", "find stabilizing feedback gains");
    synthesize->add_option("file", file, "system definition with B and D (JSON)")->required();
    synthesize->add_option("--alpha-grid", alpha_grid, "alpha values to try")->delimiter(',');
    synthesize->add_option("--out", out_path, "gains output file")->default_val("gains.json");
    synthesize->add_option("--certificate-out", cert_out, "also write the solution certificate");

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of E||x_k||^2_{R_k}");
    simulate->add_option("file", file, "system definition with x0 (JSON)")->required();
    simulate->add_option("--paths", paths, "number of sample paths")->default_val(1000);
    simulate->add_option("--seed", seed, "master seed")->default_val(0);
    simulate->add_option("--gains", gains_path, "simulate the closed loop under these gains");
    simulate->add_option("--noise", noise_name, "standard-normal | rademacher")
        ->default_val("standard-normal");
    simulate->add_option("--out", out_path, "write the CSV here instead of stdout");

    CLI::App* verify = app.add_subcommand("verify", "re-check a certificate against a system file");
    verify->add_option("file", file, "system definition (JSON)")->required();
    verify->add_option("--certificate", cert_path, "certificate file (JSON)")->required();

    CLI::App* margin = app.add_subcommand("margin", "perturbation margin of a stable system");
    margin->add_option("file", file, "system definition (JSON)")->required();
    margin->add_option("--eps-max", eps_max, "search interval upper end")->default_val(1.0);
    margin->add_option("--tol", tol, "bisection tolerance")->default_val(1e-8);

    CLI::App* transition = app.add_subcommand("transition", "print a mean-square transition matrix");
    transition->add_option("file", file, "system definition (JSON)")->required();
    transition->add_option("--l", l, "end step")->required();
    transition->add_option("--k", k, "start step")->required();
    transition->add_option("--kind", kind, "phi | psi | phi-bar | psi-bar")->default_val("phi");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto t0 = std::chrono::steady_clock::now();
        const LoadedModel lm = load(file);
        reject_invalid(lm);
        fts::RunOutput out;

        if (*analyze) {
            out = fts::run_analyze(lm.file, lm.path, lm.digest, mode,
                                   alpha_grid.empty() ? fts::default_analysis_alpha_grid()
                                                      : alpha_grid);
            if (!cert_out.empty() && out.certificate_json.has_value()) {
                fts::write_file(cert_out, *out.certificate_json);
                if (!machine) std::cout << "certificate written to " << cert_out << "\n";
            }
        } else if (*synthesize) {
            out = fts::run_synthesize(lm.file, lm.path, lm.digest,
                                      alpha_grid.empty() ? fts::default_synthesis_alpha_grid()
                                                         : alpha_grid);
            if (out.gains_json.has_value()) {
                fts::write_file(out_path, *out.gains_json);
                if (!machine) std::cout << "gains written to " << out_path << "\n";
            }
            if (!cert_out.empty() && out.certificate_json.has_value()) {
                fts::write_file(cert_out, *out.certificate_json);
                if (!machine) std::cout << "certificate written to " << cert_out << "\n";
            }
        } else if (*simulate) {
            fts::NoiseModel noise;
            if (noise_name == "rademacher") {
                noise.kind = fts::NoiseKind::Rademacher;
            } else if (noise_name != "standard-normal") {
                throw std::runtime_error("simulate: unknown noise model '" + noise_name + "'");
            }
            std::optional<fts::FeedbackLaw> gains;
            if (!gains_path.empty()) gains = fts::load_gains_file(gains_path);
            out = fts::run_simulate(lm.file, lm.path, lm.digest, paths, seed, noise, gains);
            if (!out_path.empty()) {
                fts::write_file(out_path, *out.csv);
            } else if (!machine) {
                std::cout << *out.csv;
            }
        } else if (*verify) {
            const fts::CertificateFile cert = fts::load_certificate_file(cert_path);
            out = fts::run_verify(lm.file, lm.path, lm.digest, cert, cert_path);
        } else if (*margin) {
            out = fts::run_margin(lm.file, lm.path, lm.digest, eps_max, tol);
        } else if (*transition) {
            out = fts::run_transition(lm.file, lm.path, lm.digest, l, k, kind);
        }

        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        emit(out, machine, ms);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
