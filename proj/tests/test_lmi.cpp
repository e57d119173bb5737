#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

using namespace fts;

namespace {

// Fill the solver variable vector from explicit P_k / lambda values using the
// assembler's layout.
Vector encode_analysis(const std::vector<Matrix>& p, double lambda1, double lambda2) {
    const int n = static_cast<int>(p.front().rows());
    const int s = n * (n + 1) / 2;
    Vector x(static_cast<int>(p.size()) * s + 2);
    int idx = 0;
    for (const Matrix& pk : p) {
        for (int j = 0; j < n; ++j)
            for (int i = j; i < n; ++i) x(idx++) = pk(i, j);
    }
    x(idx++) = lambda1;
    x(idx) = lambda2;
    return x;
}

ControlledSystem scalar_cancelable(int T) {
    ControlledSystem sys;
    sys.n = sys.m = 1;
    sys.T = T;
    for (int k = 0; k < T; ++k) {
        sys.A.push_back(ts::scalar_matrix(1.0));
        sys.B.push_back(ts::scalar_matrix(1.0));
        sys.C.push_back(ts::scalar_matrix(1.0));
        sys.D.push_back(ts::scalar_matrix(1.0));
    }
    return sys;
}

}  // namespace

TEST_CASE("analysis assembly agrees with the certificate verifier") {
    ts::Rng rng(61);
    const int n = 2, T = 3;
    const StochasticSystem sys = rng.system(n, T);
    const FtsSpec spec = rng.spec_random(n, T, 1.0, 3.0);
    const double alpha = 0.3;
    const AffineMatrixInequality prob = assemble_analysis(sys, spec, alpha);

    std::vector<Matrix> p;
    for (int k = 0; k <= T; ++k) p.push_back(symmetrized(rng.matrix(n, n)));
    const double lambda1 = rng.uniform(0.5, 2.0);
    const double lambda2 = rng.uniform(0.1, 0.5);
    const Vector x = encode_analysis(p, lambda1, lambda2);
    const AnalysisCertificate cert = extract_analysis_certificate(x, n, T, alpha);
    for (int k = 0; k <= T; ++k) REQUIRE((cert.P[k] - p[k]).norm() == 0.0);

    const ResidualReport rep = verify_certificate(cert, sys, spec);
    // items: [lambda2 positive] + 2(T+1) bounds + T steps + coupling
    for (int j = 0; j < T; ++j) {
        const double via_block = lambda_max_sym(symmetrized(prob.evaluate_block(j, x)));
        const double via_verify = rep.items[1 + 2 * (T + 1) + j].value;
        REQUIRE(via_block == Catch::Approx(via_verify).epsilon(1e-10).margin(1e-10));
    }
    for (int k = 0; k <= T; ++k) {
        const double lower = lambda_max_sym(symmetrized(prob.evaluate_block(T + 2 * k, x)));
        const double upper = lambda_max_sym(symmetrized(prob.evaluate_block(T + 2 * k + 1, x)));
        REQUIRE(lower == Catch::Approx(rep.items[1 + 2 * k].value).margin(1e-10));
        REQUIRE(upper == Catch::Approx(rep.items[1 + 2 * k + 1].value).margin(1e-10));
    }
    // coupling block is rescaled inside the assembler
    const double factor = std::pow(alpha + 1.0, T);
    const double row_scale = std::max(1.0, factor);
    const double coupling_block =
        row_scale * prob.evaluate_block(T + 2 * (T + 1), x)(0, 0);
    REQUIRE(coupling_block ==
            Catch::Approx(rep.items.back().value).epsilon(1e-12).margin(1e-12));
}

TEST_CASE("analysis assembly rejects alpha <= -1") {
    REQUIRE_THROWS_WITH(assemble_analysis(ts::example1_system(), ts::example1_spec(), -1.0),
                        Catch::Matchers::ContainsSubstring("admits no"));
}

TEST_CASE("zero dynamics have a certificate at alpha 0") {
    StochasticSystem sys;
    sys.n = 2;
    sys.T = 3;
    for (int k = 0; k < 3; ++k) {
        sys.A.push_back(Matrix::Zero(2, 2));
        sys.C.push_back(Matrix::Zero(2, 2));
    }
    ts::Rng rng(62);
    const FtsSpec spec = rng.spec_random(2, 3, 1.0, 2.0);
    const auto cert = check_fts_lyapunov(sys, spec, {0.0});
    REQUIRE(cert.has_value());
    REQUIRE(cert->alpha == 0.0);
    REQUIRE(verify_certificate(*cert, sys, spec).pass);
    REQUIRE(check_fts_exact(sys, spec).stable);
}

TEST_CASE("identity certificate works for hand-built contractive dynamics") {
    // Abar'Abar + Cbar'Cbar strictly below I: P_k = I, lambda1 = lambda2 = 1 is feasible
    ts::Rng rng(63);
    const int n = 2, T = 4;
    const FtsSpec spec = ts::identity_spec(n, T, 1.0, 2.0);
    const StochasticSystem sys = ts::contractive_system(rng, spec, n, T, 0.5, 0.8);

    AnalysisCertificate byhand;
    byhand.alpha = 0.0;
    byhand.lambda1 = 1.0;
    byhand.lambda2 = 1.0;
    for (int k = 0; k <= T; ++k) byhand.P.push_back(Matrix::Identity(n, n));
    // the two-sided bounds hold with equality, so only the step and coupling
    // items are strictly negative; check those directly
    const ResidualReport rep = verify_certificate(byhand, sys, spec);
    for (const ResidualItem& item : rep.items) {
        if (item.name.rfind("step", 0) == 0) REQUIRE(item.value < -1e-6);
        if (item.name == "scalar coupling") REQUIRE(item.value < -1e-9);
    }

    const auto cert = check_fts_lyapunov(sys, spec, {0.0});
    REQUIRE(cert.has_value());
    REQUIRE(check_fts_exact(sys, spec).stable);
}

TEST_CASE("negative alpha branch uses the single-power coupling") {
    ts::Rng rng(64);
    const int n = 2, T = 3;
    const FtsSpec spec = ts::identity_spec(n, T, 1.0, 1.2);  // tight budget
    // strongly contractive: one-step maps below 0.5 I, so alpha = -0.5 is admissible
    const StochasticSystem sys = ts::contractive_system(rng, spec, n, T, 0.4, 0.6);
    const auto cert = check_fts_lyapunov(sys, spec, {-0.5});
    REQUIRE(cert.has_value());
    REQUIRE(cert->alpha == -0.5);
    const ResidualReport rep = verify_certificate(*cert, sys, spec);
    REQUIRE(rep.pass);
    // with T = 3 the alpha >= 0 power form would read (alpha+1)^3; the
    // negative branch must use (alpha+1) * c1 * lambda1 - c2 * lambda2
    const double want = 0.5 * spec.c1 * cert->lambda1 - spec.c2 * cert->lambda2;
    REQUIRE(rep.items.back().value == Catch::Approx(want).epsilon(1e-12));
    REQUIRE(check_fts_exact(sys, spec).stable);
}

TEST_CASE("boundary-tight dynamics admit no certificate") {
    // the scalar regression attains E||x_2||^2 = c2 exactly at ||x_0||^2 = c1
    const auto cert = check_fts_lyapunov(ts::example1_system(), ts::example1_spec(), {0.0});
    REQUIRE_FALSE(cert.has_value());
}

TEST_CASE("certificate soundness on contractive instances") {
    ts::Rng rng(65);
    int found = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = rng.uniform_int(1, 2);
        const int T = rng.uniform_int(2, 4);
        const FtsSpec spec = rng.spec_random(n, T, 1.0, rng.uniform(2.0, 6.0));
        const StochasticSystem sys = ts::contractive_system(rng, spec, n, T);
        const auto cert = check_fts_lyapunov(sys, spec, {0.0, 0.5});
        if (!cert.has_value()) continue;
        ++found;
        REQUIRE(verify_certificate(*cert, sys, spec).pass);
        REQUIRE(check_fts_exact(sys, spec).stable);
    }
    REQUIRE(found >= 5);
}

TEST_CASE("verified certificates stay verified under positive scaling") {
    ts::Rng rng(66);
    const int n = 2, T = 3;
    const FtsSpec spec = ts::identity_spec(n, T, 1.0, 3.0);
    const StochasticSystem sys = ts::contractive_system(rng, spec, n, T);
    const auto cert = check_fts_lyapunov(sys, spec, {0.0});
    REQUIRE(cert.has_value());

    AnalysisCertificate scaled_cert = *cert;
    const double s = 3.7;
    scaled_cert.lambda1 *= s;
    scaled_cert.lambda2 *= s;
    for (Matrix& p : scaled_cert.P) p *= s;
    REQUIRE(verify_certificate(scaled_cert, sys, spec).pass);
}

TEST_CASE("alpha tightens the coupling and relaxes the step inequality") {
    ts::Rng rng(67);
    const int n = 2, T = 3;
    const StochasticSystem sys = rng.system(n, T);
    const FtsSpec spec = rng.spec_random(n, T, 1.0, 4.0);
    AnalysisCertificate cert;
    cert.lambda1 = 1.5;
    cert.lambda2 = 0.5;
    for (int k = 0; k <= T; ++k) cert.P.push_back(rng.spd(n, 0.6));

    cert.alpha = 0.2;
    const ResidualReport lo = verify_certificate(cert, sys, spec);
    cert.alpha = 0.8;
    const ResidualReport hi = verify_certificate(cert, sys, spec);
    for (size_t i = 0; i < lo.items.size(); ++i) {
        if (lo.items[i].name.rfind("step", 0) == 0) REQUIRE(hi.items[i].value < lo.items[i].value);
        if (lo.items[i].name == "scalar coupling") REQUIRE(hi.items[i].value > lo.items[i].value);
    }
}

TEST_CASE("flipped certificates fail verification") {
    ts::Rng rng(68);
    const int n = 2, T = 3;
    const FtsSpec spec = ts::identity_spec(n, T, 1.0, 3.0);
    const StochasticSystem sys = ts::contractive_system(rng, spec, n, T);
    const auto cert = check_fts_lyapunov(sys, spec, {0.0});
    REQUIRE(cert.has_value());

    AnalysisCertificate negated = *cert;
    for (Matrix& p : negated.P) p *= -1.0;
    REQUIRE_FALSE(verify_certificate(negated, sys, spec).pass);
}

TEST_CASE("synthesis on the scalar cancelable system") {
    const int T = 3;
    const ControlledSystem sys = scalar_cancelable(T);
    const FtsSpec spec = ts::identity_spec(1, T, 1.0, 4.0);
    const auto outcome = synthesize_gains(sys, spec, {0.0});
    REQUIRE(outcome.has_value());
    REQUIRE(outcome->closed_loop_verdict.stable);

    // each step block forces (1 + k_j)^2 < x_{j+1} / (2 x_j) <= lhat1 / (2 lhat2) < 2,
    // so every gain lies in the cancellation region around -1
    for (const Matrix& k : outcome->law.K) {
        REQUIRE(std::abs(1.0 + k(0, 0)) < std::sqrt(2.0));
    }

    // Schur-complement unfolding of each verified step block
    const SynthesisCertificate& cert = outcome->certificate;
    for (int j = 0; j < T; ++j) {
        const Matrix axby = sys.A[j] * cert.X[j] + sys.B[j] * cert.Y[j];
        const Matrix cxdy = sys.C[j] * cert.X[j] + sys.D[j] * cert.Y[j];
        Eigen::LLT<Matrix> llt(symmetrized(cert.X[j + 1]));
        REQUIRE(llt.info() == Eigen::Success);
        const Matrix unfolded = axby.transpose() * llt.solve(axby) +
                                cxdy.transpose() * llt.solve(cxdy) -
                                (cert.alpha + 1.0) * cert.X[j];
        REQUIRE(lambda_max_sym(symmetrized(unfolded)) < 0.0);
    }
}

TEST_CASE("synthesis degenerates to analysis when B and D vanish") {
    // open loop unstable and uncontrollable: no certificate, no gains
    ControlledSystem sys;
    sys.n = sys.m = 1;
    sys.T = 2;
    for (int k = 0; k < 2; ++k) {
        sys.A.push_back(ts::scalar_matrix(2.0));
        sys.B.push_back(ts::scalar_matrix(0.0));
        sys.C.push_back(ts::scalar_matrix(2.0));
        sys.D.push_back(ts::scalar_matrix(0.0));
    }
    const FtsSpec spec = ts::identity_spec(1, 2, 1.0, 2.0);
    REQUIRE_FALSE(check_fts_exact(sys.open_loop(), spec).stable);
    REQUIRE_FALSE(synthesize_gains(sys, spec, {0.0, 0.5}).has_value());
}

TEST_CASE("synthesis certificate checks catch swapped scales") {
    const int T = 2;
    const ControlledSystem sys = scalar_cancelable(T);
    const FtsSpec spec = ts::identity_spec(1, T, 1.0, 4.0);
    const auto outcome = synthesize_gains(sys, spec, {0.0});
    REQUIRE(outcome.has_value());
    REQUIRE(verify_certificate(outcome->certificate, sys, spec).pass);

    SynthesisCertificate swapped = outcome->certificate;
    std::swap(swapped.lhat1, swapped.lhat2);  // now lhat1 < lhat2
    REQUIRE_FALSE(verify_certificate(swapped, sys, spec).pass);
}

TEST_CASE("gain extraction rejects a broken certificate") {
    SynthesisCertificate cert;
    cert.alpha = 0.0;
    cert.lhat1 = cert.lhat2 = 1.0;
    cert.X = {-Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
    cert.Y = {ts::scalar_matrix(1.0)};
    REQUIRE_THROWS_AS(extract_gains(cert), std::runtime_error);
}

TEST_CASE("certificates round-trip through JSON") {
    ts::Rng rng(69);
    const int n = 2, T = 2;
    const FtsSpec spec = ts::identity_spec(n, T, 1.0, 3.0);
    const StochasticSystem sys = ts::contractive_system(rng, spec, n, T);
    const auto cert = check_fts_lyapunov(sys, spec, {0.0});
    REQUIRE(cert.has_value());

    const std::string json = certificate_to_json(*cert);
    const CertificateFile parsed = parse_certificate_json(nlohmann::json::parse(json));
    REQUIRE(parsed.analysis.has_value());
    REQUIRE(parsed.analysis->alpha == cert->alpha);
    REQUIRE(parsed.analysis->lambda1 == cert->lambda1);
    REQUIRE(parsed.analysis->lambda2 == cert->lambda2);
    for (int k = 0; k <= T; ++k)
        REQUIRE((parsed.analysis->P[k] - cert->P[k]).norm() == 0.0);
    REQUIRE(verify_certificate(*parsed.analysis, sys, spec).pass);
}
