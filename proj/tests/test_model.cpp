#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstring>

using namespace fts;

namespace {

bool contains(const std::vector<std::string>& report, const std::string& needle) {
    for (const auto& r : report)
        if (r.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("validate accepts the scalar regression data") {
    const auto report = validate(ts::example1_system(), ts::example1_spec());
    REQUIRE(report.empty());
}

TEST_CASE("validate flags c1 > c2") {
    FtsSpec spec = ts::example1_spec();
    spec.c1 = 2.0;
    spec.c2 = 1.0;
    const auto report = validate(ts::example1_system(), spec);
    REQUIRE(contains(report, "c1 <= c2 fails"));
}

TEST_CASE("validate flags an indefinite weight") {
    StochasticSystem sys;
    sys.n = 2;
    sys.T = 1;
    sys.A = {Matrix::Identity(2, 2)};
    sys.C = {Matrix::Zero(2, 2)};
    FtsSpec spec = ts::identity_spec(2, 1, 1.0, 2.0);
    Matrix indef(2, 2);
    indef << 1, 2, 2, 1;  // eigenvalues 3, -1
    spec.R[1] = indef;
    const auto report = validate(sys, spec);
    REQUIRE(contains(report, "R_1 not positive definite"));
}

TEST_CASE("validate flags shape and horizon mismatches") {
    StochasticSystem sys = ts::example1_system();
    sys.A[1] = Matrix::Zero(2, 2);
    REQUIRE(contains(validate(sys, ts::example1_spec()), "A_1 has shape 2x2, expected 1x1"));

    StochasticSystem sys2 = ts::example1_system();
    FtsSpec spec = ts::example1_spec();
    spec.T = 3;
    spec.R.push_back(ts::scalar_matrix(1.0));
    REQUIRE(contains(validate(sys2, spec), "does not match spec horizon"));
}

TEST_CASE("validate is idempotent") {
    const auto sys = ts::example1_system();
    const auto spec = ts::example1_spec();
    REQUIRE(validate(sys, spec) == validate(sys, spec));
}

TEST_CASE("closed loop with zero gains returns the open loop bitwise") {
    ts::Rng rng(21);
    ControlledSystem sys;
    sys.n = 2;
    sys.m = 1;
    sys.T = 3;
    for (int k = 0; k < 3; ++k) {
        sys.A.push_back(rng.matrix(2, 2));
        sys.C.push_back(rng.matrix(2, 2));
        sys.B.push_back(rng.matrix(2, 1));
        sys.D.push_back(rng.matrix(2, 1));
    }
    FeedbackLaw zero;
    for (int k = 0; k < 3; ++k) zero.K.push_back(Matrix::Zero(1, 2));
    const StochasticSystem cl = closed_loop(sys, zero);
    for (int k = 0; k < 3; ++k) {
        REQUIRE(std::memcmp(cl.A[k].data(), sys.A[k].data(), sizeof(double) * 4) == 0);
        REQUIRE(std::memcmp(cl.C[k].data(), sys.C[k].data(), sizeof(double) * 4) == 0);
    }
}

TEST_CASE("closed loop cancels the scalar system exactly") {
    ControlledSystem sys;
    sys.n = sys.m = 1;
    sys.T = 1;
    sys.A = {ts::scalar_matrix(1.0)};
    sys.B = {ts::scalar_matrix(1.0)};
    sys.C = {ts::scalar_matrix(1.0)};
    sys.D = {ts::scalar_matrix(1.0)};
    FeedbackLaw law;
    law.K = {ts::scalar_matrix(-1.0)};
    const StochasticSystem cl = closed_loop(sys, law);
    REQUIRE(cl.A[0](0, 0) == 0.0);
    REQUIRE(cl.C[0](0, 0) == 0.0);
}

TEST_CASE("closed loop rejects mismatched gains") {
    ControlledSystem sys;
    sys.n = 2;
    sys.m = 1;
    sys.T = 2;
    for (int k = 0; k < 2; ++k) {
        sys.A.push_back(Matrix::Identity(2, 2));
        sys.C.push_back(Matrix::Zero(2, 2));
        sys.B.push_back(Matrix::Zero(2, 1));
        sys.D.push_back(Matrix::Zero(2, 1));
    }
    FeedbackLaw law;
    law.K = {Matrix::Zero(1, 2)};  // only one gain for T = 2
    REQUIRE_THROWS_AS(closed_loop(sys, law), std::invalid_argument);
    law.K = {Matrix::Zero(2, 2), Matrix::Zero(2, 2)};  // wrong m
    REQUIRE_THROWS_AS(closed_loop(sys, law), std::invalid_argument);
}
