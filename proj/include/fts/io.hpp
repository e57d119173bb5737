#pragma once

#include "fts/json_writer.hpp"
#include "fts/lmi.hpp"
#include "fts/model.hpp"

#include <json.hpp>

#include <fstream>

namespace fts {

// Parsed system-definition file. A and C are always present; B/D/m promote the
// model to a controlled system. x0 is only needed for simulation.
struct ModelFile {
    StochasticSystem system;
    std::optional<ControlledSystem> control;
    FtsSpec spec;
    std::optional<Vector> x0;
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void file_error(const std::string& context, const std::string& message) {
    throw std::runtime_error(context + ": " + message);
}

inline Matrix parse_matrix(const json& j, const std::string& context) {
    if (!j.is_array() || j.empty()) file_error(context, "expected a non-empty array of rows");
    const size_t rows = j.size();
    size_t cols = 0;
    if (!j[0].is_array() || j[0].empty()) file_error(context, "rows must be non-empty arrays");
    cols = j[0].size();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            file_error(context, "row " + std::to_string(i) + " has inconsistent length");
        for (size_t c = 0; c < cols; ++c) {
            if (!j[i][c].is_number())
                file_error(context, "entry (" + std::to_string(i) + "," + std::to_string(c) +
                                        ") is not a number");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
        }
    }
    return m;
}

inline std::vector<Matrix> parse_matrix_sequence(const json& j, const std::string& context,
                                                 size_t want_len, std::optional<int> period) {
    if (!j.is_array()) file_error(context, "expected an array of matrices");
    std::vector<Matrix> seq;
    seq.reserve(j.size());
    for (size_t k = 0; k < j.size(); ++k)
        seq.push_back(parse_matrix(j[k], context + "[" + std::to_string(k) + "]"));
    if (period.has_value()) {
        if (seq.size() != static_cast<size_t>(*period))
            file_error(context, "expected period=" + std::to_string(*period) + " matrices, got " +
                                    std::to_string(seq.size()));
        std::vector<Matrix> full;
        full.reserve(want_len);
        for (size_t k = 0; k < want_len; ++k) full.push_back(seq[k % seq.size()]);
        return full;
    }
    if (seq.size() != want_len)
        file_error(context, "expected " + std::to_string(want_len) + " matrices, got " +
                                std::to_string(seq.size()));
    return seq;
}

inline double require_number(const json& j, const char* field, const std::string& context) {
    if (!j.contains(field) || !j[field].is_number())
        file_error(context, std::string("field '") + field + "' missing or not a number");
    return j[field].get<double>();
}

inline int require_int(const json& j, const char* field, const std::string& context) {
    if (!j.contains(field) || !j[field].is_number_integer())
        file_error(context, std::string("field '") + field + "' missing or not an integer");
    return j[field].get<int>();
}

}  // namespace detail

inline ModelFile parse_model_json(const nlohmann::json& j, const std::string& context = "model") {
    using detail::file_error;
    if (!j.is_object()) file_error(context, "top-level value must be an object");

    ModelFile mf;
    const int n = detail::require_int(j, "n", context);
    const int T = detail::require_int(j, "T", context);
    if (n < 1) file_error(context, "n must be a positive integer");
    if (T < 1) file_error(context, "T must be a positive integer");

    std::optional<int> period;
    if (j.contains("period")) {
        const int p = detail::require_int(j, "period", context);
        if (p < 1) file_error(context, "period must be a positive integer");
        period = p;
    }

    if (!j.contains("A")) file_error(context, "field 'A' missing");
    if (!j.contains("C")) file_error(context, "field 'C' missing");
    if (!j.contains("R")) file_error(context, "field 'R' missing");

    mf.system.n = n;
    mf.system.T = T;
    mf.system.A = detail::parse_matrix_sequence(j["A"], context + ": field 'A'",
                                                static_cast<size_t>(T), period);
    mf.system.C = detail::parse_matrix_sequence(j["C"], context + ": field 'C'",
                                                static_cast<size_t>(T), period);

    mf.spec.c1 = detail::require_number(j, "c1", context);
    mf.spec.c2 = detail::require_number(j, "c2", context);
    mf.spec.T = T;
    mf.spec.R = detail::parse_matrix_sequence(j["R"], context + ": field 'R'",
                                              static_cast<size_t>(T) + 1, period);
    // Sub-tolerance asymmetry is file round-trip noise; anything larger is
    // left for validation to reject.
    for (Matrix& r : mf.spec.R)
        if (relative_asymmetry(r) <= 1e-12) r = symmetrized(r);

    const bool has_b = j.contains("B");
    const bool has_d = j.contains("D");
    const bool has_m = j.contains("m");
    if (has_b || has_d || has_m) {
        if (!(has_b && has_d && has_m))
            file_error(context, "fields 'm', 'B', 'D' must be given together");
        const int m = detail::require_int(j, "m", context);
        if (m < 1) file_error(context, "m must be a positive integer");
        ControlledSystem cs;
        cs.n = n;
        cs.m = m;
        cs.T = T;
        cs.A = mf.system.A;
        cs.C = mf.system.C;
        cs.B = detail::parse_matrix_sequence(j["B"], context + ": field 'B'",
                                             static_cast<size_t>(T), period);
        cs.D = detail::parse_matrix_sequence(j["D"], context + ": field 'D'",
                                             static_cast<size_t>(T), period);
        mf.control = std::move(cs);
    }

    if (j.contains("x0")) {
        const auto& jx = j["x0"];
        if (!jx.is_array() || jx.size() != static_cast<size_t>(n))
            file_error(context, "field 'x0' must be an array of n numbers");
        Vector x0(n);
        for (int i = 0; i < n; ++i) {
            if (!jx[static_cast<size_t>(i)].is_number())
                file_error(context, "field 'x0' must contain numbers");
            x0(i) = jx[static_cast<size_t>(i)].get<double>();
        }
        mf.x0 = x0;
    }
    return mf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open for reading");
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << content;
}

inline ModelFile load_model_file(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return parse_model_json(j, path);
}

inline std::string gains_to_json(const FeedbackLaw& law, int n, int m) {
    JsonWriter w;
    w.begin_object();
    w.key("m").value(m);
    w.key("n").value(n);
    w.key("T").value(static_cast<int>(law.K.size()));
    w.key("K").begin_array();
    for (const Matrix& k : law.K) w.value(k);
    w.end_array();
    w.end_object();
    return w.str() + "\n";
}

inline FeedbackLaw parse_gains_json(const nlohmann::json& j, const std::string& context = "gains") {
    using detail::file_error;
    if (!j.is_object() || !j.contains("K")) file_error(context, "field 'K' missing");
    const int m = detail::require_int(j, "m", context);
    const int n = detail::require_int(j, "n", context);
    const int T = detail::require_int(j, "T", context);
    FeedbackLaw law;
    law.K = detail::parse_matrix_sequence(j["K"], context + ": field 'K'", static_cast<size_t>(T),
                                          std::nullopt);
    for (size_t k = 0; k < law.K.size(); ++k)
        if (law.K[k].rows() != m || law.K[k].cols() != n)
            file_error(context, "K[" + std::to_string(k) + "] does not match the declared m x n");
    return law;
}

inline FeedbackLaw load_gains_file(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return parse_gains_json(j, path);
}

inline std::string certificate_to_json(const AnalysisCertificate& cert) {
    JsonWriter w;
    w.begin_object();
    w.key("kind").value("analysis");
    w.key("alpha").value(cert.alpha);
    w.key("lambda1").value(cert.lambda1);
    w.key("lambda2").value(cert.lambda2);
    w.key("P").begin_array();
    for (const Matrix& p : cert.P) w.value(p);
    w.end_array();
    w.end_object();
    return w.str() + "\n";
}

inline std::string certificate_to_json(const SynthesisCertificate& cert) {
    JsonWriter w;
    w.begin_object();
    w.key("kind").value("synthesis");
    w.key("alpha").value(cert.alpha);
    w.key("lhat1").value(cert.lhat1);
    w.key("lhat2").value(cert.lhat2);
    w.key("X").begin_array();
    for (const Matrix& x : cert.X) w.value(x);
    w.end_array();
    w.key("Y").begin_array();
    for (const Matrix& y : cert.Y) w.value(y);
    w.end_array();
    w.end_object();
    return w.str() + "\n";
}

// Either certificate kind, as tagged in the file.
struct CertificateFile {
    std::optional<AnalysisCertificate> analysis;
    std::optional<SynthesisCertificate> synthesis;
};

inline CertificateFile parse_certificate_json(const nlohmann::json& j,
                                              const std::string& context = "certificate") {
    using detail::file_error;
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        file_error(context, "field 'kind' missing (expected \"analysis\" or \"synthesis\")");
    const std::string kind = j["kind"].get<std::string>();
    CertificateFile out;
    if (kind == "analysis") {
        AnalysisCertificate cert;
        cert.alpha = detail::require_number(j, "alpha", context);
        cert.lambda1 = detail::require_number(j, "lambda1", context);
        cert.lambda2 = detail::require_number(j, "lambda2", context);
        if (!j.contains("P")) file_error(context, "field 'P' missing");
        if (!j["P"].is_array() || j["P"].empty()) file_error(context, "field 'P' must be an array");
        cert.P = detail::parse_matrix_sequence(j["P"], context + ": field 'P'", j["P"].size(),
                                               std::nullopt);
        out.analysis = std::move(cert);
    } else if (kind == "synthesis") {
        SynthesisCertificate cert;
        cert.alpha = detail::require_number(j, "alpha", context);
        cert.lhat1 = detail::require_number(j, "lhat1", context);
        cert.lhat2 = detail::require_number(j, "lhat2", context);
        if (!j.contains("X") || !j["X"].is_array() || j["X"].empty())
            file_error(context, "field 'X' missing or not an array");
        if (!j.contains("Y") || !j["Y"].is_array())
            file_error(context, "field 'Y' missing or not an array");
        cert.X = detail::parse_matrix_sequence(j["X"], context + ": field 'X'", j["X"].size(),
                                               std::nullopt);
        cert.Y = detail::parse_matrix_sequence(j["Y"], context + ": field 'Y'", j["Y"].size(),
                                               std::nullopt);
        out.synthesis = std::move(cert);
    } else {
        file_error(context, "unknown certificate kind '" + kind + "'");
    }
    return out;
}

inline CertificateFile load_certificate_file(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return parse_certificate_json(j, path);
}

}  // namespace fts
