#pragma once

#include "fts/common.hpp"

#include <cstdio>

namespace fts {

// Minimal streaming JSON writer with a fixed number format (17 significant
// digits), so machine output is bit-stable across runs.
class JsonWriter {
public:
    std::string str() const { return out_; }

    JsonWriter& begin_object() {
        comma();
        out_ += '{';
        stack_.push_back(false);
        return *this;
    }
    JsonWriter& end_object() {
        out_ += '}';
        stack_.pop_back();
        mark();
        return *this;
    }
    JsonWriter& begin_array() {
        comma();
        out_ += '[';
        stack_.push_back(false);
        return *this;
    }
    JsonWriter& end_array() {
        out_ += ']';
        stack_.pop_back();
        mark();
        return *this;
    }
    JsonWriter& key(const std::string& k) {
        comma();
        append_string(k);
        out_ += ':';
        pending_value_ = true;
        return *this;
    }
    JsonWriter& value(double v) {
        comma();
        if (std::isfinite(v)) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out_ += buf;
        } else if (std::isnan(v)) {
            out_ += "\"nan\"";
        } else {
            out_ += v > 0 ? "\"inf\"" : "\"-inf\"";
        }
        mark();
        return *this;
    }
    JsonWriter& value(int v) { return value_raw(std::to_string(v)); }
    JsonWriter& value(std::int64_t v) { return value_raw(std::to_string(v)); }
    JsonWriter& value(std::uint64_t v) { return value_raw(std::to_string(v)); }
    JsonWriter& value(bool v) { return value_raw(v ? "true" : "false"); }
    JsonWriter& value(const std::string& v) {
        comma();
        append_string(v);
        mark();
        return *this;
    }
    JsonWriter& value(const char* v) { return value(std::string(v)); }
    JsonWriter& null() { return value_raw("null"); }

    JsonWriter& value(const Matrix& m) {
        begin_array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            begin_array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) value(m(i, j));
            end_array();
        }
        end_array();
        return *this;
    }
    JsonWriter& value(const Vector& v) {
        begin_array();
        for (Eigen::Index i = 0; i < v.size(); ++i) value(v(i));
        end_array();
        return *this;
    }
    JsonWriter& value(const std::vector<double>& v) {
        begin_array();
        for (double x : v) value(x);
        end_array();
        return *this;
    }

private:
    JsonWriter& value_raw(const std::string& s) {
        comma();
        out_ += s;
        mark();
        return *this;
    }
    void comma() {
        if (pending_value_) {
            pending_value_ = false;
            return;
        }
        if (!stack_.empty() && stack_.back()) out_ += ',';
    }
    void mark() {
        if (!stack_.empty()) stack_.back() = true;
    }
    void append_string(const std::string& s) {
        out_ += '"';
        for (char c : s) {
            switch (c) {
                case '"': out_ += "\\\""; break;
                case '\\': out_ += "\\\\"; break;
                case '\n': out_ += "\\n"; break;
                case '\t': out_ += "\\t"; break;
                case '\r': out_ += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", c);
                        out_ += buf;
                    } else {
                        out_ += c;
                    }
            }
        }
        out_ += '"';
    }

    std::string out_;
    std::vector<bool> stack_;
    bool pending_value_ = false;
};

// FNV-1a 64-bit digest of raw bytes, as a fixed-width hex string.
inline std::string fnv1a_digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace fts
