#ifndef SHARPINEQ_REPORT_HPP
#define SHARPINEQ_REPORT_HPP

/*
 * Machine-readable output.  Numbers are always serialized with a fixed
 * 17-significant-digit format and object keys keep insertion order, so
 * identical inputs produce byte-identical reports.
 */

#include <cstdio>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sharpineq::report {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Json {
public:
    Json() : value_(nullptr) {}
    Json(bool b) : value_(b) {}
    Json(int v) : value_(static_cast<long long>(v)) {}
    Json(long long v) : value_(v) {}
    Json(double v) : value_(v) {}
    Json(const char* s) : value_(std::string(s)) {}
    Json(std::string s) : value_(std::move(s)) {}

    static Json object() {
        Json j;
        j.value_ = Object{};
        return j;
    }
    static Json array() {
        Json j;
        j.value_ = Array{};
        return j;
    }

    Json& set(const std::string& key, Json v) {
        std::get<Object>(value_).emplace_back(key, std::move(v));
        return *this;
    }
    Json& push(Json v) {
        std::get<Array>(value_).push_back(std::move(v));
        return *this;
    }

    void dump(std::ostream& os, int indent = 0) const {
        write(os, indent, 0);
        os << "\n";
    }
    std::string dump_string(int indent = 0) const {
        std::ostringstream os;
        dump(os, indent);
        return os.str();
    }

private:
    using Array = std::vector<Json>;
    using Object = std::vector<std::pair<std::string, Json>>;
    std::variant<std::nullptr_t, bool, long long, double, std::string, Array, Object> value_;

    static void escape(std::ostream& os, const std::string& s) {
        os << '"';
        for (char ch : s) {
            switch (ch) {
                case '"': os << "\\\""; break;
                case '\\': os << "\\\\"; break;
                case '\n': os << "\\n"; break;
                case '\t': os << "\\t"; break;
                default: os << ch;
            }
        }
        os << '"';
    }

    void write(std::ostream& os, int indent, int depth) const {
        const std::string pad(indent * (depth + 1), ' ');
        const std::string close_pad(indent * depth, ' ');
        const char* nl = indent > 0 ? "\n" : "";
        if (std::holds_alternative<std::nullptr_t>(value_)) {
            os << "null";
        } else if (const bool* b = std::get_if<bool>(&value_)) {
            os << (*b ? "true" : "false");
        } else if (const long long* i = std::get_if<long long>(&value_)) {
            os << *i;
        } else if (const double* d = std::get_if<double>(&value_)) {
            os << fmt17(*d);
        } else if (const std::string* s = std::get_if<std::string>(&value_)) {
            escape(os, *s);
        } else if (const Array* a = std::get_if<Array>(&value_)) {
            if (a->empty()) {
                os << "[]";
                return;
            }
            os << "[" << nl;
            for (std::size_t i = 0; i < a->size(); ++i) {
                if (indent > 0) os << pad;
                (*a)[i].write(os, indent, depth + 1);
                if (i + 1 < a->size()) os << ",";
                os << nl;
            }
            if (indent > 0) os << close_pad;
            os << "]";
        } else if (const Object* o = std::get_if<Object>(&value_)) {
            if (o->empty()) {
                os << "{}";
                return;
            }
            os << "{" << nl;
            for (std::size_t i = 0; i < o->size(); ++i) {
                if (indent > 0) os << pad;
                escape(os, (*o)[i].first);
                os << (indent > 0 ? ": " : ":");
                (*o)[i].second.write(os, indent, depth + 1);
                if (i + 1 < o->size()) os << ",";
                os << nl;
            }
            if (indent > 0) os << close_pad;
            os << "}";
        }
    }
};

/** One CSV row; doubles at 17 significant digits. */
inline void csv_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ",";
        os << cells[i];
    }
    os << "\n";
}

} // namespace sharpineq::report

#endif
