#pragma once

// Run configuration: a sectioned key = value text format with flag
// overrides. Values stay strings until a typed getter reads them, so
// parse -> serialize -> parse is the identity.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gkpdiss/error.hpp"

namespace gkpdiss {

class RunConfig {
public:
    using Section = std::map<std::string, std::string>;

    /// Accepts
    ///   # comment            ; comment
    ///   [section]
    ///   key = value
    /// Keys before the first section header land in section "run".
    static RunConfig parse(std::string_view text, std::string_view origin = "<config>") {
        RunConfig cfg;
        std::string section = "run";
        std::size_t lineno = 0;
        std::istringstream in{std::string(text)};
        std::string line;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string s = trim(strip_comment(line));
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']' || s.size() < 3) fail(origin, lineno, "malformed section header");
                section = trim(s.substr(1, s.size() - 2));
                if (!valid_name(section)) fail(origin, lineno, "invalid section name '" + section + "'");
                cfg.sections_[section];
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) fail(origin, lineno, "expected key = value");
            const std::string key = trim(s.substr(0, eq));
            const std::string value = trim(s.substr(eq + 1));
            if (!valid_name(key)) fail(origin, lineno, "invalid key '" + key + "'");
            auto& sec = cfg.sections_[section];
            if (sec.count(key)) fail(origin, lineno, "duplicate key '" + section + "." + key + "'");
            sec[key] = value;
        }
        return cfg;
    }

    static RunConfig load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw Error(ErrorKind::io, "cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str(), path);
    }

    /// Canonical text: sections and keys in lexicographic order.
    [[nodiscard]] std::string serialize() const {
        std::ostringstream os;
        bool first = true;
        for (const auto& [name, sec] : sections_) {
            if (!first) os << '\n';
            first = false;
            os << '[' << name << "]\n";
            for (const auto& [k, v] : sec) os << k << " = " << v << '\n';
        }
        return os.str();
    }

    /// "section.key=value"; flags win over file values.
    void apply_override(std::string_view assignment) {
        const auto eq = assignment.find('=');
        const auto dot = assignment.find('.');
        if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
            throw Error(ErrorKind::config, "override '" + std::string(assignment) + "' is not section.key=value");
        }
        const std::string section = trim(std::string(assignment.substr(0, dot)));
        const std::string key = trim(std::string(assignment.substr(dot + 1, eq - dot - 1)));
        if (!valid_name(section) || !valid_name(key)) {
            throw Error(ErrorKind::config, "override '" + std::string(assignment) + "' has an invalid name");
        }
        set(section, key, trim(std::string(assignment.substr(eq + 1))));
    }

    void set(const std::string& section, const std::string& key, std::string value) {
        sections_[section][key] = std::move(value);
    }

    [[nodiscard]] bool has(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        return it != sections_.end() && it->second.count(key);
    }

    [[nodiscard]] std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        if (it == sections_.end()) return std::nullopt;
        auto kt = it->second.find(key);
        if (kt == it->second.end()) return std::nullopt;
        return kt->second;
    }

    [[nodiscard]] std::string get_string(const std::string& section, const std::string& key,
                                         std::string fallback) const {
        return raw(section, key).value_or(std::move(fallback));
    }

    [[nodiscard]] std::optional<double> get_double(const std::string& section, const std::string& key) const {
        auto v = raw(section, key);
        if (!v) return std::nullopt;
        return parse_double(*v, section + "." + key);
    }

    [[nodiscard]] double get_double(const std::string& section, const std::string& key, double fallback) const {
        return get_double(section, key).value_or(fallback);
    }

    [[nodiscard]] std::optional<std::int64_t> get_int(const std::string& section, const std::string& key) const {
        auto v = raw(section, key);
        if (!v) return std::nullopt;
        std::int64_t out = 0;
        const auto* end = v->data() + v->size();
        auto [p, ec] = std::from_chars(v->data(), end, out);
        if (ec != std::errc() || p != end) {
            throw Error(ErrorKind::config, section + "." + key + " = '" + *v + "' is not an integer");
        }
        return out;
    }

    [[nodiscard]] std::int64_t get_int(const std::string& section, const std::string& key,
                                       std::int64_t fallback) const {
        return get_int(section, key).value_or(fallback);
    }

    [[nodiscard]] bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        auto v = raw(section, key);
        if (!v) return fallback;
        std::string s = *v;
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
        if (s == "false" || s == "no" || s == "off" || s == "0") return false;
        throw Error(ErrorKind::config, section + "." + key + " = '" + *v + "' is not a boolean");
    }

    /// Comma-separated list of doubles.
    [[nodiscard]] std::vector<double> get_list(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        auto v = raw(section, key);
        if (!v) return out;
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(parse_double(item, section + "." + key));
        }
        return out;
    }

    [[nodiscard]] const std::map<std::string, Section>& sections() const { return sections_; }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    static double parse_double(const std::string& text, const std::string& what) {
        // Named lattice constants are accepted wherever a number is.
        if (text == "2sqrt(pi)") return 2.0 * std::sqrt(3.14159265358979323846);
        if (text == "sqrt(2pi)") return std::sqrt(2.0 * 3.14159265358979323846);
        double out = 0.0;
        const auto* end = text.data() + text.size();
        auto [p, ec] = std::from_chars(text.data(), end, out);
        if (ec != std::errc() || p != end || !std::isfinite(out)) {
            throw Error(ErrorKind::config, what + " = '" + text + "' is not a finite number");
        }
        return out;
    }

private:
    static std::string strip_comment(const std::string& s) {
        const auto pos = s.find_first_of("#;");
        return pos == std::string::npos ? s : s.substr(0, pos);
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static bool valid_name(const std::string& s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
            return std::isalnum(c) || c == '_' || c == '-';
        });
    }

    [[noreturn]] static void fail(std::string_view origin, std::size_t line, const std::string& what) {
        throw Error(ErrorKind::config, std::string(origin) + ":" + std::to_string(line) + ": " + what);
    }

    std::map<std::string, Section> sections_;
};

} // namespace gkpdiss
