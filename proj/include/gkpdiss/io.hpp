#pragma once

// Result persistence: JSON envelopes, flat CSV time series, atomic writes.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gkpdiss/analysis.hpp"
#include "gkpdiss/config.hpp"
#include "gkpdiss/evolve.hpp"

namespace gkpdiss {

using Json = nlohmann::json;

inline constexpr const char* artifact_version = "0.1.0";
inline constexpr const char* output_dir_env = "GKPDISS_OUTPUT_DIR";

/// Directory used when no explicit output path is given.
inline std::filesystem::path default_output_dir() {
    if (const char* env = std::getenv(output_dir_env); env && *env) return env;
    return "gkpdiss-out";
}

/// Writes to a sibling temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorKind::io, "cannot create directory '" + path.parent_path().string() + "'");
    }
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(std::hash<std::string>{}(path.string() + std::to_string(std::clock())));
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorKind::io, "cannot write '" + tmp.string() + "'");
        f << contents;
        f.flush();
        if (!f) throw Error(ErrorKind::io, "write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorKind::io, "cannot rename into '" + path.string() + "'");
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// 17 significant digits; non-finite values print as nan/inf.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// --- CSV -------------------------------------------------------------------

inline constexpr const char* trajectory_csv_header = "t,trace,TrW,jx,jy,jz,nbar";

inline std::string trajectory_csv(const std::vector<ObservableRecord>& records) {
    std::ostringstream os;
    os << trajectory_csv_header << '\n';
    for (const auto& r : records) {
        os << format_double(r.t) << ',' << format_double(r.trace) << ',' << format_double(r.tr_w) << ','
           << format_double(r.jx) << ',' << format_double(r.jy) << ',' << format_double(r.jz) << ','
           << format_double(r.nbar) << '\n';
    }
    return os.str();
}

/// Parses a numeric CSV with a header row.
inline std::vector<std::vector<double>> parse_csv(const std::string& text, std::vector<std::string>* header = nullptr) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        if (first) {
            first = false;
            if (header) {
                while (std::getline(ls, cell, ',')) header->push_back(cell);
            }
            continue;
        }
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) {
            if (cell == "nan") row.push_back(std::numeric_limits<double>::quiet_NaN());
            else row.push_back(std::strtod(cell.c_str(), nullptr));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Fock coefficients: n, re/im per codeword.
inline std::string codewords_csv(const std::vector<StateVector>& words) {
    std::ostringstream os;
    os << 'n';
    for (std::size_t k = 0; k < words.size(); ++k) os << ",re" << k << ",im" << k;
    os << '\n';
    const Index dim = words.empty() ? 0 : words[0].size();
    for (Index n = 0; n < dim; ++n) {
        os << n;
        for (const auto& w : words) os << ',' << format_double(w[n].real()) << ',' << format_double(w[n].imag());
        os << '\n';
    }
    return os.str();
}

inline std::vector<StateVector> parse_codewords_csv(const std::string& text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows[0].size() < 3 || (rows[0].size() - 1) % 2) {
        throw Error(ErrorKind::io, "malformed codeword table");
    }
    const std::size_t count = (rows[0].size() - 1) / 2;
    std::vector<StateVector> out(count, StateVector(static_cast<Index>(rows.size())));
    for (std::size_t n = 0; n < rows.size(); ++n) {
        if (rows[n].size() != 2 * count + 1) throw Error(ErrorKind::io, "ragged codeword table");
        for (std::size_t k = 0; k < count; ++k)
            out[k][static_cast<Index>(n)] = Complex(rows[n][1 + 2 * k], rows[n][2 + 2 * k]);
    }
    return out;
}

// --- JSON payloads ------------------------------------------------------------

/// JSON has no NaN; non-finite numbers become null.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const SolverOptions& s) {
    return {{"method", std::string(to_string(s.method))},
            {"rtol", s.rtol},
            {"atol", s.atol},
            {"krylov_tol", s.krylov_tol}};
}

inline Json to_json(const SolverStats& s) {
    return {{"accepted_steps", s.accepted},
            {"rejected_steps", s.rejected},
            {"generator_applications", s.generator_applications},
            {"linear_solves", s.linear_solves},
            {"krylov_iterations", s.krylov_iterations},
            {"krylov_failures", s.krylov_failures}};
}

inline Json to_json(const CheckResult& c) {
    Json j = {{"name", c.name}, {"passed", c.passed}, {"value", number(c.value)}, {"tolerance", c.tolerance}};
    if (!c.detail.empty()) j["detail"] = c.detail;
    return j;
}

inline Json to_json(const Trajectory& t) {
    Json j = {{"points", t.records.size()}, {"warnings", t.warnings}, {"solver", to_json(t.stats)}};
    if (!t.records.empty()) {
        const auto& last = t.records.back();
        j["final"] = {{"t", last.t},          {"trace", number(last.trace)}, {"TrW", number(last.tr_w)},
                      {"jx", number(last.jx)}, {"jy", number(last.jy)},       {"jz", number(last.jz)},
                      {"nbar", number(last.nbar)}};
    }
    return j;
}

inline Json to_json(const DecayReport& r) {
    Json trials = Json::array();
    for (const auto& t : r.trials) {
        trials.push_back({{"index", t.index},
                          {"degenerate", t.degenerate},
                          {"TrW0", t.tr_w0},
                          {"fitted_rate", number(t.fitted_rate)}});
    }
    return {{"epsilon", r.epsilon},
            {"eta", r.eta},
            {"dim", r.dim},
            {"kappa", r.kappa_bound.value},
            {"kappa_certified", r.kappa_bound.certified},
            {"horizon", r.horizon},
            {"window_start", r.window_start},
            {"min_rate", number(r.min_rate)},
            {"median_rate", number(r.median_rate)},
            {"passed", r.passed},
            {"trials", trials}};
}

inline Json to_json(const ExperimentReport& r) {
    return {{"epsilon", r.epsilon},
            {"dim", r.dim},
            {"kappa1", r.kappa1},
            {"t_final", r.t_final},
            {"noise", r.noise},
            {"jz_on_final", r.jz_on_final},
            {"jz_off_final", r.jz_off_final},
            {"on_rate", r.on_rate},
            {"off_rate", r.off_rate},
            {"suppression_ratio", number(r.suppression_ratio)},
            {"bare_suppression_ratio", number(r.bare_suppression_ratio)},
            {"fitted_on_rate", number(r.fitted_on_rate)},
            {"fitted_off_rate", number(r.fitted_off_rate)},
            {"logical_residual", r.logical_residual},
            {"on", to_json(r.on)},
            {"off", to_json(r.off)}};
}

// --- envelope -------------------------------------------------------------

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// One JSON document per run. `payload` is deterministic for a given
/// config; timestamps and wall-clock time live outside it.
struct ResultEnvelope {
    std::string command;
    std::string config_text;  // canonical serialization of the parsed config
    std::chrono::system_clock::time_point started;
    std::chrono::system_clock::time_point finished;
    double runtime_seconds = 0.0;
    std::string status = "ok";
    Json payload = Json::object();
    Json error = nullptr;

    [[nodiscard]] Json to_json() const {
        Json j = {{"artifact", "gkpdiss"},
                  {"version", artifact_version},
                  {"command", command},
                  {"config", config_text},
                  {"started", utc_timestamp(started)},
                  {"finished", utc_timestamp(finished)},
                  {"runtime_seconds", runtime_seconds},
                  {"status", status},
                  {"payload", payload}};
        if (!error.is_null()) j["error"] = error;
        return j;
    }

    [[nodiscard]] std::string dump() const { return to_json().dump(2) + "\n"; }
};

inline Json error_payload(const Error& e) {
    return {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
}

} // namespace gkpdiss
