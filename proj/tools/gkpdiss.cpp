// gkpdiss: command-line front end for the GKP dissipation experiments.
//
// Exit codes: 0 success, 2 usage/config error, 3 numerical failure,
// 4 verification failure, 5 I/O error.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gkpdiss.hpp"
#include "gkpdiss/config.hpp"
#include "gkpdiss/io.hpp"

namespace fs = std::filesystem;
using namespace gkpdiss;

namespace {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numeric = 3, exit_verification = 4, exit_io = 5 };

int exit_code_for(ErrorKind k) {
    switch (k) {
    case ErrorKind::config: return exit_config;
    case ErrorKind::io: return exit_io;
    case ErrorKind::tolerance_exceeded: return exit_verification;
    default: return exit_numeric;
    }
}

struct Flags {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<double> epsilon;
    std::optional<double> eta;
    std::optional<long> dim;
    std::optional<long> seed;
    std::optional<double> kappa1;
    std::string out;
    bool long_running = false;
    bool quiet = false;
};

/// FNV-1a; stable across platforms, used to name run directories.
std::string short_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf, 10);
}

RunConfig assemble_config(const Flags& f) {
    RunConfig cfg = f.config_path.empty() ? RunConfig{} : RunConfig::load(f.config_path);
    auto put = [&](const char* sec, const char* key, const std::string& v) { cfg.set(sec, key, v); };
    if (f.epsilon) put("physics", "epsilon", format_double(*f.epsilon));
    if (f.eta) put("physics", "eta", format_double(*f.eta));
    if (f.dim) put("physics", "dim", std::to_string(*f.dim));
    if (f.seed) put("lyapunov", "seed", std::to_string(*f.seed));
    if (f.kappa1) put("qec", "kappa1", format_double(*f.kappa1));
    if (f.long_running) put("run", "long_running", "true");
    for (const auto& o : f.overrides) cfg.apply_override(o);
    return cfg;
}

/// Physical parameters shared by most commands.
struct Physics {
    double epsilon;
    double eta;
    std::optional<Index> dim;
};

Physics read_physics(const RunConfig& cfg, double default_epsilon) {
    Physics p{cfg.get_double("physics", "epsilon", default_epsilon), code_eta, std::nullopt};
    if (auto e = cfg.raw("physics", "eta")) p.eta = RunConfig::parse_double(*e, "physics.eta");
    if (auto d = cfg.get_int("physics", "dim")) {
        if (*d < 2) throw Error(ErrorKind::config, "physics.dim must be >= 2");
        p.dim = static_cast<Index>(*d);
    }
    if (!(p.epsilon > 0.0)) throw Error(ErrorKind::config, "physics.epsilon must be positive");
    if (!(p.eta > 0.0)) throw Error(ErrorKind::config, "physics.eta must be positive");
    return p;
}

void require_long_running(const RunConfig& cfg, double epsilon) {
    if (epsilon <= 1.0 / 20 + 1e-12 && !cfg.get_bool("run", "long_running", false)) {
        throw Error(ErrorKind::config, "epsilon <= 1/20 needs --long-running (cost grows like dim^3, dim = 20/eps)");
    }
}

SolverOptions read_solver(const RunConfig& cfg) {
    SolverOptions s;
    const std::string m = cfg.get_string("solver", "method", "sdirk4");
    if (m == "sdirk4") s.method = Method::sdirk4;
    else if (m == "dopri5") s.method = Method::dopri5;
    else throw Error(ErrorKind::config, "solver.method must be sdirk4 or dopri5");
    s.rtol = cfg.get_double("solver", "rtol", s.rtol);
    s.atol = cfg.get_double("solver", "atol", s.atol);
    s.krylov_tol = cfg.get_double("solver", "krylov_tol", s.krylov_tol);
    s.max_steps = static_cast<std::size_t>(cfg.get_int("solver", "max_steps", static_cast<std::int64_t>(s.max_steps)));
    if (!(s.rtol > 0.0) || !(s.atol > 0.0)) throw Error(ErrorKind::config, "solver tolerances must be positive");
    return s;
}

LogicalOptions read_logical(const RunConfig& cfg, const SolverOptions& solver) {
    LogicalOptions o;
    o.horizon_multiplier = cfg.get_double("logical", "horizon_multiplier", o.horizon_multiplier);
    o.tol = cfg.get_double("logical", "tol", o.tol);
    o.solver = solver;
    return o;
}

NoiseChannel parse_noise(const std::string& s) {
    if (s == "a") return NoiseChannel::loss;
    if (s == "a_dag") return NoiseChannel::gain;
    if (s == "Q") return NoiseChannel::position;
    if (s == "P") return NoiseChannel::momentum;
    throw Error(ErrorKind::config, "qec.noise must be one of a, a_dag, Q, P");
}

struct Context {
    RunConfig cfg;
    fs::path dir;
    bool quiet = false;
    ResultEnvelope env;

    void say(const std::string& line) const {
        if (!quiet) std::cout << line << '\n';
    }
    void write(const std::string& name, const std::string& contents) const { write_atomic(dir / name, contents); }
};

std::string fmt(double v) { return format_double(v); }

// --- commands -------------------------------------------------------------------

int cmd_kappa(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const double eta = cfg.raw("physics", "eta") ? RunConfig::parse_double(*cfg.raw("physics", "eta"), "physics.eta")
                                                 : code_eta;
    std::vector<double> eps = cfg.get_list("kappa", "eps");
    if (eps.empty() && cfg.has("kappa", "eps_min")) {
        const double lo = cfg.get_double("kappa", "eps_min", 0.0);
        const double hi = cfg.get_double("kappa", "eps_max", lo);
        const auto n = cfg.get_int("kappa", "points", 10);
        const bool log = cfg.get_string("kappa", "spacing", "log") == "log";
        if (!(lo > 0.0) || hi < lo || n < 1 || (n > 1 && hi == lo)) {
            throw Error(ErrorKind::config, "kappa range must satisfy 0 < eps_min < eps_max with points >= 1");
        }
        for (std::int64_t k = 0; k < n; ++k) {
            const double u = n == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n - 1);
            eps.push_back(log ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u);
        }
    }
    if (eps.empty()) throw Error(ErrorKind::config, "empty epsilon range: set kappa.eps or kappa.eps_min/eps_max");
    for (double e : eps)
        if (!(e > 0.0) || e > 1.0) throw Error(ErrorKind::config, "epsilon " + fmt(e) + " outside (0, 1]");

    std::string csv = "epsilon,kappa,certified,asymptote\n";
    Json rows = Json::array();
    ctx.say("epsilon kappa certified asymptote");
    for (double e : eps) {
        const auto k = kappa(e, eta);
        const double a = kappa_asymptote(e, eta);
        csv += fmt(e) + "," + fmt(k.value) + "," + (k.certified ? "1" : "0") + "," + fmt(a) + "\n";
        rows.push_back({{"epsilon", e}, {"kappa", k.value}, {"certified", k.certified}, {"asymptote", a}});
        ctx.say(fmt(e) + " " + fmt(k.value) + " " + (k.certified ? "yes" : "no") + " " + fmt(a));
    }
    ctx.write("kappa.csv", csv);
    ctx.env.payload = {{"eta", eta}, {"rows", rows}};
    return exit_ok;
}

int cmd_codewords(Context& ctx) {
    const auto phys = read_physics(ctx.cfg, 0.1);
    const auto params = GkpParameters::make(phys.epsilon, phys.eta, phys.dim);
    const auto code = build_code(params);
    const Index count = params.codespace_dimension();

    Json words = Json::array();
    const Operator number = number_operator(params.dim);
    for (std::size_t k = 0; k < code.codewords.size(); ++k) {
        const auto& w = code.codewords[k];
        double odd = 0.0;
        for (Index n = 1; n < w.size(); n += 2) odd += std::norm(w[n]);
        double vk = 0.0;
        for (const auto& v : code.dissipators) vk = std::max(vk, (v * w).norm());
        words.push_back({{"index", k},
                         {"norm", w.norm()},
                         {"nbar", expectation(number, w).real()},
                         {"odd_fock_weight", odd},
                         {"max_Vk_residual", vk}});
    }
    Json payload = {{"epsilon", params.epsilon}, {"eta", params.eta}, {"dim", params.dim},
                    {"truncation_below_rule", params.truncation_below_rule()}, {"codewords", words}};
    if (code.codewords.size() == 2) payload["overlap"] = std::abs(code.codewords[0].dot(code.codewords[1]));

    const auto ev = hermitian_eigenvalues(code.lyapunov);
    payload["lyapunov_lowest_eigenvalues"] = {ev[0], ev[1], ev[2]};
    const auto kernel = kernel_codewords_via_eigen(code.lyapunov, count);
    payload["kernel_projector_distance"] = projector_distance(code.codewords, kernel);

    const std::string csv = codewords_csv(code.codewords);
    ctx.write("codewords.csv", csv);
    const auto back = parse_codewords_csv(read_file(ctx.dir / "codewords.csv"));
    bool exact = back.size() == code.codewords.size();
    for (std::size_t k = 0; exact && k < back.size(); ++k) exact = back[k] == code.codewords[k];
    if (!exact) throw Error(ErrorKind::io, "codeword table did not round-trip bit-exactly");
    payload["round_trip_exact"] = exact;
    ctx.env.payload = payload;

    for (const auto& w : words)
        ctx.say("codeword " + w["index"].dump() + ": nbar " + fmt(w["nbar"]) + ", odd weight " +
                fmt(w["odd_fock_weight"]) + ", max ||V_k psi|| " + fmt(w["max_Vk_residual"]));
    ctx.say("kernel projector distance " + fmt(payload["kernel_projector_distance"]));
    return exit_ok;
}

int cmd_lyapunov(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto phys = read_physics(cfg, 0.1);
    require_long_running(cfg, phys.epsilon);
    const auto code = build_code(GkpParameters::make(phys.epsilon, phys.eta, phys.dim));
    DecayOptions o;
    o.n_trials = static_cast<std::size_t>(cfg.get_int("lyapunov", "trials", 10));
    o.seed = static_cast<std::uint64_t>(cfg.get_int("lyapunov", "seed", 1));
    o.horizon_multiplier = cfg.get_double("lyapunov", "horizon_multiplier", o.horizon_multiplier);
    o.window_fraction = cfg.get_double("lyapunov", "window_fraction", o.window_fraction);
    o.grid_intervals = static_cast<std::size_t>(cfg.get_int("lyapunov", "grid", 50));
    o.solver = read_solver(cfg);
    const std::string initial = cfg.get_string("lyapunov", "initial", "random");
    if (initial == "codeword") {
        o.initial_states = {projector(code.codewords[0])};
    } else if (initial != "random") {
        throw Error(ErrorKind::config, "lyapunov.initial must be random or codeword");
    }

    const auto rep = lyapunov_decay_experiment(code, o);
    for (const auto& t : rep.trials) {
        char name[32];
        std::snprintf(name, sizeof name, "trial_%03zu.csv", t.index);
        if (t.degenerate) {
            ctx.say("trial " + std::to_string(t.index) + ": initial state in the kernel (Tr W rho0 = " +
                    fmt(t.tr_w0) + "), skipped");
            continue;
        }
        ctx.write(name, trajectory_csv(t.records));
        ctx.say("trial " + std::to_string(t.index) + ": fitted rate " + fmt(t.fitted_rate));
    }
    ctx.env.payload = to_json(rep);
    if (std::none_of(rep.trials.begin(), rep.trials.end(), [](const DecayTrial& t) { return !t.degenerate; })) {
        ctx.say("no trial left the kernel; nothing to fit");
    } else {
        ctx.say(std::string(rep.passed ? "PASS" : "FAIL") + " decay rate >= 0.95 kappa: min " + fmt(rep.min_rate) +
                ", kappa " + fmt(rep.kappa_bound.value));
    }
    return rep.passed ? exit_ok : exit_verification;
}

int cmd_qec_sim(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto phys = read_physics(cfg, 0.1);
    require_long_running(cfg, phys.epsilon);
    const auto params = GkpParameters::make(phys.epsilon, phys.eta, phys.dim);
    const auto code = build_code(params);
    ExperimentOptions o;
    o.kappa1 = cfg.get_double("qec", "kappa1");
    o.t_final = cfg.get_double("qec", "t_final");
    o.grid_intervals = static_cast<std::size_t>(cfg.get_int("qec", "grid", 40));
    o.max_dim = static_cast<Index>(cfg.get_int("qec", "max_dim", 800));
    o.noise = parse_noise(cfg.get_string("qec", "noise", "a"));
    o.solver = read_solver(cfg);
    o.logical = read_logical(cfg, o.solver);

    const auto rep = error_rate_experiment(code, o);
    ctx.write("on.csv", trajectory_csv(rep.on.records));
    ctx.write("off.csv", trajectory_csv(rep.off.records));
    Json payload = to_json(rep);

    if (cfg.get_bool("qec", "truncation_check", false)) {
        const Index bigger = static_cast<Index>(std::ceil(1.5 * static_cast<double>(params.dim)));
        const auto code2 = build_code(GkpParameters::make(phys.epsilon, phys.eta, bigger));
        auto o2 = o;
        o2.max_dim = std::max(o.max_dim, bigger);
        const auto rep2 = error_rate_experiment(code2, o2);
        payload["truncation_check"] = {{"dim", bigger},
                                       {"on_rate", rep2.on_rate},
                                       {"off_rate", rep2.off_rate},
                                       {"on_rate_relative_change", std::abs(rep2.on_rate - rep.on_rate) / rep.on_rate},
                                       {"off_rate_relative_change",
                                        std::abs(rep2.off_rate - rep.off_rate) / rep.off_rate}};
    }
    ctx.env.payload = payload;
    ctx.say("on rate " + fmt(rep.on_rate) + ", off rate " + fmt(rep.off_rate) + ", suppression " +
            fmt(rep.suppression_ratio) + " (kappa1 " + fmt(rep.kappa1) + ")");
    for (const auto& w : rep.on.warnings) ctx.say("warning (on): " + w);
    for (const auto& w : rep.off.warnings) ctx.say("warning (off): " + w);
    return exit_ok;
}

int cmd_check(Context& ctx) {
    const auto phys = read_physics(ctx.cfg, 0.05);
    const auto params = GkpParameters::make(phys.epsilon, phys.eta, phys.dim);
    std::vector<CheckResult> checks;

    const auto tspec = verify_t_spectrum(build_t_matrix(params.epsilon, params.eta));
    checks.push_back(make_check("T eigenpairs match closed form",
                                std::max(tspec.max_eigenvalue_error, tspec.max_projector_error), 1e-10, tspec.detail));
    bool ordered = true;
    for (int k = 1; k <= 100; ++k) ordered = ordered && t_eigenvalue_ordering_holds(0.5 * k / 100.0 / params.eta, params.eta);
    checks.push_back(make_check("T eigenvalue ordering on eta*eps in (0,1/2]", ordered ? 0.0 : 1.0, 0.0));

    const auto lam = verify_lambda_closed_form(params.epsilon, params.eta, params.dim);
    checks.push_back(make_check("Lambda closed form", std::max(lam.max_deviation_plus, lam.max_deviation_minus),
                                lam.tolerance));
    const auto lemma = lemma_min_eigenvalues(params.epsilon, params.eta, params.dim);
    checks.push_back(make_check("operator inequality (minus sign), -min eigenvalue", -lemma.min_eigenvalue_plus, 1e-6));
    checks.push_back(make_check("operator inequality (plus sign), -min eigenvalue", -lemma.min_eigenvalue_minus, 1e-6));

    const auto code = build_code(params);
    for (auto& c : commutation_suite(code)) checks.push_back(std::move(c));
    const auto adj = verify_adjoint_identity(code);
    checks.push_back(adj.commutator_form);
    checks.push_back(adj.t_form);

    bool all = true;
    Json list = Json::array();
    for (const auto& c : checks) {
        all = all && c.passed;
        list.push_back(to_json(c));
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << fmt(c.value) << " (tol " << fmt(c.tolerance)
                  << ")\n";
    }
    ctx.env.payload = {{"epsilon", params.epsilon}, {"eta", params.eta}, {"dim", params.dim},
                       {"all_passed", all},         {"checks", list}};
    return all ? exit_ok : exit_verification;
}

int cmd_logical_ops(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto phys = read_physics(cfg, 0.1);
    require_long_running(cfg, phys.epsilon);
    const auto code = build_code(GkpParameters::make(phys.epsilon, phys.eta, phys.dim));
    const auto solver = read_solver(cfg);
    const auto j = logical_operators(gkp_model(code), code, read_logical(cfg, solver));

    Json spectra = Json::object();
    const char* names[3] = {"jx", "jy", "jz"};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto ev = hermitian_eigenvalues(j[i]);
        spectra[names[i]] = {{"min", ev.minCoeff()}, {"max", ev.maxCoeff()}};
    }
    const StateVector& z0 = code.codewords[0];
    const StateVector& z1 = code.codewords[1];
    const StateVector plus = (z0 + z1) / std::sqrt(2.0);
    const StateVector plus_i = (z0 + I_unit * z1) / std::sqrt(2.0);
    Json bloch = Json::object();
    const std::pair<const char*, const StateVector*> states[] = {
        {"zero", &z0}, {"one", &z1}, {"plus", &plus}, {"plus_i", &plus_i}};
    for (const auto& [name, psi] : states) {
        const auto b = bloch_coordinates(j, projector(*psi));
        bloch[name] = {b.x, b.y, b.z};
    }
    ctx.env.payload = {{"epsilon", code.params.epsilon},
                       {"dim", code.params.dim},
                       {"converged", j.converged},
                       {"residual", j.convergence_residual},
                       {"horizon_reached", j.horizon_reached},
                       {"spectra", spectra},
                       {"bloch", bloch}};
    ctx.say(std::string(j.converged ? "converged" : "NOT converged") + ", residual " + fmt(j.convergence_residual));
    for (std::size_t i = 0; i < 3; ++i)
        ctx.say(std::string(names[i]) + " spectrum [" + fmt(spectra[names[i]]["min"]) + ", " +
                fmt(spectra[names[i]]["max"]) + "]");
    if (!j.converged) {
        ctx.env.status = "failed";
        ctx.env.error = {{"kind", "non-convergence"}, {"message", "adjoint flow residual above logical.tol"}};
        return exit_numeric;
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GKP-stabilizing Lindblad dissipators: construction, integration and verification"};
    app.require_subcommand(1);
    // Global options may also follow the subcommand name.
    app.fallthrough();
    Flags f;
    app.add_option("-c,--config", f.config_path, "Config file (sectioned key = value)");
    app.add_option("-s,--set", f.overrides, "Override section.key=value (repeatable; wins over the file)")
        ->expected(1)
        ->take_all();
    app.add_option("--epsilon", f.epsilon, "Finite-energy parameter");
    app.add_option("--eta", f.eta, "Lattice constant (default 2 sqrt(pi))");
    app.add_option("--dim", f.dim, "Fock dimension (overrides the 20/eps rule)");
    app.add_option("--seed", f.seed, "Seed for random initial states");
    app.add_option("--kappa1", f.kappa1, "Photon-loss rate (default eps/5)");
    app.add_option("-o,--out", f.out, std::string("Output directory (default $") + output_dir_env + "/<command>-<hash>)");
    app.add_flag("--long-running", f.long_running, "Allow eps <= 1/20 experiments");
    app.add_flag("-q,--quiet", f.quiet, "Suppress progress output");

    using Handler = int (*)(Context&);
    const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
        {"kappa", "Tabulate the certified decay rate kappa(eps, eta)", cmd_kappa},
        {"codewords", "Build codewords and write Fock coefficients plus diagnostics", cmd_codewords},
        {"lyapunov", "Fit the decay rate of Tr(W rho) for random initial states", cmd_lyapunov},
        {"qec-sim", "Photon-loss experiment with and without stabilization", cmd_qec_sim},
        {"check", "Run the operator-identity verification suite", cmd_check},
        {"logical-ops", "Compute the logical observables J_x, J_y, J_z", cmd_logical_ops},
    };
    for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    std::string command;
    Handler handler = nullptr;
    for (const auto& [name, help, fn] : commands)
        if (app.got_subcommand(name)) {
            command = name;
            handler = fn;
        }

    Context ctx;
    ctx.quiet = f.quiet;
    ctx.env.command = command;
    ctx.env.started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    int rc = exit_ok;
    try {
        ctx.cfg = assemble_config(f);
        ctx.env.config_text = ctx.cfg.serialize();
        if (RunConfig::parse(ctx.env.config_text) != ctx.cfg) {
            throw Error(ErrorKind::config, "configuration does not round-trip");
        }
        fs::path base = f.out.empty() ? fs::path(ctx.cfg.get_string("run", "output_dir", default_output_dir().string()))
                                              / (command + "-" + short_hash(ctx.env.config_text))
                                      : fs::path(f.out);
        ctx.dir = base;
        rc = handler(ctx);
        if (rc == exit_verification) ctx.env.status = "verification-failed";
    } catch (const Error& e) {
        rc = exit_code_for(e.kind());
        ctx.env.status = "failed";
        ctx.env.error = error_payload(e);
        std::cerr << e.what() << '\n';
    } catch (const std::exception& e) {
        rc = exit_numeric;
        ctx.env.status = "failed";
        ctx.env.error = {{"kind", "internal"}, {"message", e.what()}};
        std::cerr << e.what() << '\n';
    }
    ctx.env.finished = std::chrono::system_clock::now();
    ctx.env.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!ctx.env.error.is_null()) std::cerr << ctx.env.error.dump() << '\n';
    if (!ctx.dir.empty()) {
        try {
            write_atomic(ctx.dir / "envelope.json", ctx.env.dump());
            if (!ctx.quiet) std::cout << "wrote " << (ctx.dir / "envelope.json").string() << '\n';
        } catch (const Error& e) {
            std::cerr << e.what() << '\n';
            if (rc == exit_ok) rc = exit_io;
        }
    }
    return rc;
}
