#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gkpdiss/gkp.hpp"
#include "gkpdiss/integrate.hpp"
#include "gkpdiss/lindblad.hpp"

namespace gkpdiss {

struct LogicalOperators {
    Operator jx, jy, jz;
    double convergence_residual = 0.0;  // max_xi ||L*(J_xi)||_F / ||J_xi||_F
    double horizon_reached = 0.0;
    bool converged = false;

    [[nodiscard]] const Operator& operator[](std::size_t i) const {
        return i == 0 ? jx : (i == 1 ? jy : jz);
    }

    /// Throws non_convergence if the residual rule was not met.
    void require_converged(double tol) const {
        if (!converged) {
            std::ostringstream os;
            os << "logical operators residual " << convergence_residual << " > " << tol
               << " at horizon t = " << horizon_reached;
            throw Error(ErrorKind::non_convergence, os.str());
        }
    }
};

struct BlochVector {
    double x = 0.0, y = 0.0, z = 0.0;
    [[nodiscard]] double norm2() const { return x * x + y * y + z * z; }
};

/// (Tr J_x rho, Tr J_y rho, Tr J_z rho). Imaginary parts above 1e-8 indicate
/// a non-Hermitian input and are rejected.
inline BlochVector bloch_coordinates(const LogicalOperators& j, const Operator& rho) {
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        require_same_shape(j[i], rho, "bloch_coordinates");
        const Complex v = trace_product(j[i], rho);
        if (std::abs(v.imag()) > 1e-8) {
            std::ostringstream os;
            os << "bloch_coordinates: Tr(J rho) has imaginary part " << v.imag();
            throw Error(ErrorKind::invalid_input, os.str());
        }
        out[i] = v.real();
    }
    return {out[0], out[1], out[2]};
}

inline BlochVector bloch_coordinates(const LogicalOperators& j, const DensityMatrix& rho) {
    return bloch_coordinates(j, rho.matrix());
}

// --- forward evolution ---------------------------------------------------

struct ObservableSpec {
    /// Output grid; 0 and t_final are always included.
    std::vector<double> times;
    std::optional<Operator> lyapunov;
    std::optional<LogicalOperators> logical;
    bool photon_number = true;
    bool check_positivity = true;
    double positivity_warning = 1e-6;
    /// Keep density matrices at these grid times (matched to 1e-12).
    std::vector<double> snapshot_times;
};

struct ObservableRecord {
    double t = 0.0;
    double trace = 0.0;
    double tr_w = std::nan("");
    double jx = std::nan("");
    double jy = std::nan("");
    double jz = std::nan("");
    double nbar = std::nan("");
    double min_eigenvalue = std::nan("");
};

struct Snapshot {
    double t = 0.0;
    Operator rho;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<ObservableRecord> records;
    std::vector<Snapshot> snapshots;
    std::vector<std::string> warnings;
    SolverStats stats;
};

/// Uniform grid 0, t/n, ..., t.
inline std::vector<double> uniform_grid(double t_final, std::size_t intervals) {
    std::vector<double> g(intervals + 1);
    for (std::size_t k = 0; k <= intervals; ++k)
        g[k] = t_final * static_cast<double>(k) / static_cast<double>(intervals);
    g.back() = t_final;
    return g;
}

namespace detail {

inline std::vector<double> output_grid(const ObservableSpec& spec, double t_final) {
    std::vector<double> g{0.0};
    for (double t : spec.times) {
        if (t > 0.0 && t < t_final) g.push_back(t);
    }
    for (double t : spec.snapshot_times) {
        if (t > 0.0 && t < t_final) g.push_back(t);
    }
    g.push_back(t_final);
    std::sort(g.begin(), g.end());
    std::vector<double> out;
    for (double t : g)
        if (out.empty() || t > out.back() + 1e-12 * std::max(1.0, t_final)) out.push_back(t);
    out.back() = t_final;
    return out;
}

inline ObservableRecord observe(double t, const Operator& rho, const ObservableSpec& spec,
                                const Operator* number) {
    ObservableRecord r;
    r.t = t;
    r.trace = rho.trace().real();
    if (spec.lyapunov) r.tr_w = trace_product(*spec.lyapunov, rho).real();
    if (spec.logical) {
        const auto b = bloch_coordinates(*spec.logical, rho);
        r.jx = b.x;
        r.jy = b.y;
        r.jz = b.z;
    }
    if (number) r.nbar = trace_product(*number, rho).real();
    if (spec.check_positivity) r.min_eigenvalue = min_eigenvalue(rho);
    return r;
}

} // namespace detail

/// Integrates d rho/dt = L(rho) from rho0 to t_final and records observables
/// on the output grid. Positivity is monitored, not enforced.
inline Trajectory evolve(const LindbladModel& model, const DensityMatrix& rho0, double t_final,
                         const SolverOptions& solver = {}, const ObservableSpec& record = {}) {
    if (!(t_final > 0.0) || !std::isfinite(t_final)) {
        throw Error(ErrorKind::invalid_input, "evolve: t_final must be positive");
    }
    if (rho0.dim() != model.dim()) {
        throw Error(ErrorKind::shape, "evolve: initial state dimension does not match model");
    }
    Trajectory traj;
    traj.times = detail::output_grid(record, t_final);
    std::optional<Operator> number;
    if (record.photon_number) number = number_operator(model.dim());

    Propagator prop(model, Direction::forward, solver);
    prop.reset(rho0.matrix());

    auto is_snapshot = [&](double t) {
        return std::any_of(record.snapshot_times.begin(), record.snapshot_times.end(),
                           [&](double s) { return std::abs(s - t) <= 1e-12 * std::max(1.0, t_final); });
    };

    for (double t : traj.times) {
        if (t > 0.0) prop.advance_to(t);
        Operator rho = prop.state();
        if (solver.enforce_hermitian) rho = hermitian_part(rho);
        auto rec = detail::observe(t, rho, record, number ? &*number : nullptr);
        if (record.check_positivity && rec.min_eigenvalue < -record.positivity_warning) {
            std::ostringstream os;
            os << "positivity violation at t = " << t << ": minimum eigenvalue " << rec.min_eigenvalue;
            traj.warnings.push_back(os.str());
        }
        traj.records.push_back(rec);
        if (is_snapshot(t)) traj.snapshots.push_back({t, std::move(rho)});
    }
    traj.stats = prop.stats();
    return traj;
}

// --- logical operators ---------------------------------------------------

struct LogicalOptions {
    double horizon_multiplier = 20.0;
    double tol = 1e-9;
    SolverOptions solver{};
};

/// J_xi = lim_{t->inf} exp(t L*)(S_xi): integrates the adjoint equation from
/// each logical Pauli until ||L*(X)||_F <= tol ||X||_F or the horizon
/// horizon_multiplier / kappa(eps, eta) is reached.
inline LogicalOperators logical_operators(const LindbladModel& model, const GkpCode& code,
                                          const LogicalOptions& opts = {}) {
    if (!code.logical) {
        throw Error(ErrorKind::invalid_input, "logical operators need the two-codeword lattice");
    }
    if (model.dim() != code.params.dim) {
        throw Error(ErrorKind::shape, "logical_operators: code and model dimensions differ");
    }
    const auto k = kappa(code.params.epsilon, code.params.eta);
    if (!(k.value > 0.0)) {
        throw Error(ErrorKind::invalid_input, "kappa is not positive; no horizon for the adjoint flow");
    }
    const double horizon = opts.horizon_multiplier / k.value;
    const std::array<const Operator*, 3> start = {&code.logical->sx, &code.logical->sy, &code.logical->sz};

    LogicalOperators out;
    out.converged = true;
    std::array<Operator*, 3> dest = {&out.jx, &out.jy, &out.jz};
    for (std::size_t i = 0; i < 3; ++i) {
        Propagator prop(model, Direction::adjoint, opts.solver);
        prop.reset(*start[i]);
        double residual = std::numeric_limits<double>::infinity();
        auto check = [&]() {
            const Operator x = prop.state();
            residual = prop.derivative().norm() / x.norm();
            return residual <= opts.tol;
        };
        prop.advance_to(horizon, check);
        *dest[i] = hermitian_part(prop.state());
        out.convergence_residual = std::max(out.convergence_residual, residual);
        out.horizon_reached = std::max(out.horizon_reached, prop.time());
        if (residual > opts.tol) out.converged = false;
    }
    return out;
}

} // namespace gkpdiss
