#pragma once

// Time integration of dX/dt = L(X) (Schroedinger picture) or dX/dt = L*(X)
// (Heisenberg picture) in matrix form, never forming the dim^2 x dim^2
// superoperator.
//
// Two steppers share one generator:
//   * sdirk4: L-stable singly diagonally implicit RK of order 4 with an
//     embedded order-3 estimate (Hairer & Wanner, SDIRK4, gamma = 1/4). Each
//     stage solves (I - h gamma L) Y = B with right-preconditioned GMRES; the
//     preconditioner is the exact inverse of the no-jump part, which is
//     diagonal in the eigenbasis of K = sum rate V^dag V / 2.
//   * dopri5: explicit Dormand-Prince 5(4). Only practical when
//     ||K|| * t_final is modest; the stabilizing dissipators make the GKP
//     models stiff (||K|| ~ 1e5 at dim 200).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "gkpdiss/lindblad.hpp"

namespace gkpdiss {

enum class Direction { forward, adjoint };
enum class Method { sdirk4, dopri5 };

inline std::string_view to_string(Method m) { return m == Method::sdirk4 ? "sdirk4" : "dopri5"; }

struct SolverOptions {
    Method method = Method::sdirk4;
    double rtol = 1e-8;
    double atol = 1e-10;
    double initial_step = 0.0;  // 0 selects automatically
    double max_step = std::numeric_limits<double>::infinity();
    double min_step = 1e-12;
    std::size_t max_steps = 100000;
    double krylov_tol = 1e-12;
    int krylov_restart = 40;
    int krylov_max_restarts = 25;
    bool enforce_hermitian = true;
};

struct SolverStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t generator_applications = 0;
    std::size_t krylov_iterations = 0;
    std::size_t linear_solves = 0;
    std::size_t krylov_failures = 0;
};

/// L or L* expressed in the eigenbasis of K = sum rate V^dag V / 2, where the
/// no-jump part X -> -(K X + X K) is an entrywise scaling.
class LinearGenerator {
public:
    LinearGenerator(const LindbladModel& model, Direction dir) : dir_(dir), dim_(model.dim()) {
        Eigen::SelfAdjointEigenSolver<Operator> es(model.decay_operator() * 0.5);
        basis_ = es.eigenvectors();
        decay_ = es.eigenvalues();
        for (const auto& c : model.channels()) {
            if (c.rate == 0.0) continue;
            Operator v = basis_.adjoint() * c.op * basis_;
            Operator vd = v.adjoint();
            jumps_.push_back({std::move(v), std::move(vd), c.rate});
        }
        pair_decay_.resize(dim_, dim_);
        for (Index j = 0; j < dim_; ++j)
            for (Index i = 0; i < dim_; ++i) pair_decay_(i, j) = decay_[i] + decay_[j];
    }

    [[nodiscard]] Index dim() const { return dim_; }
    [[nodiscard]] Direction direction() const { return dir_; }
    [[nodiscard]] double max_decay() const { return decay_.maxCoeff(); }

    [[nodiscard]] Operator to_working(const Operator& x) const { return basis_.adjoint() * x * basis_; }
    [[nodiscard]] Operator from_working(const Operator& x) const { return basis_ * x * basis_.adjoint(); }

    /// Generator applied in the working basis. `out` must not alias `x`.
    /// Uses an internal scratch buffer, so one generator must not be shared
    /// between threads.
    void apply(const Operator& x, Operator& out) const {
        ++applications_;
        out.resize(dim_, dim_);
        out.array() = -pair_decay_.array() * x.array();
        tmp_.resize(dim_, dim_);
        for (const auto& j : jumps_) {
            if (dir_ == Direction::forward) {
                tmp_.noalias() = j.v * x;
                out.noalias() += j.rate * (tmp_ * j.vd);
            } else {
                tmp_.noalias() = j.vd * x;
                out.noalias() += j.rate * (tmp_ * j.v);
            }
        }
    }

    /// (I - shift * L_no_jump)^{-1}, entrywise.
    void precondition(double shift, const Operator& x, Operator& out) const {
        out.resize(dim_, dim_);
        out.array() = x.array() / (1.0 + shift * pair_decay_.array());
    }

    [[nodiscard]] std::size_t applications() const { return applications_; }

private:
    struct Jump {
        Operator v;
        Operator vd;
        double rate;
    };
    Direction dir_;
    Index dim_;
    Operator basis_;
    Eigen::VectorXd decay_;
    Eigen::ArrayXXd pair_decay_;
    std::vector<Jump> jumps_;
    mutable Operator tmp_;
    mutable std::size_t applications_ = 0;
};

struct KrylovResult {
    bool converged = false;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Scratch storage reused across GMRES calls.
struct KrylovWorkspace {
    std::vector<Operator> basis;
    Operator w, z, r;
};

/// Restarted GMRES for (I - shift L) x = b with right preconditioning by the
/// exact no-jump inverse. `x` carries the initial guess in and the solution
/// out. Inner product is the Frobenius one.
inline KrylovResult solve_shifted(const LinearGenerator& gen, double shift, const Operator& b,
                                  Operator& x, double tol, int restart, int max_restarts,
                                  KrylovWorkspace& ws) {
    const Index n = gen.dim();
    auto apply_a = [&](const Operator& in, Operator& out) {
        gen.apply(in, out);
        out = in - shift * out;
    };
    const double bnorm = b.norm();
    KrylovResult res;
    if (bnorm == 0.0) {
        x.setZero(n, n);
        res.converged = true;
        return res;
    }
    auto& basis = ws.basis;
    basis.resize(static_cast<std::size_t>(restart) + 1);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(restart + 1, restart);
    std::vector<double> cs(static_cast<std::size_t>(restart));
    std::vector<Complex> sn(static_cast<std::size_t>(restart));
    Eigen::VectorXcd g(restart + 1);
    Operator& w = ws.w;
    Operator& z = ws.z;
    Operator& r = ws.r;
    w.resize(n, n);
    z.resize(n, n);
    r.resize(n, n);

    for (int cycle = 0; cycle <= max_restarts; ++cycle) {
        apply_a(x, r);
        r = b - r;
        double beta = r.norm();
        res.relative_residual = beta / bnorm;
        if (res.relative_residual <= tol) {
            res.converged = true;
            return res;
        }
        if (cycle == max_restarts) break;
        basis[0] = r / beta;
        g.setZero();
        g[0] = beta;
        h.setZero();
        int used = 0;
        for (int j = 0; j < restart; ++j) {
            gen.precondition(shift, basis[j], z);
            apply_a(z, w);
            ++res.iterations;
            for (int i = 0; i <= j; ++i) {
                h(i, j) = frobenius_inner(basis[i], w);
                w -= h(i, j) * basis[i];
            }
            const double hn = w.norm();
            h(j + 1, j) = hn;
            for (int i = 0; i < j; ++i) {
                const Complex t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
                h(i + 1, j) = -std::conj(sn[i]) * h(i, j) + cs[i] * h(i + 1, j);
                h(i, j) = t;
            }
            const Complex a = h(j, j);
            const Complex bb = h(j + 1, j);
            const double rr = std::sqrt(std::norm(a) + std::norm(bb));
            if (std::abs(a) == 0.0) {
                cs[j] = 0.0;
                sn[j] = 1.0;
            } else {
                cs[j] = std::abs(a) / rr;
                sn[j] = (a / std::abs(a)) * std::conj(bb) / rr;
            }
            h(j, j) = cs[j] * a + sn[j] * bb;
            h(j + 1, j) = 0.0;
            g[j + 1] = -std::conj(sn[j]) * g[j];
            g[j] = cs[j] * g[j];
            used = j + 1;
            res.relative_residual = std::abs(g[j + 1]) / bnorm;
            if (res.relative_residual <= tol || hn == 0.0) break;
            basis[j + 1].resize(n, n);
            basis[j + 1] = w / hn;
        }
        Eigen::VectorXcd y = h.topLeftCorner(used, used)
                                 .triangularView<Eigen::Upper>()
                                 .solve(g.head(used));
        w.setZero();
        for (int i = 0; i < used; ++i) w += y[i] * basis[i];
        gen.precondition(shift, w, z);
        x += z;
    }
    return res;
}

/// Adaptive integrator for a fixed linear generator. The state is kept in
/// the generator's working basis; error control uses the entrywise max-norm
/// in the Fock basis.
class Propagator {
public:
    Propagator(const LindbladModel& model, Direction dir, SolverOptions opts)
        : gen_(model, dir), opts_(opts), dominant_(model.dominant_channel()) {}

    void reset(const Operator& x0, double t0 = 0.0) {
        if (x0.rows() != gen_.dim() || x0.cols() != gen_.dim()) {
            throw Error(ErrorKind::shape, "Propagator: initial state dimension does not match model");
        }
        t_ = t0;
        y_ = gen_.to_working(x0);
        h_ = opts_.initial_step;
    }

    [[nodiscard]] double time() const { return t_; }
    [[nodiscard]] Operator state() const { return gen_.from_working(y_); }
    [[nodiscard]] const SolverStats& stats() const { return stats_; }
    [[nodiscard]] const LinearGenerator& generator() const { return gen_; }

    /// Generator applied to the current state, in the Fock basis.
    [[nodiscard]] Operator derivative() const {
        Operator out;
        gen_.apply(y_, out);
        return gen_.from_working(out);
    }

    /// Steps until time() == t_target. `on_step` runs after each accepted
    /// step; returning true stops early.
    void advance_to(double t_target, const std::function<bool()>& on_step = {}) {
        if (h_ <= 0.0) h_ = initial_step();
        std::size_t steps_here = 0;
        while (t_ < t_target) {
            const double remaining = t_target - t_;
            double h = std::min({h_, opts_.max_step, remaining});
            const bool last = h >= remaining * (1.0 - 1e-12);
            if (last) h = remaining;
            if (h < opts_.min_step && !last) underflow(h, "step size below minimum");
            if (++steps_here > opts_.max_steps) underflow(h, "step budget exhausted");

            double err = 0.0;
            bool ok = opts_.method == Method::sdirk4 ? sdirk_step(h, err) : dopri_step(h, err);
            if (!ok) {
                ++stats_.rejected;
                h_ = 0.25 * h;
                continue;
            }
            const int order = opts_.method == Method::sdirk4 ? 4 : 5;
            double factor = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -1.0 / order);
            factor = std::clamp(factor, 0.2, 5.0);
            if (err <= 1.0) {
                ++stats_.accepted;
                y_ = std::move(candidate_);
                if (opts_.enforce_hermitian) y_ = hermitian_part(y_);
                t_ = last ? t_target : t_ + h;
                // Do not let a clipped final step shrink the running step size.
                h_ = last ? std::max(h_, h * factor) : h * factor;
                if (on_step && on_step()) return;
            } else {
                ++stats_.rejected;
                h_ = h * std::min(factor, 0.9);
            }
        }
    }

private:
    [[noreturn]] void underflow(double h, const char* why) const {
        std::ostringstream os;
        os << why << " at t = " << t_ << " (h = " << h << ", method " << to_string(opts_.method)
           << "); dominant channel '" << dominant_.first << "' has rate*||V||^2 = " << dominant_.second
           << ", max no-jump decay " << gen_.max_decay();
        throw Error(ErrorKind::step_underflow, os.str());
    }

    double initial_step() {
        Operator f;
        gen_.apply(y_, f);
        const double fn = f.cwiseAbs().maxCoeff();
        const double yn = std::max(y_.cwiseAbs().maxCoeff(), opts_.atol);
        double h = fn > 0.0 ? 0.01 * yn / fn : 1e-3;
        if (opts_.method == Method::sdirk4) h = std::max(h, 1e-4);
        return std::min(h, opts_.max_step);
    }

    /// max_ij |e_ij| / (atol + rtol max(|y_ij|, |y'_ij|)), Fock basis.
    double error_norm(const Operator& err_working, const Operator& y_new_working) const {
        const Operator e = gen_.from_working(err_working);
        const Operator a = gen_.from_working(y_);
        const Operator b = gen_.from_working(y_new_working);
        double worst = 0.0;
        for (Index j = 0; j < e.cols(); ++j)
            for (Index i = 0; i < e.rows(); ++i) {
                const double sc = opts_.atol + opts_.rtol * std::max(std::abs(a(i, j)), std::abs(b(i, j)));
                worst = std::max(worst, std::abs(e(i, j)) / sc);
            }
        return worst;
    }

    bool solve(double shift, const Operator& b, Operator& x) {
        auto r = solve_shifted(gen_, shift, b, x, opts_.krylov_tol, opts_.krylov_restart,
                               opts_.krylov_max_restarts, krylov_);
        ++stats_.linear_solves;
        stats_.krylov_iterations += static_cast<std::size_t>(r.iterations);
        if (!r.converged) ++stats_.krylov_failures;
        stats_.generator_applications = gen_.applications();
        return r.converged;
    }

    bool sdirk_step(double h, double& err) {
        static constexpr double gamma = 0.25;
        static constexpr std::array<std::array<double, 5>, 5> a = {{
            {0.25, 0, 0, 0, 0},
            {0.5, 0.25, 0, 0, 0},
            {17.0 / 50, -1.0 / 25, 0.25, 0, 0},
            {371.0 / 1360, -137.0 / 2720, 15.0 / 544, 0.25, 0},
            {25.0 / 24, -49.0 / 48, 125.0 / 16, -85.0 / 12, 0.25},
        }};
        // b - b_hat; b equals the last row of a (stiffly accurate).
        static constexpr std::array<double, 5> e = {25.0 / 24 - 59.0 / 48, -49.0 / 48 + 17.0 / 96,
                                                    125.0 / 16 - 225.0 / 32, 0.0, 0.25};
        const double shift = h * gamma;
        std::array<Operator, 5> f;
        Operator stage = y_;
        for (std::size_t i = 0; i < 5; ++i) {
            Operator rhs = y_;
            for (std::size_t j = 0; j < i; ++j) rhs += (h * a[i][j]) * f[j];
            if (!solve(shift, rhs, stage)) return false;
            f[i] = (stage - rhs) / shift;
        }
        Operator est = Operator::Zero(gen_.dim(), gen_.dim());
        for (std::size_t j = 0; j < 5; ++j)
            if (e[j] != 0.0) est += (h * e[j]) * f[j];
        // Filter the estimate through (I - h gamma L)^{-1} so stiff, already
        // damped components do not force tiny steps.
        Operator filtered = est;
        if (!solve(shift, est, filtered)) return false;
        err = error_norm(filtered, stage);
        candidate_ = std::move(stage);
        return true;
    }

    bool dopri_step(double h, double& err) {
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
        Operator k1, k2, k3, k4, k5, k6, k7;
        gen_.apply(y_, k1);
        gen_.apply(y_ + h * (a21 * k1), k2);
        gen_.apply(y_ + h * (a31 * k1 + a32 * k2), k3);
        gen_.apply(y_ + h * (a41 * k1 + a42 * k2 + a43 * k3), k4);
        gen_.apply(y_ + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
        gen_.apply(y_ + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
        Operator next = y_ + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        gen_.apply(next, k7);
        stats_.generator_applications = gen_.applications();
        const Operator est = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        err = error_norm(est, next);
        if (!std::isfinite(err)) return false;
        candidate_ = std::move(next);
        return true;
    }

    LinearGenerator gen_;
    SolverOptions opts_;
    std::pair<std::string, double> dominant_;
    SolverStats stats_;
    double t_ = 0.0;
    double h_ = 0.0;
    Operator y_;
    Operator candidate_;
    KrylovWorkspace krylov_;
};

} // namespace gkpdiss
