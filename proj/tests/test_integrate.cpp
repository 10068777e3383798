#include <gtest/gtest.h>

#include "gkpdiss/analysis.hpp"
#include "gkpdiss/evolve.hpp"

using namespace gkpdiss;

namespace {

LindbladModel loss_model(Index dim, double rate) {
    LindbladModel m(dim);
    m.add(make_ladder(dim), rate, "a");
    return m;
}

Operator fock_projector(Index dim, Index n) {
    Operator p = Operator::Zero(dim, dim);
    p(n, n) = 1.0;
    return p;
}

SolverOptions with_method(Method m) {
    SolverOptions s;
    s.method = m;
    return s;
}

const GkpCode& code_01() {
    static const GkpCode code = build_code(GkpParameters::make(0.1));
    return code;
}

} // namespace

class BothMethods : public ::testing::TestWithParam<Method> {};

// Exact solution: the one-photon population decays as e^{-gamma t}.
TEST_P(BothMethods, OnePhotonDecay) {
    const double gamma = 0.8, t = 2.5;
    Propagator prop(loss_model(5, gamma), Direction::forward, with_method(GetParam()));
    prop.reset(fock_projector(5, 1));
    prop.advance_to(t);
    const Operator rho = prop.state();
    EXPECT_NEAR(rho(1, 1).real(), std::exp(-gamma * t), 1e-8);
    EXPECT_NEAR(rho(0, 0).real(), 1.0 - std::exp(-gamma * t), 1e-8);
    EXPECT_NEAR(prop.time(), t, 0.0);
}

// D*_a(N) = -N exactly, also after truncation.
TEST_P(BothMethods, AdjointNumberOperator) {
    const double gamma = 0.5, t = 3.0;
    Propagator prop(loss_model(12, gamma), Direction::adjoint, with_method(GetParam()));
    prop.reset(number_operator(12));
    prop.advance_to(t);
    EXPECT_LE(max_abs(prop.state() - std::exp(-gamma * t) * number_operator(12)), 1e-8 * 11);
}

// Implicit and explicit schemes agree on a small, non-stiff GKP model.
TEST_P(BothMethods, AgreesWithOtherMethodOnGkpModel) {
    // Small and mildly stiff so the explicit method finishes in a few thousand steps.
    const Index dim = 20;
    const auto v = build_dissipators(GkpParameters::make(0.15, code_eta, dim));
    LindbladModel gkp(dim);
    for (std::size_t k = 0; k < 4; ++k) gkp.add(v[k], 1.0, "V" + std::to_string(k + 1));
    const auto model = with_noise(gkp, NoiseChannel::loss, 0.1);
    Operator rho0 = Operator::Zero(dim, dim);
    for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 6; ++j) rho0(i, j) = 1.0 / 6.0;
    const Method other = GetParam() == Method::sdirk4 ? Method::dopri5 : Method::sdirk4;
    Propagator a(model, Direction::forward, with_method(GetParam()));
    Propagator b(model, Direction::forward, with_method(other));
    a.reset(rho0);
    b.reset(rho0);
    a.advance_to(0.5);
    b.advance_to(0.5);
    EXPECT_LE(max_abs(a.state() - b.state()), 1e-7);
}

INSTANTIATE_TEST_SUITE_P(Methods, BothMethods, ::testing::Values(Method::sdirk4, Method::dopri5),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Integrator, StepBudgetRaisesUnderflowWithChannelDiagnostic) {
    SolverOptions s = with_method(Method::dopri5);
    s.max_steps = 3;
    Propagator prop(gkp_model(code_01()), Direction::forward, s);
    Operator rho = fock_projector(code_01().params.dim, 10);
    prop.reset(rho);
    try {
        prop.advance_to(10.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::step_underflow);
        EXPECT_NE(std::string(e.what()).find("dominant channel 'V"), std::string::npos);
    }
}

TEST(Integrator, FourthOrderConvergenceOfFixedSteps) {
    // Errors of the SDIRK scheme with forced step sizes h and h/2.
    const double gamma = 1.0, t = 2.0;
    auto error_for = [&](double h) {
        SolverOptions s;
        s.initial_step = h;
        s.max_step = h;
        s.rtol = 1e3;
        s.atol = 1e3;
        Propagator prop(loss_model(3, gamma), Direction::forward, s);
        prop.reset(fock_projector(3, 2));
        prop.advance_to(t);
        // p2(t) = e^{-2 gamma t}
        return std::abs(prop.state()(2, 2).real() - std::exp(-2.0 * gamma * t));
    };
    const double e1 = error_for(0.2), e2 = error_for(0.1);
    const double order = std::log2(e1 / e2);
    EXPECT_GT(order, 3.5);
    EXPECT_LT(order, 5.5);
}

TEST(Evolve, CodewordStaysInKernel) {
    const auto& code = code_01();
    ObservableSpec spec;
    spec.times = uniform_grid(2.0, 4);
    spec.lyapunov = code.lyapunov;
    const auto traj = evolve(gkp_model(code), DensityMatrix::pure(code.codewords[0]), 2.0, {}, spec);
    ASSERT_EQ(traj.records.size(), 5u);
    for (const auto& r : traj.records) {
        EXPECT_LE(r.tr_w, 1e-5);
        EXPECT_NEAR(r.trace, 1.0, 1e-8);
    }
    EXPECT_TRUE(traj.warnings.empty());
}

TEST(Evolve, ThermalStateObeysDecayBound) {
    const auto& code = code_01();
    const Index dim = code.params.dim;
    const double nbar = 1.5;
    Operator rho = Operator::Zero(dim, dim);
    for (Index n = 0; n < dim; ++n) rho(n, n) = std::pow(nbar / (1 + nbar), static_cast<double>(n)) / (1 + nbar);
    rho /= rho.trace().real();
    ObservableSpec spec;
    spec.times = uniform_grid(1.5, 6);
    spec.lyapunov = code.lyapunov;
    const auto traj = evolve(gkp_model(code), DensityMatrix::make(rho), 1.5, {}, spec);
    const double k = kappa(0.1, code_eta).value;
    const double w0 = traj.records.front().tr_w;
    for (const auto& r : traj.records) {
        EXPECT_LE(r.tr_w, w0 * std::exp(-k * r.t) * (1 + 1e-3)) << r.t;
        EXPECT_NEAR(r.trace, 1.0, 1e-8);
    }
}

TEST(Evolve, Validation) {
    const auto model = loss_model(4, 1.0);
    const auto rho = DensityMatrix::make(fock_projector(4, 1));
    EXPECT_THROW(evolve(model, rho, -1.0), Error);
    EXPECT_THROW(evolve(loss_model(5, 1.0), rho, 1.0), Error);
}

TEST(Evolve, SnapshotsAndGrid) {
    ObservableSpec spec;
    spec.times = {0.5, 0.25, 1.0};
    spec.snapshot_times = {0.5};
    const auto traj = evolve(loss_model(4, 1.0), DensityMatrix::make(fock_projector(4, 1)), 1.0, {}, spec);
    ASSERT_EQ(traj.times.size(), 4u);
    EXPECT_DOUBLE_EQ(traj.times[1], 0.25);
    ASSERT_EQ(traj.snapshots.size(), 1u);
    EXPECT_NEAR(traj.snapshots[0].rho(1, 1).real(), std::exp(-0.5), 1e-8);
    EXPECT_NEAR(traj.records[2].nbar, std::exp(-0.5), 1e-8);
}
