#include <gtest/gtest.h>

#include <random>

#include "gkpdiss/analysis.hpp"

using namespace gkpdiss;

TEST(TMatrix, HermitianCirculant) {
    const auto t = build_t_matrix(0.07, code_eta);
    EXPECT_LE((t.entries - t.entries.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
    for (int i = 1; i < 4; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_EQ(t.entries(i, j), t.entries(0, (j - i + 4) % 4));
}

TEST(TMatrix, VanishesAsEpsilonGoesToZero) {
    EXPECT_LE(build_t_matrix(0.0, code_eta).entries.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(build_t_matrix(1e-6, code_eta).entries.cwiseAbs().maxCoeff(), 1e-3);
}

// Oracle: T_kl = exp(eta^2 [R_l^dag, R_k]) - 1 from truncated matrices.
TEST(TMatrix, MatchesNumericalCommutators) {
    const double eps = 0.05;
    const auto params = GkpParameters::make(eps, code_eta, 80);
    const auto rs = build_conjugated_quadratures(params);
    const std::array<Operator, 4> rk = {rs.r, rs.s, -rs.r, -rs.s};
    const auto t = build_t_matrix(eps, code_eta);
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t l = 0; l < 4; ++l) {
            const Complex c = commutator(rk[l].adjoint(), rk[k])(3, 3);
            const Complex expected = std::exp(code_eta * code_eta * c) - 1.0;
            EXPECT_LE(std::abs(t.entries(static_cast<Index>(k), static_cast<Index>(l)) - expected), 1e-9)
                << k << "," << l;
        }
}

TEST(TMatrix, SpectrumMatchesClosedForm) {
    for (double eps : {1e-4, 1e-3, 0.01, 0.05, 0.1, 0.14}) {
        const auto rep = verify_t_spectrum(build_t_matrix(eps, code_eta));
        EXPECT_TRUE(rep.passed) << eps << ": " << rep.detail;
    }
}

TEST(TMatrix, ClosedFormEigenpairsAtFiveHundredths) {
    const auto t = build_t_matrix(0.05, code_eta);
    for (const auto& pair : closed_form_t_spectrum(0.05, code_eta)) {
        // Row eigenvector w: w T = lambda w.
        const Eigen::RowVector4cd w = pair.w.transpose();
        EXPECT_LE((w * t.entries - pair.lambda * w).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(TMatrix, EigenvalueOrdering) {
    for (int k = 1; k <= 200; ++k) {
        const double eta_eps = 0.5 * k / 200.0;
        EXPECT_TRUE(t_eigenvalue_ordering_holds(eta_eps / code_eta, code_eta)) << eta_eps;
    }
}

TEST(Lemma, LambdaClosedForm) {
    const auto rep = verify_lambda_closed_form(0.05, code_eta, 200);
    EXPECT_TRUE(rep.passed) << rep.max_deviation_plus << " " << rep.max_deviation_minus;
    EXPECT_NO_THROW(require(rep));
}

TEST(Lemma, OperatorInequality) {
    const auto rep = lemma_min_eigenvalues(0.05, code_eta, 400);
    EXPECT_GE(rep.min_eigenvalue_plus, -1e-6);
    EXPECT_GE(rep.min_eigenvalue_minus, -1e-6);
}

TEST(Identities, SuiteAtTenthPasses) {
    const auto code = build_code(GkpParameters::make(0.1));
    for (const auto& c : commutation_suite(code)) EXPECT_TRUE(c.passed) << c.name << " " << c.value;
    const auto adj = verify_adjoint_identity(code);
    EXPECT_TRUE(adj.t_form.passed) << adj.t_form.value;
}

TEST(Identities, RequireThrowsOnFailure) {
    EXPECT_THROW(require(make_check("x", 2.0, 1.0)), Error);
    EXPECT_NO_THROW(require(make_check("x", 0.5, 1.0)));
}

TEST(RandomStates, ValidDensityMatrices) {
    std::mt19937_64 rng(3);
    const auto rho = random_density(30, 10, 4, rng);
    EXPECT_NO_THROW(DensityMatrix::make(rho));
    EXPECT_LE(rho.bottomRightCorner(20, 20).cwiseAbs().maxCoeff(), 0.0);
    std::mt19937_64 again(3);
    EXPECT_EQ(random_density(30, 10, 4, again), rho);
}

TEST(Fit, RecoversExponentialRate) {
    std::vector<double> t, y;
    for (int k = 0; k <= 20; ++k) {
        t.push_back(0.1 * k);
        y.push_back(k < 5 ? 10.0 : 3.0 * std::exp(-1.7 * 0.1 * k));
    }
    EXPECT_NEAR(-fitted_log_slope(t, y, 0.5), 1.7, 1e-12);
    EXPECT_TRUE(std::isnan(fitted_log_slope(t, y, 5.0)));
}

TEST(DecayExperiment, CodespaceStartIsDegenerate) {
    const auto code = build_code(GkpParameters::make(0.1));
    DecayOptions o;
    o.initial_states = {projector(code.codewords[1])};
    const auto rep = lyapunov_decay_experiment(code, o);
    ASSERT_EQ(rep.trials.size(), 1u);
    EXPECT_TRUE(rep.trials[0].degenerate);
    EXPECT_LE(rep.trials[0].tr_w0, 1e-8);
    EXPECT_TRUE(rep.passed);
}

TEST(ErrorRateExperiment, RefusesOversizedDimension) {
    const auto code = build_code(GkpParameters::make(0.1, code_eta, 60));
    ExperimentOptions o;
    o.max_dim = 50;
    try {
        error_rate_experiment(code, o);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::resource);
    }
}
