#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gkpdiss/analysis.hpp"
#include "gkpdiss/gkp.hpp"

using namespace gkpdiss;

namespace {

// Independent evaluation of the rate in extended precision.
long double kappa_oracle(long double eps, long double eta) {
    const long double e2 = eta * eta;
    const long double s = std::sinh(2 * eps), c = std::cosh(2 * eps);
    const long double d = std::exp(-1.5L * e2 * s);
    return (std::sinh(e2 * s) - std::sin(e2 * c)) * (1 - d) - (std::cosh(e2 * s) - std::cos(e2 * c)) * (1 + d);
}

const GkpCode& code_01() {
    static const GkpCode code = build_code(GkpParameters::make(0.1));
    return code;
}

} // namespace

TEST(Kappa, MatchesExtendedPrecisionOracle) {
    for (double eps : {1e-3, 1e-2, 0.05, 0.1, 0.14}) {
        const double ref = static_cast<double>(kappa_oracle(eps, code_eta));
        EXPECT_NEAR(kappa(eps, code_eta).value, ref, 1e-9 * std::max(1.0, std::abs(ref))) << eps;
    }
}

TEST(Kappa, SmallEpsilonAsymptote) {
    const double eps = 1e-3;
    const double ratio = kappa(eps, code_eta).value / kappa_asymptote(eps, code_eta);
    EXPECT_GE(ratio, 0.95);
    EXPECT_LE(ratio, 1.05);
}

TEST(Kappa, PositiveAndCertifiedOnTheoremRange) {
    const double top = 1.0 / (4.0 * std::sqrt(std::numbers::pi));
    for (int k = 1; k <= 100; ++k) {
        const double eps = top * k / 100.0;
        const auto v = kappa(eps, code_eta);
        EXPECT_GT(v.value, 0.0) << eps;
        EXPECT_TRUE(v.certified) << eps;
    }
}

TEST(Kappa, CertifiedFlagOutsideRegime) {
    EXPECT_FALSE(kappa(0.5, code_eta).certified);
    EXPECT_FALSE(kappa(0.05, 3.0).certified);
    EXPECT_TRUE(kappa(0.05, sensor_eta).certified);
}

TEST(Parameters, DimensionRule) {
    EXPECT_EQ(recommended_dimension(0.1), 200);
    EXPECT_EQ(recommended_dimension(1.0 / 30), 600);
    const auto p = GkpParameters::make(0.1, code_eta, 150);
    EXPECT_TRUE(p.dim_overridden);
    EXPECT_TRUE(p.truncation_below_rule());
    EXPECT_THROW(GkpParameters::make(-0.1), Error);
    EXPECT_THROW(GkpParameters::make(0.1, code_eta, 1), Error);
}

TEST(Dissipators, ConjugatedQuadratureCommutators) {
    const auto& code = code_01();
    const auto spec = InteriorBlockSpec::for_dimension(code.params.dim);
    const Operator id = identity(code.params.dim);
    EXPECT_LE(interior_max_abs(commutator(code.r, code.s) - I_unit * id, spec), 1e-10);
    EXPECT_LE(interior_max_abs(commutator(code.r, code.r.adjoint()) - std::sinh(0.2) * id, spec), 1e-10);
}

TEST(Dissipators, LyapunovIsHermitianPsd) {
    const auto& w = code_01().lyapunov;
    EXPECT_EQ(hermiticity_defect(w), 0.0);
    EXPECT_GE(min_eigenvalue(w), -1e-10);
}

TEST(Dissipators, OverflowIsReported) {
    try {
        build_dissipators(GkpParameters::make(6.0, code_eta, 200));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::overflow);
        EXPECT_NE(e.message().find("reduce the Fock dimension"), std::string::npos);
    }
}

TEST(Kernel, TwoNearZeroEigenvaluesForCode) {
    const auto ev = hermitian_eigenvalues(code_01().lyapunov);
    EXPECT_LE(ev[0], 1e-8);
    EXPECT_LE(ev[1], 1e-8);
    EXPECT_GE(ev[2], 1e-4);
    EXPECT_GE(ev[2], 1e4 * std::max(std::abs(ev[0]), std::abs(ev[1])));
}

TEST(Kernel, OneNearZeroEigenvalueForSensor) {
    const auto code = build_code(GkpParameters::make(0.1, sensor_eta));
    const auto ev = hermitian_eigenvalues(code.lyapunov);
    EXPECT_LE(ev[0], 1e-8);
    EXPECT_GE(ev[1], 1e-4);
    EXPECT_EQ(code.codewords.size(), 1u);
    EXPECT_FALSE(code.logical.has_value());
}

TEST(Codewords, AnnihilatedByDissipators) {
    const auto& code = code_01();
    for (const auto& psi : code.codewords)
        for (const auto& v : code.dissipators) EXPECT_LE((v * psi).norm(), 1e-6);
}

TEST(Codewords, OrthonormalEvenParityAndPhotonNumber) {
    const auto& code = code_01();
    const auto& w = code.codewords;
    ASSERT_EQ(w.size(), 2u);
    EXPECT_NEAR(w[0].norm(), 1.0, 1e-14);
    EXPECT_NEAR(w[1].norm(), 1.0, 1e-14);
    EXPECT_LE(std::abs(w[0].dot(w[1])), 1e-12);
    const Operator n = number_operator(code.params.dim);
    for (const auto& psi : w) {
        double odd = 0.0;
        for (Index k = 1; k < psi.size(); k += 2) odd += std::norm(psi[k]);
        EXPECT_LE(odd, 1e-10);
        const double nbar = expectation(n, psi).real();
        EXPECT_GT(nbar, 5.0 * 0.7);
        EXPECT_LT(nbar, 5.0 * 1.3);
    }
}

TEST(Codewords, AgreeWithEigenKernel) {
    const auto& code = code_01();
    const auto kernel = kernel_codewords_via_eigen(code.lyapunov, 2);
    EXPECT_LE(projector_distance(code.codewords, kernel), 1e-5);
}

TEST(Codewords, DegenerateGapIsReported) {
    try {
        kernel_codewords_via_eigen(identity(6), 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::degenerate_gap);
    }
}

TEST(Codewords, TooNarrowGridIsReported) {
    CodewordOptions opts;
    opts.half_width = 3.0;
    try {
        build_codewords(GkpParameters::make(0.1), opts);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::quadrature);
    }
}

TEST(Codewords, LogicalBasisActsOnCodewords) {
    const auto& code = code_01();
    ASSERT_TRUE(code.logical);
    const auto& l = *code.logical;
    const auto& z0 = code.codewords[0];
    const auto& z1 = code.codewords[1];
    EXPECT_NEAR(expectation(l.sz, z0).real(), 1.0, 1e-14);
    EXPECT_NEAR(expectation(l.sz, z1).real(), -1.0, 1e-14);
    EXPECT_LE((l.sx * z0 - z1).norm(), 1e-14);
    EXPECT_LE((l.sy * z0 - I_unit * z1).norm(), 1e-14);
}

TEST(Conjugation, RegularizerMapsQToR) {
    const auto c = conjugation_check(0.05, 200);
    EXPECT_TRUE(c.passed) << c.value;
}
