#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <random>

#include "gkpdiss/expm.hpp"

using namespace gkpdiss;

namespace {

Operator random_operator(Index n, double scale, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    Operator m(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) m(i, j) = scale * Complex(nd(rng), nd(rng));
    return m;
}

double rel_err(const Operator& a, const Operator& b) { return (a - b).norm() / b.norm(); }

} // namespace

class ExpmScale : public ::testing::TestWithParam<double> {};

// Oracle: Eigen's unsupported MatrixExponential.
TEST_P(ExpmScale, MatchesEigenOracle) {
    const Operator m = random_operator(12, GetParam(), 7);
    const Operator oracle = m.exp();
    EXPECT_LE(rel_err(matrix_exponential(m), oracle), 1e-12) << "scale " << GetParam();
}

INSTANTIATE_TEST_SUITE_P(Norms, ExpmScale, ::testing::Values(1e-4, 0.01, 0.1, 0.5, 1.0, 3.0, 10.0));

TEST(Expm, TaylorForSmallArgument) {
    const Operator m = random_operator(6, 1e-3, 3);
    Operator taylor = Operator::Identity(6, 6);
    Operator term = Operator::Identity(6, 6);
    for (int k = 1; k < 10; ++k) {
        term = term * m / static_cast<double>(k);
        taylor += term;
    }
    EXPECT_LE(rel_err(matrix_exponential(m), taylor), 1e-14);
}

TEST(Expm, DiagonalAndZero) {
    Operator d = Operator::Zero(4, 4);
    d.diagonal() << Complex(1, 0), Complex(0, 2), Complex(-3, 0), Complex(0.5, -0.5);
    const Operator e = matrix_exponential(d);
    for (Index i = 0; i < 4; ++i) EXPECT_LE(std::abs(e(i, i) - std::exp(d(i, i))), 1e-13);
    EXPECT_LE(max_abs(matrix_exponential(Operator::Zero(5, 5)) - identity(5)), 0.0);
}

TEST(Expm, AntiHermitianGivesUnitary) {
    const Operator h = random_operator(20, 1.0, 11);
    const Operator u = matrix_exponential(Complex(0, 1) * hermitian_part(h));
    EXPECT_TRUE(is_unitary(u, 1e-12));
}

TEST(Expm, RejectsNonFinite) {
    Operator m = Operator::Zero(3, 3);
    m(1, 2) = std::numeric_limits<double>::quiet_NaN();
    try {
        matrix_exponential(m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
    }
}

TEST(Expm, OverflowReportsNorm) {
    Operator m = Operator::Zero(2, 2);
    m(0, 0) = 1000.0;
    try {
        matrix_exponential(m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::overflow);
        EXPECT_NE(std::string(e.what()).find("1-norm"), std::string::npos);
    }
}
