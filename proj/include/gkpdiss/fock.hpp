#pragma once

// Truncated Fock-basis operator algebra.
//
// Operators act on span{|0>, ..., |dim-1>}. Identities that hold in infinite
// dimension (e.g. [Q,P] = i) fail near the truncation corner, so they are only
// asserted on a leading "interior" block.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <string>

#include "gkpdiss/error.hpp"

namespace gkpdiss {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr Complex I_unit{0.0, 1.0};

inline void require_dimension(Index dim) {
    if (dim < 2) {
        throw Error(ErrorKind::invalid_dimension,
                    "Fock truncation must be >= 2, got " + std::to_string(dim));
    }
}

inline void require_same_shape(const Operator& a, const Operator& b, std::string_view what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(ErrorKind::shape, std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                                          std::to_string(a.cols()) + " vs " +
                                          std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

inline void require_square(const Operator& a, std::string_view what) {
    if (a.rows() != a.cols()) {
        throw Error(ErrorKind::shape, std::string(what) + ": operator is not square");
    }
}

/// Leading (dim - margin) x (dim - margin) submatrix on which operator
/// identities are checked.
struct InteriorBlockSpec {
    Index margin = 0;

    /// ceil(dim / 10)
    static InteriorBlockSpec for_dimension(Index dim) { return {(dim + 9) / 10}; }

    [[nodiscard]] Index size(Index dim) const {
        if (margin < 0 || margin >= dim) {
            throw Error(ErrorKind::invalid_input, "interior margin " + std::to_string(margin) +
                                                      " must lie in [0, " + std::to_string(dim) + ")");
        }
        return dim - margin;
    }
};

inline auto interior(const Operator& a, InteriorBlockSpec spec) {
    const Index n = spec.size(a.rows());
    return a.topLeftCorner(n, n);
}

/// Largest entry modulus of `a` restricted to the interior block.
inline double interior_max_abs(const Operator& a, InteriorBlockSpec spec) {
    return interior(a, spec).cwiseAbs().maxCoeff();
}

inline double max_abs(const Operator& a) { return a.cwiseAbs().maxCoeff(); }

/// Annihilation operator: <n-1|a|n> = sqrt(n).
inline Operator make_ladder(Index dim) {
    require_dimension(dim);
    Operator a = Operator::Zero(dim, dim);
    for (Index n = 1; n < dim; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return a;
}

struct Quadratures {
    Operator q;
    Operator p;
};

/// Q = (a + a^dag)/sqrt(2), P = (a - a^dag)/(i sqrt(2)).
inline Quadratures make_quadratures(Index dim) {
    const Operator a = make_ladder(dim);
    const Operator ad = a.adjoint();
    const double r = 1.0 / std::sqrt(2.0);
    return {(a + ad) * r, (a - ad) * Complex(0.0, -r)};
}

inline Operator identity(Index dim) { return Operator::Identity(dim, dim); }

inline Operator number_operator(Index dim) {
    Operator n = Operator::Zero(dim, dim);
    for (Index k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
    return n;
}

inline Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

/// Tr(A^dag B).
inline Complex frobenius_inner(const Operator& a, const Operator& b) {
    require_same_shape(a, b, "frobenius_inner");
    return (a.conjugate().cwiseProduct(b)).sum();
}

/// Tr(A B) without forming the product.
inline Complex trace_product(const Operator& a, const Operator& b) {
    require_same_shape(a, b, "trace_product");
    return (a.transpose().cwiseProduct(b)).sum();
}

inline double hermiticity_defect(const Operator& a) { return max_abs(a - a.adjoint()); }

inline bool is_hermitian(const Operator& a, double tol) { return hermiticity_defect(a) <= tol; }

inline bool is_unitary(const Operator& a, double tol) {
    return max_abs(a.adjoint() * a - identity(a.rows())) <= tol;
}

inline Operator hermitian_part(const Operator& a) { return (a + a.adjoint()) * 0.5; }

inline bool all_finite(const Operator& a) {
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag())) return false;
    return true;
}

/// f(H) for Hermitian H through its eigendecomposition.
inline Operator hermitian_function(const Operator& h, const std::function<double(double)>& f) {
    require_square(h, "hermitian_function");
    Eigen::SelfAdjointEigenSolver<Operator> es(hermitian_part(h));
    Eigen::VectorXd fl = es.eigenvalues().unaryExpr(f);
    return es.eigenvectors() * fl.asDiagonal() * es.eigenvectors().adjoint();
}

inline Eigen::VectorXd hermitian_eigenvalues(const Operator& h) {
    Eigen::SelfAdjointEigenSolver<Operator> es(hermitian_part(h), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline double min_eigenvalue(const Operator& h) { return hermitian_eigenvalues(h).minCoeff(); }

/// <psi|A|psi> for normalized psi.
inline Complex expectation(const Operator& a, const StateVector& psi) { return psi.dot(a * psi); }

inline Operator projector(const StateVector& psi) { return psi * psi.adjoint(); }

} // namespace gkpdiss
