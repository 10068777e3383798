#pragma once

// Finite-energy GKP objects in a truncated Fock basis: conjugated quadratures,
// the four stabilizing dissipators, the Lyapunov operator W, codewords built
// from explicit position-space wavefunctions, and the certified rate kappa.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "gkpdiss/expm.hpp"
#include "gkpdiss/fock.hpp"
#include "gkpdiss/hermite.hpp"

namespace gkpdiss {

/// Square lattice constant of the qubit code.
inline const double code_eta = 2.0 * std::sqrt(std::numbers::pi);
/// Lattice constant of the single-state (sensor) grid.
inline const double sensor_eta = std::sqrt(2.0 * std::numbers::pi);

enum class Lattice { code, sensor, other };

inline Lattice classify_lattice(double eta) {
    auto near = [eta](double ref) { return std::abs(eta - ref) <= 1e-12 * ref; };
    if (near(code_eta)) return Lattice::code;
    if (near(sensor_eta)) return Lattice::sensor;
    return Lattice::other;
}

/// ceil(20 / epsilon): smallest truncation regarded as converged.
inline Index recommended_dimension(double epsilon) {
    return static_cast<Index>(std::ceil(20.0 / epsilon - 1e-9));
}

struct GkpParameters {
    double epsilon = 0.1;
    double eta = code_eta;
    Index dim = 200;
    bool dim_overridden = false;

    /// Validated parameters; `dim` defaults to ceil(20/epsilon).
    static GkpParameters make(double epsilon, double eta = code_eta,
                              std::optional<Index> dim = std::nullopt) {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
            throw Error(ErrorKind::invalid_input, "epsilon must be positive and finite");
        }
        if (!(eta > 0.0) || !std::isfinite(eta)) {
            throw Error(ErrorKind::invalid_input, "eta must be positive and finite");
        }
        GkpParameters p{epsilon, eta, dim.value_or(recommended_dimension(epsilon)), dim.has_value()};
        require_dimension(p.dim);
        return p;
    }

    [[nodiscard]] Lattice lattice() const { return classify_lattice(eta); }

    /// Hypotheses of the convergence theorem: supported lattice and
    /// epsilon <= 1/(2 eta).
    [[nodiscard]] bool certified_regime() const {
        return lattice() != Lattice::other && epsilon <= 1.0 / (2.0 * eta);
    }

    [[nodiscard]] bool truncation_below_rule() const { return dim < recommended_dimension(epsilon); }

    /// Dimension of ker W: two codewords for the code lattice, one otherwise.
    [[nodiscard]] Index codespace_dimension() const { return lattice() == Lattice::code ? 2 : 1; }
};

struct KappaValue {
    double value = 0.0;
    bool certified = false;
};

/// Lower bound on the decay rate of Tr(W rho):
///   (sinh(eta^2 s) - sin(eta^2 c))(1 - e^{-3 eta^2 s/2})
///     - (cosh(eta^2 s) - cos(eta^2 c))(1 + e^{-3 eta^2 s/2})
/// with s = sinh(2 eps), c = cosh(2 eps). Negative values are returned as is,
/// flagged uncertified.
inline KappaValue kappa(double epsilon, double eta) {
    const double e2 = eta * eta;
    const double s = std::sinh(2.0 * epsilon);
    const double c = std::cosh(2.0 * epsilon);
    const double damp = std::exp(-1.5 * e2 * s);
    const double value = (std::sinh(e2 * s) - std::sin(e2 * c)) * (1.0 - damp) -
                         (std::cosh(e2 * s) - std::cos(e2 * c)) * (1.0 + damp);
    const bool certified = classify_lattice(eta) != Lattice::other && epsilon > 0.0 &&
                           epsilon <= 1.0 / (2.0 * eta) && value > 0.0;
    return {value, certified};
}

/// Leading small-epsilon behaviour 2 eta^4 eps^2.
inline double kappa_asymptote(double epsilon, double eta) {
    return 2.0 * std::pow(eta, 4) * epsilon * epsilon;
}

struct ConjugatedQuadratures {
    Operator r;
    Operator s;
};

/// R = cosh(eps) Q + i sinh(eps) P,  S = -i sinh(eps) Q + cosh(eps) P.
inline ConjugatedQuadratures build_conjugated_quadratures(const GkpParameters& params) {
    const auto [q, p] = make_quadratures(params.dim);
    const double ch = std::cosh(params.epsilon);
    const double sh = std::sinh(params.epsilon);
    return {ch * q + Complex(0.0, sh) * p, Complex(0.0, -sh) * q + ch * p};
}

using Dissipators = std::array<Operator, 4>;

/// V_1 = e^{i eta R} - I, V_2 = e^{i eta S} - I, V_3 = e^{-i eta R} - I,
/// V_4 = e^{-i eta S} - I.
inline Dissipators build_dissipators(const GkpParameters& params, const ConjugatedQuadratures& rs) {
    const Operator ident = identity(params.dim);
    const Complex ie(0.0, params.eta);
    auto shifted = [&](const Operator& gen) -> Operator {
        try {
            return matrix_exponential(gen) - ident;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::overflow) throw;
            throw Error(ErrorKind::overflow,
                        e.message() + "; reduce the Fock dimension or epsilon");
        }
    };
    return {shifted(ie * rs.r), shifted(ie * rs.s), shifted(-ie * rs.r), shifted(-ie * rs.s)};
}

inline Dissipators build_dissipators(const GkpParameters& params) {
    return build_dissipators(params, build_conjugated_quadratures(params));
}

/// W = sum_k V_k^dag V_k, symmetrized so that W^dag == W exactly.
inline Operator build_lyapunov(const Dissipators& v) {
    for (const auto& vk : v) {
        require_square(vk, "build_lyapunov");
        require_same_shape(vk, v[0], "build_lyapunov");
    }
    Operator w = Operator::Zero(v[0].rows(), v[0].cols());
    for (const auto& vk : v) w.noalias() += vk.adjoint() * vk;
    Operator sym = hermitian_part(w);
    // Make the diagonal exactly real and the two triangles exact mirrors.
    for (Index j = 0; j < sym.cols(); ++j) {
        sym(j, j) = sym(j, j).real();
        for (Index i = j + 1; i < sym.rows(); ++i) sym(j, i) = std::conj(sym(i, j));
    }
    return sym;
}

// --- codewords -----------------------------------------------------------

struct QuadratureGrid {
    double half_width = 0.0;
    double step = 0.0;
    int comb_extent = 0;  // largest |m| kept in the comb sums
};

struct CodewordOptions {
    /// Overrides the automatic grid extent (used to probe the error path).
    std::optional<double> half_width;
    double dropped_weight_tol = 1e-12;
};

namespace detail {

/// Comb teeth sit at m * spacing; codewords use spacing sqrt(pi) (even / odd
/// m), the sensor state uses sqrt(2 pi).
inline double comb_spacing(Lattice lattice) {
    return lattice == Lattice::code ? std::sqrt(std::numbers::pi) : std::sqrt(2.0 * std::numbers::pi);
}

struct Comb {
    std::vector<double> centers;
    std::vector<double> weights;
};

inline Comb make_comb(double epsilon, double spacing, int extent, int parity_mod, int parity) {
    const double th = std::tanh(epsilon);
    const double ch = std::cosh(epsilon);
    Comb comb;
    for (int m = -extent; m <= extent; ++m) {
        if (parity_mod == 2 && ((m % 2) + 2) % 2 != parity) continue;
        const double q = m * spacing;
        comb.centers.push_back(q / ch);
        comb.weights.push_back(std::exp(-0.5 * th * q * q));
    }
    return comb;
}

inline double comb_value(const Comb& comb, double width, double x) {
    double v = 0.0;
    for (std::size_t k = 0; k < comb.centers.size(); ++k) {
        const double d = x - comb.centers[k];
        v += comb.weights[k] * std::exp(-d * d / (2.0 * width));
    }
    return v;
}

/// Exact squared L2 norm of the (unnormalized) comb.
inline double comb_norm2(const Comb& comb, double width) {
    double acc = 0.0;
    const double pref = std::sqrt(std::numbers::pi * width);
    for (std::size_t i = 0; i < comb.centers.size(); ++i)
        for (std::size_t j = 0; j < comb.centers.size(); ++j) {
            const double d = comb.centers[i] - comb.centers[j];
            acc += comb.weights[i] * comb.weights[j] * pref * std::exp(-d * d / (4.0 * width));
        }
    return acc;
}

} // namespace detail

/// Grid that keeps every comb tooth with weight >= 1e-14.
inline QuadratureGrid quadrature_grid(const GkpParameters& params, const CodewordOptions& opts = {}) {
    const double spacing = detail::comb_spacing(params.lattice());
    const double th = std::tanh(params.epsilon);
    // smallest K with exp(-tanh(eps) (K spacing)^2 / 2) < 1e-14
    const double k_real = std::sqrt(2.0 * 14.0 * std::log(10.0) / th) / spacing;
    int extent = static_cast<int>(std::floor(k_real)) + 1;
    QuadratureGrid g;
    g.comb_extent = extent;
    g.half_width = opts.half_width.value_or((extent + 1) * spacing);
    g.step = std::min(std::sqrt(th) / 8.0, 0.02);
    return g;
}

struct CodewordProjection {
    std::vector<StateVector> raw;      // Fock coefficients before orthonormalization
    std::vector<double> dropped_weight;
};

/// Projects the position-space combs onto the first dim Hermite functions.
inline CodewordProjection project_combs(const GkpParameters& params, const CodewordOptions& opts = {}) {
    const Lattice lattice = params.lattice();
    if (lattice == Lattice::other) {
        throw Error(ErrorKind::invalid_input,
                    "codewords are defined for eta = 2 sqrt(pi) or eta = sqrt(2 pi) only");
    }
    const QuadratureGrid grid = quadrature_grid(params, opts);
    const double width = std::tanh(params.epsilon);
    const double spacing = detail::comb_spacing(lattice);

    std::vector<detail::Comb> combs;
    if (lattice == Lattice::code) {
        combs.push_back(detail::make_comb(params.epsilon, spacing, grid.comb_extent, 2, 0));
        combs.push_back(detail::make_comb(params.epsilon, spacing, grid.comb_extent, 2, 1));
    } else {
        combs.push_back(detail::make_comb(params.epsilon, spacing, grid.comb_extent, 1, 0));
    }

    const auto npts = static_cast<Index>(std::ceil(2.0 * grid.half_width / grid.step));
    const double h = 2.0 * grid.half_width / static_cast<double>(npts);
    const Index dim = params.dim;

    std::vector<Eigen::VectorXd> coeffs(combs.size(), Eigen::VectorXd::Zero(dim));
    std::vector<double> grid_norm2(combs.size(), 0.0);
    std::vector<double> herm(static_cast<std::size_t>(dim));
    for (Index j = 0; j <= npts; ++j) {
        const double x = -grid.half_width + h * static_cast<double>(j);
        const double w = (j == 0 || j == npts) ? 0.5 * h : h;
        hermite_functions(x, herm);
        for (std::size_t c = 0; c < combs.size(); ++c) {
            const double psi = detail::comb_value(combs[c], width, x);
            grid_norm2[c] += w * psi * psi;
            const double wp = w * psi;
            for (Index n = 0; n < dim; ++n) coeffs[c][n] += wp * herm[static_cast<std::size_t>(n)];
        }
    }

    CodewordProjection out;
    for (std::size_t c = 0; c < combs.size(); ++c) {
        const double exact = detail::comb_norm2(combs[c], width);
        const double dropped = std::max(0.0, 1.0 - grid_norm2[c] / exact);
        if (dropped > opts.dropped_weight_tol) {
            std::ostringstream os;
            os << "position grid [-" << grid.half_width << ", " << grid.half_width
               << "] drops weight " << dropped << " > " << opts.dropped_weight_tol;
            throw Error(ErrorKind::quadrature, os.str());
        }
        out.dropped_weight.push_back(dropped);
        out.raw.push_back(coeffs[c].cast<Complex>());
    }
    return out;
}

/// Orthonormal codewords: |0> ~ even comb, |1> ~ odd comb minus its overlap
/// with the even comb. The sensor lattice yields a single normalized state.
inline std::vector<StateVector> build_codewords(const GkpParameters& params,
                                                const CodewordOptions& opts = {}) {
    auto proj = project_combs(params, opts);
    std::vector<StateVector> words;
    const StateVector& even = proj.raw[0];
    words.push_back(even / even.norm());
    if (proj.raw.size() == 2) {
        const StateVector& odd = proj.raw[1];
        StateVector one = odd - (even.dot(odd) / even.dot(even)) * even;
        words.push_back(one / one.norm());
    }
    return words;
}

/// Eigenvectors of the `count` smallest eigenvalues of W. Serves as an
/// independent route to the codespace.
inline std::vector<StateVector> kernel_codewords_via_eigen(const Operator& w, Index count) {
    require_square(w, "kernel_codewords_via_eigen");
    if (count < 1 || count >= w.rows()) {
        throw Error(ErrorKind::invalid_input, "kernel size must lie in [1, dim)");
    }
    Eigen::SelfAdjointEigenSolver<Operator> es(hermitian_part(w));
    const auto& ev = es.eigenvalues();
    double kernel_scale = 0.0;
    for (Index k = 0; k < count; ++k) kernel_scale = std::max(kernel_scale, std::abs(ev[k]));
    if (ev[count] < 1e3 * kernel_scale || ev[count] <= 0.0) {
        std::ostringstream os;
        os << "eigenvalue " << count << " of W is " << ev[count]
           << ", not separated from kernel candidates of size " << kernel_scale;
        throw Error(ErrorKind::degenerate_gap, os.str());
    }
    std::vector<StateVector> out;
    for (Index k = 0; k < count; ++k) out.push_back(es.eigenvectors().col(k));
    return out;
}

inline Operator span_projector(const std::vector<StateVector>& vecs) {
    Operator p = Operator::Zero(vecs.front().size(), vecs.front().size());
    for (const auto& v : vecs) p += v * v.adjoint();
    return p;
}

/// Frobenius distance between the orthogonal projectors onto two spans.
inline double projector_distance(const std::vector<StateVector>& a, const std::vector<StateVector>& b) {
    return (span_projector(a) - span_projector(b)).norm();
}

// --- logical basis and the code bundle -----------------------------------

struct LogicalBasis {
    Operator s0, sx, sy, sz;
};

inline LogicalBasis make_logical_basis(const StateVector& zero, const StateVector& one) {
    const Operator p00 = zero * zero.adjoint();
    const Operator p11 = one * one.adjoint();
    const Operator p10 = one * zero.adjoint();
    const Operator p01 = zero * one.adjoint();
    return {p00 + p11, p10 + p01, I_unit * p10 - I_unit * p01, p00 - p11};
}

struct GkpCode {
    GkpParameters params;
    Operator r;
    Operator s;
    Dissipators dissipators;
    Operator lyapunov;
    std::vector<StateVector> codewords;
    std::optional<LogicalBasis> logical;  // absent for the sensor lattice
};

inline GkpCode build_code(const GkpParameters& params, const CodewordOptions& opts = {}) {
    GkpCode code;
    code.params = params;
    auto rs = build_conjugated_quadratures(params);
    code.dissipators = build_dissipators(params, rs);
    code.r = std::move(rs.r);
    code.s = std::move(rs.s);
    code.lyapunov = build_lyapunov(code.dissipators);
    code.codewords = build_codewords(params, opts);
    if (code.codewords.size() == 2) code.logical = make_logical_basis(code.codewords[0], code.codewords[1]);
    return code;
}

} // namespace gkpdiss
