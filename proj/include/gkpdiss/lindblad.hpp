#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gkpdiss/fock.hpp"
#include "gkpdiss/gkp.hpp"

namespace gkpdiss {

struct Channel {
    Operator op;
    double rate = 1.0;
    std::string label;
};

/// d rho/dt = sum_k rate_k D_{V_k}(rho), zero Hamiltonian.
class LindbladModel {
public:
    explicit LindbladModel(Index dim) : dim_(dim) { require_dimension(dim); }

    LindbladModel& add(Operator op, double rate, std::string label = {}) {
        require_square(op, "LindbladModel::add");
        if (op.rows() != dim_) {
            throw Error(ErrorKind::shape, "channel '" + label + "' has dimension " +
                                              std::to_string(op.rows()) + ", model has " +
                                              std::to_string(dim_));
        }
        if (!(rate >= 0.0) || !std::isfinite(rate)) {
            throw Error(ErrorKind::invalid_input, "channel '" + label + "' has negative or non-finite rate");
        }
        channels_.push_back({std::move(op), rate, std::move(label)});
        return *this;
    }

    [[nodiscard]] Index dim() const { return dim_; }
    [[nodiscard]] const std::vector<Channel>& channels() const { return channels_; }

    /// sum_k rate_k V_k^dag V_k
    [[nodiscard]] Operator decay_operator() const {
        Operator k = Operator::Zero(dim_, dim_);
        for (const auto& c : channels_) k.noalias() += c.rate * (c.op.adjoint() * c.op);
        return hermitian_part(k);
    }

    /// Label and spectral norm of the channel with largest rate*||V||^2.
    [[nodiscard]] std::pair<std::string, double> dominant_channel() const {
        std::pair<std::string, double> best{"", 0.0};
        for (const auto& c : channels_) {
            const double n = c.rate * hermitian_eigenvalues(c.op.adjoint() * c.op).maxCoeff();
            if (n >= best.second) best = {c.label, n};
        }
        return best;
    }

private:
    Index dim_;
    std::vector<Channel> channels_;
};

/// The four stabilizing dissipators at unit rate.
inline LindbladModel gkp_model(const GkpCode& code) {
    LindbladModel m(code.params.dim);
    for (std::size_t k = 0; k < 4; ++k) m.add(code.dissipators[k], 1.0, "V" + std::to_string(k + 1));
    return m;
}

enum class NoiseChannel { loss, gain, position, momentum };

inline std::string_view to_string(NoiseChannel n) {
    switch (n) {
    case NoiseChannel::loss: return "a";
    case NoiseChannel::gain: return "a_dag";
    case NoiseChannel::position: return "Q";
    case NoiseChannel::momentum: return "P";
    }
    return "?";
}

inline Operator noise_operator(NoiseChannel n, Index dim) {
    switch (n) {
    case NoiseChannel::loss: return make_ladder(dim);
    case NoiseChannel::gain: return make_ladder(dim).adjoint();
    case NoiseChannel::position: return make_quadratures(dim).q;
    case NoiseChannel::momentum: return make_quadratures(dim).p;
    }
    return identity(dim);
}

inline LindbladModel with_noise(LindbladModel model, NoiseChannel n, double rate) {
    model.add(noise_operator(n, model.dim()), rate, std::string(to_string(n)));
    return model;
}

// --- generators -------------------------------------------------------------

/// sum rate * (V rho V^dag - (V^dag V rho + rho V^dag V)/2)
inline Operator lindblad_rhs(const LindbladModel& model, const Operator& rho) {
    if (rho.rows() != model.dim() || rho.cols() != model.dim()) {
        throw Error(ErrorKind::shape, "lindblad_rhs: state dimension does not match model");
    }
    Operator out = Operator::Zero(model.dim(), model.dim());
    for (const auto& c : model.channels()) {
        if (c.rate == 0.0) continue;
        const Operator vdv = c.op.adjoint() * c.op;
        out.noalias() += c.rate * (c.op * rho * c.op.adjoint());
        out.noalias() -= (0.5 * c.rate) * (vdv * rho);
        out.noalias() -= (0.5 * c.rate) * (rho * vdv);
    }
    return out;
}

/// sum rate * (V^dag X V - (V^dag V X + X V^dag V)/2)
inline Operator adjoint_rhs(const LindbladModel& model, const Operator& x) {
    if (x.rows() != model.dim() || x.cols() != model.dim()) {
        throw Error(ErrorKind::shape, "adjoint_rhs: operator dimension does not match model");
    }
    Operator out = Operator::Zero(model.dim(), model.dim());
    for (const auto& c : model.channels()) {
        if (c.rate == 0.0) continue;
        const Operator vdv = c.op.adjoint() * c.op;
        out.noalias() += c.rate * (c.op.adjoint() * x * c.op);
        out.noalias() -= (0.5 * c.rate) * (vdv * x);
        out.noalias() -= (0.5 * c.rate) * (x * vdv);
    }
    return out;
}

// --- density matrices -------------------------------------------------------

struct DensityTolerances {
    double trace = 1e-8;
    double hermiticity = 1e-10;
    double positivity = 1e-8;
};

class DensityMatrix {
public:
    /// Validates trace, Hermiticity and positivity against `tol`.
    static DensityMatrix make(Operator m, DensityTolerances tol = {}) {
        require_square(m, "DensityMatrix");
        require_dimension(m.rows());
        const double tr_err = std::abs(m.trace() - Complex(1.0));
        const double herm = hermiticity_defect(m);
        std::ostringstream os;
        if (tr_err > tol.trace) os << "trace deviates from 1 by " << tr_err << "; ";
        if (herm > tol.hermiticity) os << "Hermiticity defect " << herm << "; ";
        if (os.str().empty()) {
            const double lmin = min_eigenvalue(m);
            if (lmin < -tol.positivity) os << "minimum eigenvalue " << lmin << "; ";
        }
        if (!os.str().empty()) throw Error(ErrorKind::invalid_input, "not a density matrix: " + os.str());
        return DensityMatrix(std::move(m), tol);
    }

    static DensityMatrix pure(const StateVector& psi) {
        return make(projector(psi / psi.norm()));
    }

    [[nodiscard]] const Operator& matrix() const { return m_; }
    [[nodiscard]] Index dim() const { return m_.rows(); }
    [[nodiscard]] const DensityTolerances& tolerances() const { return tol_; }

private:
    DensityMatrix(Operator m, DensityTolerances tol) : m_(std::move(m)), tol_(tol) {}
    Operator m_;
    DensityTolerances tol_;
};

} // namespace gkpdiss
