// Builds the eps = 0.1 code, prints codeword diagnostics and follows a
// displaced codeword back into the codespace for a short time.

#include <iostream>

#include "gkpdiss.hpp"

using namespace gkpdiss;

int main() {
    const auto code = build_code(GkpParameters::make(0.1));
    const Operator n = number_operator(code.params.dim);
    std::cout << "dim " << code.params.dim << ", kappa " << kappa(0.1, code_eta).value << '\n';
    for (std::size_t k = 0; k < code.codewords.size(); ++k)
        std::cout << "codeword " << k << ": <n> = " << expectation(n, code.codewords[k]).real() << '\n';

    // Small position shift of |0_eps>.
    const auto [q, p] = make_quadratures(code.params.dim);
    const StateVector shifted = matrix_exponential(Complex(0.0, -0.3) * p) * code.codewords[0];

    ObservableSpec spec;
    spec.times = uniform_grid(2.0, 4);
    spec.lyapunov = code.lyapunov;
    const auto traj = evolve(gkp_model(code), DensityMatrix::pure(shifted), 2.0, {}, spec);
    std::cout << "t        Tr(W rho)\n";
    for (const auto& r : traj.records) std::cout << r.t << "  " << r.tr_w << '\n';
}
