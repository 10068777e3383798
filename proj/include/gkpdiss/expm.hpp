#pragma once

// Dense matrix exponential by scaling and squaring with diagonal Pade
// approximants of degree 3, 5, 7, 9 or 13 (Higham 2005). Degree and scaling
// are selected from the 1-norm; no normality is assumed, which matters for the
// non-Hermitian generators i*eta*R used here.

#include <array>
#include <cmath>
#include <sstream>

#include "gkpdiss/fock.hpp"

namespace gkpdiss {

namespace detail {

inline double one_norm(const Operator& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

template <std::size_t N>
Operator pade_low(const Operator& a, const std::array<double, N>& b) {
    const Index n = a.rows();
    const Operator ident = identity(n);
    const Operator a2 = a * a;
    // u = a * sum_k b[2k+1] a^{2k},  v = sum_k b[2k] a^{2k}
    Operator u_even = b[1] * ident;
    Operator v = b[0] * ident;
    Operator power = ident;
    for (std::size_t k = 1; 2 * k < N; ++k) {
        power = power * a2;
        v += b[2 * k] * power;
        if (2 * k + 1 < N) u_even += b[2 * k + 1] * power;
    }
    const Operator u = a * u_even;
    return (v - u).partialPivLu().solve(v + u);
}

inline Operator pade13(const Operator& a) {
    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};
    const Index n = a.rows();
    const Operator ident = identity(n);
    const Operator a2 = a * a;
    const Operator a4 = a2 * a2;
    const Operator a6 = a4 * a2;
    const Operator u =
        a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
    const Operator v =
        a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
    return (v - u).partialPivLu().solve(v + u);
}

} // namespace detail

/// exp(M). Throws invalid_input on non-finite entries and overflow if the
/// repeated squaring leaves the representable range.
inline Operator matrix_exponential(const Operator& m) {
    require_square(m, "matrix_exponential");
    if (!all_finite(m)) {
        throw Error(ErrorKind::invalid_input, "matrix_exponential: operator has non-finite entries");
    }
    const double norm = detail::one_norm(m);

    static constexpr std::array<double, 4> theta = {1.495585217958292e-2, 2.539398330063230e-1,
                                                    9.504178996162932e-1, 2.097847961257068e0};
    if (norm <= theta[0]) return detail::pade_low(m, std::array<double, 4>{120, 60, 12, 1});
    if (norm <= theta[1])
        return detail::pade_low(m, std::array<double, 6>{30240, 15120, 3360, 420, 30, 1});
    if (norm <= theta[2])
        return detail::pade_low(
            m, std::array<double, 8>{17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1});
    if (norm <= theta[3])
        return detail::pade_low(m, std::array<double, 10>{17643225600.0, 8821612800.0, 2075673600.0,
                                                          302702400.0, 30270240.0, 2162160.0,
                                                          110880.0, 3960.0, 90.0, 1.0});

    constexpr double theta13 = 5.371920351148152;
    int squarings = 0;
    if (norm > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    Operator result = detail::pade13(m / std::ldexp(1.0, squarings));
    for (int k = 0; k < squarings; ++k) {
        result = result * result;
        if (!all_finite(result)) {
            std::ostringstream os;
            os << "matrix_exponential overflowed while squaring (1-norm of operator = " << norm
               << ")";
            throw Error(ErrorKind::overflow, os.str());
        }
    }
    return result;
}

} // namespace gkpdiss
