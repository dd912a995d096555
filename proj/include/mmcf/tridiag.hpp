#pragma once

// Thomas algorithm for tridiagonal systems.  The callers assemble rows that
// are diagonally dominant (checked there), so no pivoting is needed.

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mmcf {

// Solves the system with diagonals (lo, di, up) in place of rhs.
// lo[0] and up[N-1] are ignored.  Workspace is caller-provided so steppers
// can reuse it across steps.
template <class Real>
void solve_tridiagonal(const std::vector<Real>& lo, const std::vector<Real>& di,
                       const std::vector<Real>& up, std::vector<Real>& rhs,
                       std::vector<Real>& work) {
    const std::size_t N = di.size();
    if (lo.size() != N || up.size() != N || rhs.size() != N)
        throw std::invalid_argument("tridiagonal system: size mismatch");
    work.resize(N);
    Real piv = di[0];
    if (piv == Real(0)) throw std::runtime_error("tridiagonal solve: zero pivot");
    work[0] = up[0] / piv;
    rhs[0] = rhs[0] / piv;
    for (std::size_t i = 1; i < N; ++i) {
        piv = di[i] - lo[i] * work[i - 1];
        if (piv == Real(0)) throw std::runtime_error("tridiagonal solve: zero pivot");
        work[i] = up[i] / piv;
        rhs[i] = (rhs[i] - lo[i] * rhs[i - 1]) / piv;
    }
    for (std::size_t i = N - 1; i-- > 0;)
        rhs[i] -= work[i] * rhs[i + 1];
}

} // namespace mmcf
