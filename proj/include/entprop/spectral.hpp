#pragma once

// Full-spectrum evolution: diagonalize once, then
//   |psi(t)> = sum_n a_n exp(-i E_n t) |n>,  a_n = <n|psi(0)>
// for any t without time stepping.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "entprop/errors.hpp"
#include "entprop/parallel.hpp"
#include "entprop/spin_basis.hpp"

namespace entprop {

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a real
/// symmetric operator. The largest-magnitude component of every eigenvector
/// is positive.
struct SpectralDecomposition {
    int num_sites = 0;
    Eigen::VectorXd energies;
    Eigen::MatrixXd modes;

    Eigen::Index dim() const { return energies.size(); }
};

/// a_n = <n|psi(0)>.
struct OverlapCoefficients {
    Eigen::VectorXcd a;
};

/// Measured quality of a decomposition against its source operator.
struct DecompositionQuality {
    Real max_residual = 0.0;        ///< max_n ||H|n> - E_n|n>||
    Real orthonormality_error = 0.0; ///< max |V^T V - I|
    Real trace_error = 0.0;          ///< |sum E_n - Tr H|
};

inline constexpr Real kSymmetryTolerance = 1e-12;
inline constexpr Real kResidualTolerance = 1e-10;
inline constexpr Real kOrthonormalityTolerance = 1e-10;

inline DecompositionQuality measure_decomposition(const DenseOperator& h,
                                                  const SpectralDecomposition& spec) {
    DecompositionQuality q;
    const Eigen::MatrixXd& v = spec.modes;
    Eigen::MatrixXd r = h.elements() * v;
    r -= v * spec.energies.asDiagonal();
    q.max_residual = r.colwise().norm().maxCoeff();
    Eigen::MatrixXd g = v.transpose() * v;
    g.diagonal().array() -= 1.0;
    q.orthonormality_error = g.cwiseAbs().maxCoeff();
    q.trace_error = std::abs(spec.energies.sum() - h.elements().trace());
    return q;
}

/// Throws NumericalContractError unless the measured quality meets the
/// residual, orthonormality and trace bounds for `h`.
inline void enforce_decomposition_contract(const DenseOperator& h, const DecompositionQuality& q) {
    const Real scale = std::max<Real>(h.max_abs(), 1.0);
    const Real dim = static_cast<Real>(h.dim());
    if (!(q.max_residual <= kResidualTolerance * scale)) {
        throw NumericalContractError("eigenvector residual " + std::to_string(q.max_residual) +
                                     " exceeds bound");
    }
    if (!(q.orthonormality_error <= kOrthonormalityTolerance)) {
        throw NumericalContractError("eigenvectors not orthonormal: " +
                                     std::to_string(q.orthonormality_error));
    }
    if (!(q.trace_error <= 1e-8 * dim)) {
        throw NumericalContractError("eigenvalue sum deviates from trace by " +
                                     std::to_string(q.trace_error));
    }
}

inline void check_decomposition(const DenseOperator& h, const SpectralDecomposition& spec) {
    enforce_decomposition_contract(h, measure_decomposition(h, spec));
}

/// Full eigendecomposition of a real symmetric operator (LAPACK dsyevd).
/// With `verify` set, the residual contract is checked before returning.
inline SpectralDecomposition eigendecompose(const DenseOperator& h, bool verify = true) {
    if (h.asymmetry() > kSymmetryTolerance) {
        throw std::invalid_argument("eigendecompose: operator is not symmetric");
    }
    SpectralDecomposition spec;
    spec.num_sites = h.num_sites();
    const auto n = static_cast<lapack_int>(h.dim());
    spec.modes = h.elements();
    spec.energies.resize(n);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, spec.modes.data(), n,
                                           spec.energies.data());
    if (info != 0) {
        throw NumericalContractError("dsyevd failed with info = " + std::to_string(info));
    }
    // dsyevd returns ascending eigenvalues; fix the sign of each column.
    for (Eigen::Index c = 0; c < spec.modes.cols(); ++c) {
        Eigen::Index arg = 0;
        spec.modes.col(c).cwiseAbs().maxCoeff(&arg);
        if (spec.modes(arg, c) < 0.0) {
            spec.modes.col(c) *= -1.0;
        }
    }
    if (verify) {
        check_decomposition(h, spec);
    }
    return spec;
}

inline OverlapCoefficients overlaps(const SpectralDecomposition& spec, const StateVector& psi0) {
    if (psi0.dim() != spec.dim()) {
        throw std::invalid_argument("overlaps: dimension mismatch");
    }
    const Eigen::VectorXd re = spec.modes.transpose() * psi0.amplitudes().real();
    const Eigen::VectorXd im = spec.modes.transpose() * psi0.amplitudes().imag();
    OverlapCoefficients out;
    out.a.resize(spec.dim());
    out.a.real() = re;
    out.a.imag() = im;
    return out;
}

inline StateVector evolve(const SpectralDecomposition& spec, const OverlapCoefficients& a, Real t) {
    if (a.a.size() != spec.dim()) {
        throw std::invalid_argument("evolve: dimension mismatch");
    }
    const Eigen::Index n = spec.dim();
    Eigen::VectorXcd phased(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        phased[k] = a.a[k] * std::polar(1.0, -spec.energies[k] * t);
    }
    Eigen::VectorXcd amp(n);
    amp.real() = spec.modes * phased.real();
    amp.imag() = spec.modes * phased.imag();
    return StateVector(spec.num_sites, std::move(amp));
}

/// Batched evolution of several coefficient columns over a list of times.
/// `fn(k, states)` receives the eigenbasis-to-computational transform of
/// every column of `coeffs` at times[k]. Times are processed in fixed-size
/// blocks so that results do not depend on how callers partition work.
template <class Fn>
void evolve_columns(const SpectralDecomposition& spec, const Eigen::MatrixXcd& coeffs,
                    std::span<const Real> times, Fn&& fn, std::size_t block = 16) {
    if (coeffs.rows() != spec.dim()) {
        throw std::invalid_argument("evolve_columns: dimension mismatch");
    }
    const Eigen::Index n = spec.dim();
    const Eigen::Index m = coeffs.cols();
    Eigen::MatrixXd packed;
    Eigen::MatrixXd mapped;
    Eigen::MatrixXcd states(n, m);
    for (std::size_t start = 0; start < times.size(); start += block) {
        const std::size_t count = std::min(block, times.size() - start);
        packed.resize(n, static_cast<Eigen::Index>(2 * m * count));
        for (std::size_t j = 0; j < count; ++j) {
            const Real t = times[start + j];
            for (Eigen::Index k = 0; k < n; ++k) {
                const Complex ph = std::polar(1.0, -spec.energies[k] * t);
                for (Eigen::Index c = 0; c < m; ++c) {
                    const Complex z = coeffs(k, c) * ph;
                    const Eigen::Index col = 2 * (static_cast<Eigen::Index>(j) * m + c);
                    packed(k, col) = z.real();
                    packed(k, col + 1) = z.imag();
                }
            }
        }
        mapped.noalias() = spec.modes * packed;
        for (std::size_t j = 0; j < count; ++j) {
            for (Eigen::Index c = 0; c < m; ++c) {
                const Eigen::Index col = 2 * (static_cast<Eigen::Index>(j) * m + c);
                states.col(c).real() = mapped.col(col);
                states.col(c).imag() = mapped.col(col + 1);
            }
            fn(start + j, static_cast<const Eigen::MatrixXcd&>(states));
        }
    }
}

/// evolve_columns over a time list split into fixed blocks shared among
/// `threads` workers. `fn(k, states)` must only touch per-k output.
template <class Fn>
void evolve_columns_parallel(const SpectralDecomposition& spec, const Eigen::MatrixXcd& coeffs,
                             std::span<const Real> times, int threads, Fn&& fn,
                             std::size_t block = 16) {
    const std::size_t blocks = (times.size() + block - 1) / block;
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t start = b * block;
        const std::size_t count = std::min(block, times.size() - start);
        evolve_columns(spec, coeffs, times.subspan(start, count),
                       [&](std::size_t k, const Eigen::MatrixXcd& states) { fn(start + k, states); },
                       block);
    });
}

/// <v|A|v> for a real symmetric A. The imaginary part must vanish to 1e-10.
inline Real expectation(const StateVector& v, const DenseOperator& op) {
    if (v.dim() != op.dim()) {
        throw std::invalid_argument("expectation: dimension mismatch");
    }
    if (op.asymmetry() > kSymmetryTolerance) {
        throw std::invalid_argument("expectation: operator is not Hermitian");
    }
    const Eigen::VectorXd x = v.amplitudes().real();
    const Eigen::VectorXd y = v.amplitudes().imag();
    const Eigen::VectorXd ax = op.elements() * x;
    const Eigen::VectorXd ay = op.elements() * y;
    const Real re = x.dot(ax) + y.dot(ay);
    const Real im = x.dot(ay) - y.dot(ax);
    if (std::abs(im) > 1e-10) {
        throw NumericalContractError("expectation has imaginary part " + std::to_string(im));
    }
    return re;
}

/// <v|D|v> for a diagonal operator given by its diagonal.
inline Real expectation_diagonal(const StateVector& v, const Eigen::VectorXd& diag) {
    if (v.dim() != diag.size()) {
        throw std::invalid_argument("expectation: dimension mismatch");
    }
    return v.amplitudes().cwiseAbs2().dot(diag);
}

} // namespace entprop
