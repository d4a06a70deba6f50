#pragma once

// Magnetization dynamics and the diagonal vs. microcanonical comparison.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "entprop/entanglement.hpp"
#include "entprop/spectral.hpp"
#include "entprop/spin_basis.hpp"
#include "entprop/timeseries.hpp"

namespace entprop {

inline Real total_magnetization(const StateVector& v, SiteSubset sites) {
    return expectation_diagonal(v, sigma_z_sum_diagonal(v.num_sites(), sites));
}

/// <n|D|n> for every eigenvector, D diagonal in the computational basis.
inline Eigen::VectorXd eigenstate_expectations(const SpectralDecomposition& spec,
                                               const Eigen::VectorXd& diag) {
    if (diag.size() != spec.dim()) {
        throw std::invalid_argument("eigenstate_expectations: dimension mismatch");
    }
    return spec.modes.cwiseAbs2().transpose() * diag;
}

/// <n|A|n> for every eigenvector of a dense symmetric A.
inline Eigen::VectorXd eigenstate_expectations(const SpectralDecomposition& spec,
                                               const DenseOperator& op) {
    if (op.dim() != spec.dim()) {
        throw std::invalid_argument("eigenstate_expectations: dimension mismatch");
    }
    const Eigen::MatrixXd av = op.elements() * spec.modes;
    return spec.modes.cwiseProduct(av).colwise().sum().transpose();
}

/// sum_n |a_n|^2 <n|A|n>, given the per-eigenstate expectations.
inline Real diagonal_average(const OverlapCoefficients& a, const Eigen::VectorXd& per_state) {
    if (a.a.size() != per_state.size()) {
        throw std::invalid_argument("diagonal_average: dimension mismatch");
    }
    return a.a.cwiseAbs2().dot(per_state);
}

inline Real diagonal_average(const SpectralDecomposition& spec, const OverlapCoefficients& a,
                             const DenseOperator& op) {
    return diagonal_average(a, eigenstate_expectations(spec, op));
}

struct ShellAverage {
    Real value = std::numeric_limits<Real>::quiet_NaN();
    int shell_count = 0; ///< 0 means the shell was empty; widen dE.
};

/// Uniform average of <n|A|n> over |E_n - E0| < dE.
inline ShellAverage microcanonical_average(const SpectralDecomposition& spec,
                                           const Eigen::VectorXd& per_state, Real e0, Real de) {
    if (!(de > 0.0)) {
        throw std::invalid_argument("microcanonical_average: dE must be positive");
    }
    if (per_state.size() != spec.dim()) {
        throw std::invalid_argument("microcanonical_average: dimension mismatch");
    }
    ShellAverage out;
    Real sum = 0.0;
    for (Eigen::Index n = 0; n < spec.dim(); ++n) {
        if (std::abs(spec.energies[n] - e0) < de) {
            sum += per_state[n];
            ++out.shell_count;
        }
    }
    if (out.shell_count > 0) {
        out.value = sum / out.shell_count;
    }
    return out;
}

inline ShellAverage microcanonical_average(const SpectralDecomposition& spec,
                                           const DenseOperator& op, Real e0, Real de) {
    return microcanonical_average(spec, eigenstate_expectations(spec, op), e0, de);
}

struct EnsembleReport {
    std::string observable;
    TimeSeries series;
    Real diagonal_avg = 0.0;
    Real microcanonical_avg = std::numeric_limits<Real>::quiet_NaN();
    int shell_count = 0;
    Real e0 = 0.0;
    Real de = 0.2;
};

struct ThermalizationConfig {
    ModelParams model = ModelParams::extended_chaotic_ising(12);
    BasisState initial = neel_bits(12);
    Real dt = 0.02;
    Real t_max = 10.0;
    Real de = 0.2;
    Real delta_sat = 0.1;
    int dwell = 10;
    EntropyBase base = EntropyBase::Two;
    int threads = 1;
};

struct ThermalizationRun {
    EnsembleReport magnetization;
    TimeSeries half_chain_entropy; ///< S of the last floor(N/2) sites
    std::optional<Real> entropy_t_star;
    RecurrenceInfo recurrence;      ///< band re-entry of the half-chain entropy
    DecompositionQuality quality;
};

/// Quench from a product state on N sites: M_z(t), half-chain S(t), and the
/// diagonal/microcanonical M_z averages.
inline ThermalizationRun run_thermalization(const ThermalizationConfig& cfg) {
    const int n = cfg.model.num_sites;
    if (n < 2) {
        throw std::invalid_argument("thermalization run needs at least two sites");
    }
    const DenseOperator h = build_hamiltonian(cfg.model);
    const SpectralDecomposition spec = eigendecompose(h, false);
    ThermalizationRun run;
    run.quality = measure_decomposition(h, spec);
    enforce_decomposition_contract(h, run.quality);

    const StateVector psi0 = product_state(cfg.initial, n);
    const OverlapCoefficients a = overlaps(spec, psi0);
    const SiteSubset all = SiteSubset::all(n);
    const Eigen::VectorXd mz = sigma_z_sum_diagonal(n, all);
    const Eigen::VectorXd mz_n = eigenstate_expectations(spec, mz);

    EnsembleReport& rep = run.magnetization;
    rep.observable = "M_z";
    rep.e0 = expectation(psi0, h);
    rep.de = cfg.de;
    rep.diagonal_avg = diagonal_average(a, mz_n);
    const ShellAverage shell = microcanonical_average(spec, mz_n, rep.e0, cfg.de);
    rep.microcanonical_avg = shell.value;
    rep.shell_count = shell.shell_count;

    const std::vector<Real> grid = uniform_grid(cfg.dt, cfg.t_max);
    rep.series.t = grid;
    rep.series.y.assign(grid.size(), 0.0);
    run.half_chain_entropy.t = grid;
    run.half_chain_entropy.y.assign(grid.size(), 0.0);
    const SiteSubset half = SiteSubset::block(n - n / 2, n / 2);

    Eigen::MatrixXcd coeffs = a.a;
    evolve_columns_parallel(spec, coeffs, grid, cfg.threads,
                            [&](std::size_t k, const Eigen::MatrixXcd& states) {
                                const StateVector psi(n, states.col(0));
                                rep.series.y[k] = expectation_diagonal(psi, mz);
                                run.half_chain_entropy.y[k] =
                                    entanglement_entropy(psi, half, cfg.base);
                            });

    const Real plateau = plateau_value(run.half_chain_entropy);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (run.half_chain_entropy.y[k] >= (1.0 - cfg.delta_sat) * plateau) {
            run.entropy_t_star = grid[k];
            break;
        }
    }
    run.recurrence = detect_recurrence(run.half_chain_entropy, cfg.delta_sat, cfg.dwell);
    return run;
}

} // namespace entprop
