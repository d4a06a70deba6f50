#pragma once

// Two-initial-state protocol: an attached spin at site 0 either in a product
// state with the bulk (a) or sharing an EPR pair with bulk site 1 (b). The
// bulk evolves alone; the far-end block R of d sites sees the difference only
// once entanglement has crossed the chain.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "entprop/entanglement.hpp"
#include "entprop/spectral.hpp"
#include "entprop/spin_basis.hpp"
#include "entprop/timeseries.hpp"

namespace entprop {

enum class InitialVariant { A, B };

struct Thresholds {
    Real delta_sat = 0.1;
    Real eps_split = 1e-5;
    int dwell = 10;
    Real eps_mi = 1e-8;

    void validate() const {
        if (!(delta_sat > 0.0 && delta_sat < 1.0)) {
            throw std::invalid_argument("delta_sat must lie in (0, 1)");
        }
        if (!(eps_split > 0.0) || !(eps_mi > 0.0)) {
            throw std::invalid_argument("eps_split and eps_mi must be positive");
        }
        if (dwell < 1) {
            throw std::invalid_argument("dwell must be at least one sample");
        }
    }
};

struct ProtocolConfig {
    ModelParams bulk = ModelParams::chaotic_ising(10);
    BasisState bulk_initial = neel_bits(10);
    std::vector<int> d_list{1, 2, 3, 4, 5, 6};
    Real dt = 0.02;
    Real t_max = 20.0;
    Thresholds thresholds;
    EntropyBase base = EntropyBase::Two;
    int threads = 1;

    int bulk_sites() const { return bulk.num_sites; }

    void validate() const {
        bulk.validate();
        const int n = bulk.num_sites;
        if (n < 2 || n + 1 > kMaxStateSites || n > kMaxDenseSites) {
            throw std::invalid_argument("bulk size " + std::to_string(n) + " out of range");
        }
        if (d_list.empty()) {
            throw std::invalid_argument("d_list is empty");
        }
        for (int d : d_list) {
            if (d < 1 || d >= n) {
                throw std::invalid_argument("subsystem size d = " + std::to_string(d) +
                                            " must satisfy 1 <= d < N");
            }
        }
        if (n < 64 && (bulk_initial.bits >> n) != 0) {
            throw std::invalid_argument("bulk initial state has bits beyond N");
        }
        thresholds.validate();
        (void)uniform_grid(dt, t_max);
    }
};

/// Attach site 0 to an N-site bulk: |0>_0 (x) bulk for (a); for (b) a CNOT
/// from site 0 onto site 1 after putting site 0 in (|0> + |1>)/sqrt 2.
inline StateVector prepare_initial_state(InitialVariant variant, const StateVector& bulk) {
    const int l = bulk.num_sites() + 1;
    StateVector out(l);
    const Real w = variant == InitialVariant::A ? 1.0 : std::numbers::sqrt2 / 2.0;
    for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(bulk.dim()); ++b) {
        out[b << 1] = w * bulk[b];
        if (variant == InitialVariant::B) {
            out[(b << 1) | 1] = w * bulk[b];
        }
    }
    if (variant == InitialVariant::B) {
        out = apply_cnot(Site{0}, Site{1}, out);
    }
    return out;
}

/// H of the bulk chain on sites 1..N of an (N+1)-site register. Site 0 has no
/// coupling and no field.
inline DenseOperator bulk_evolution_hamiltonian(const ModelParams& bulk) {
    return detail::embedded_hamiltonian(bulk, 1, bulk.num_sites + 1);
}

/// The last d bulk sites on the (N+1)-site register.
inline SiteSubset far_block(int bulk_sites, int d) { return SiteSubset::block(bulk_sites - d + 1, d); }

struct SubsystemRecord {
    int d = 0;
    int ell = 0;
    TimeSeries s_a;
    TimeSeries s_b;
    TimeSeries mutual_info; ///< I(0|R) in variant b, unclamped
};

/// Extracted scales for one subsystem at one set of thresholds.
struct ScaleRow {
    int d = 0;
    int ell = 0;
    Real plateau = 0.0;
    Extraction t_star;
    Extraction t_diff;
    Extraction t_mi;
    std::optional<Real> growth_rate;
    std::optional<Real> xi;
};

struct VelocityFit {
    std::vector<std::pair<Real, Real>> points; ///< (t, ell)
    Real slope = 0.0;
    Real intercept = 0.0;
    Real r_squared = 0.0;
    Real slope_through_origin = 0.0;
};

struct ProtocolAnalysis {
    Thresholds thresholds;
    std::vector<ScaleRow> rows;
    std::optional<VelocityFit> ee_fit;
    std::optional<VelocityFit> ee_even;
    std::optional<VelocityFit> ee_odd;
    std::optional<VelocityFit> mi_fit;
    std::optional<Real> mean_t_diff_even;
    std::optional<Real> mean_t_diff_odd;
    std::vector<std::string> notes; ///< fits that could not be formed, and why
};

struct RunRecord {
    ProtocolConfig config;
    std::vector<Real> t;
    TimeSeries site0_entropy; ///< S of {0} in variant b
    std::vector<SubsystemRecord> subsystems;
    Real max_norm_error = 0.0;
    DecompositionQuality quality;
    ProtocolAnalysis analysis; ///< at config.thresholds
};

/// First grid time with s >= (1 - delta) * plateau.
inline Extraction extract_t_star(const TimeSeries& s, Real delta_sat) {
    s.validate();
    if (s.empty()) {
        return Extraction::not_found("empty series");
    }
    const Real band = (1.0 - delta_sat) * plateau_value(s);
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.y[k] >= band) {
            return Extraction::at(s.t[k]);
        }
    }
    return Extraction::not_found("series never reaches the plateau band");
}

/// First time |s_b - s_a| exceeds eps and stays above for `dwell` samples.
inline Extraction extract_t_diff(const TimeSeries& s_a, const TimeSeries& s_b, Real eps_split,
                                 int dwell) {
    s_a.validate();
    s_b.validate();
    if (s_a.t != s_b.t) {
        throw std::invalid_argument("extract_t_diff: series are on different grids");
    }
    std::vector<Real> gap(s_a.size());
    for (std::size_t k = 0; k < gap.size(); ++k) {
        gap[k] = std::abs(s_b.y[k] - s_a.y[k]);
    }
    const auto k = first_sustained_above(gap, eps_split, dwell);
    if (!k) {
        return Extraction::not_found("series do not split within t_max");
    }
    return Extraction::at(s_a.t[*k]);
}

inline Extraction extract_t_mi(const TimeSeries& mi, Real eps_mi, int dwell) {
    mi.validate();
    const auto k = first_sustained_above(mi.y, eps_mi, dwell);
    if (!k) {
        return Extraction::not_found("mutual information stays below eps_mi");
    }
    return Extraction::at(mi.t[*k]);
}

/// Least-squares slope of s over the early segment 0.2 p <= s <= 0.8 p, t <= t*.
inline std::optional<Real> growth_rate(const TimeSeries& s, Real plateau, std::optional<Real> t_star) {
    if (!t_star || !(plateau > 0.0)) {
        return std::nullopt;
    }
    Real n = 0, st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t k = 0; k < s.size() && s.t[k] <= *t_star; ++k) {
        if (s.y[k] >= 0.2 * plateau && s.y[k] <= 0.8 * plateau) {
            n += 1;
            st += s.t[k];
            sy += s.y[k];
            stt += s.t[k] * s.t[k];
            sty += s.t[k] * s.y[k];
        }
    }
    const Real den = n * stt - st * st;
    if (n < 2 || !(den > 0.0)) {
        return std::nullopt;
    }
    return (n * sty - st * sy) / den;
}

enum class ParityFilter { All, Even, Odd };

inline const char* to_string(ParityFilter f) {
    switch (f) {
    case ParityFilter::Even:
        return "even";
    case ParityFilter::Odd:
        return "odd";
    default:
        return "all";
    }
}

/// ell = v t + c by least squares over the points whose ell passes `filter`.
inline VelocityFit fit_velocity(const std::vector<std::pair<Real, Real>>& points,
                                ParityFilter filter = ParityFilter::All) {
    VelocityFit fit;
    for (const auto& [t, ell] : points) {
        const auto parity = std::llround(ell) % 2;
        if (filter == ParityFilter::All || (filter == ParityFilter::Even && parity == 0) ||
            (filter == ParityFilter::Odd && parity != 0)) {
            fit.points.emplace_back(t, ell);
        }
    }
    const auto n = static_cast<Real>(fit.points.size());
    if (fit.points.size() < 2) {
        throw std::invalid_argument("velocity fit needs at least two points");
    }
    Real mt = 0, ml = 0;
    for (const auto& [t, ell] : fit.points) {
        mt += t;
        ml += ell;
    }
    mt /= n;
    ml /= n;
    Real stt = 0, stl = 0, sll = 0, t2 = 0, tl = 0;
    for (const auto& [t, ell] : fit.points) {
        stt += (t - mt) * (t - mt);
        stl += (t - mt) * (ell - ml);
        sll += (ell - ml) * (ell - ml);
        t2 += t * t;
        tl += t * ell;
    }
    if (!(stt > 0.0)) {
        throw std::invalid_argument("velocity fit needs at least two distinct times");
    }
    fit.slope = stl / stt;
    fit.intercept = ml - fit.slope * mt;
    Real ss_res = 0;
    for (const auto& [t, ell] : fit.points) {
        const Real r = ell - (fit.slope * t + fit.intercept);
        ss_res += r * r;
    }
    fit.r_squared = sll > 0.0 ? 1.0 - ss_res / sll : 1.0;
    fit.slope_through_origin = t2 > 0.0 ? tl / t2 : 0.0;
    if (!std::isfinite(fit.slope)) {
        throw std::invalid_argument("velocity fit slope is not finite");
    }
    return fit;
}

namespace detail {

/// 1 + h^2 - 2h cos k, written as (1 - h)^2 + 4h sin^2(k/2) to avoid cancellation near k = 0.
inline Real ti_gap_square(Real hx, Real k) {
    const Real s = std::sin(0.5 * k);
    return std::max<Real>((1.0 - hx) * (1.0 - hx) + 4.0 * hx * s * s, 0.0);
}

} // namespace detail

/// Quasi-particle energy of the transverse Ising chain, 2 sqrt(1 + h^2 - 2h cos k).
inline Real ti_dispersion(Real hx, Real k) { return 2.0 * std::sqrt(detail::ti_gap_square(hx, k)); }

/// d eps / dk. At the gap closing (h = 1, k = 0) the one-sided limit is used.
inline Real ti_group_velocity(Real hx, Real k) {
    const Real r = detail::ti_gap_square(hx, k);
    if (r < 1e-24) {
        return 2.0 * std::min<Real>(hx, 1.0);
    }
    return 2.0 * hx * std::sin(k) / std::sqrt(r);
}

inline Real ti_vmax(Real hx) {
    if (!(hx >= 0.0)) {
        throw std::invalid_argument("ti_vmax needs h_x >= 0");
    }
    return hx < 1.0 ? 2.0 * hx : 2.0;
}

/// max over k in [0, pi] of the group velocity, on `samples` grid points.
inline Real ti_vmax_numeric(Real hx, int samples = 200001) {
    if (samples < 2) {
        throw std::invalid_argument("ti_vmax_numeric needs two samples");
    }
    Real best = 0.0;
    for (int i = 0; i < samples; ++i) {
        const Real k = std::numbers::pi * i / (samples - 1);
        best = std::max(best, ti_group_velocity(hx, k));
    }
    return best;
}

/// Lieb-Robinson speed limit for this model class.
inline constexpr Real kLiebRobinsonBound = 12.0 * std::numbers::e;

inline Real scrambling_length(Real v_ee, Real t_star) {
    if (!(v_ee > 0.0) || !(t_star > 0.0)) {
        throw std::invalid_argument("scrambling length needs positive v and t*");
    }
    return v_ee * t_star;
}

namespace detail {

inline std::optional<VelocityFit> try_fit(const std::vector<std::pair<Real, Real>>& pts,
                                          ParityFilter f, const std::string& what,
                                          std::vector<std::string>& notes) {
    try {
        return fit_velocity(pts, f);
    } catch (const std::invalid_argument& e) {
        notes.push_back(what + ": " + e.what());
        return std::nullopt;
    }
}

} // namespace detail

/// Extract every time scale and fit for the given thresholds. No re-simulation.
inline ProtocolAnalysis analyze(const RunRecord& run, const Thresholds& th) {
    th.validate();
    ProtocolAnalysis out;
    out.thresholds = th;
    std::vector<std::pair<Real, Real>> ee_pts;
    std::vector<std::pair<Real, Real>> mi_pts;
    Real even_sum = 0, odd_sum = 0;
    int even_n = 0, odd_n = 0;
    for (const SubsystemRecord& sub : run.subsystems) {
        ScaleRow row;
        row.d = sub.d;
        row.ell = sub.ell;
        row.plateau = plateau_value(sub.s_a);
        row.t_star = extract_t_star(sub.s_a, th.delta_sat);
        row.t_diff = extract_t_diff(sub.s_a, sub.s_b, th.eps_split, th.dwell);
        row.t_mi = extract_t_mi(sub.mutual_info, th.eps_mi, th.dwell);
        row.growth_rate = growth_rate(sub.s_a, row.plateau, row.t_star.time);
        if (row.t_diff.found()) {
            ee_pts.emplace_back(*row.t_diff.time, sub.ell);
            if (sub.ell % 2 == 0) {
                even_sum += *row.t_diff.time;
                ++even_n;
            } else {
                odd_sum += *row.t_diff.time;
                ++odd_n;
            }
        }
        if (row.t_mi.found()) {
            mi_pts.emplace_back(*row.t_mi.time, sub.ell);
        }
        out.rows.push_back(std::move(row));
    }
    out.ee_fit = detail::try_fit(ee_pts, ParityFilter::All, "EE fit", out.notes);
    out.ee_even = detail::try_fit(ee_pts, ParityFilter::Even, "even-ell fit", out.notes);
    out.ee_odd = detail::try_fit(ee_pts, ParityFilter::Odd, "odd-ell fit", out.notes);
    out.mi_fit = detail::try_fit(mi_pts, ParityFilter::All, "MI fit", out.notes);
    if (even_n > 0) {
        out.mean_t_diff_even = even_sum / even_n;
    }
    if (odd_n > 0) {
        out.mean_t_diff_odd = odd_sum / odd_n;
    }
    if (out.ee_fit && out.ee_fit->slope > 0.0) {
        for (ScaleRow& row : out.rows) {
            if (row.t_star.found() && *row.t_star.time > 0.0) {
                row.xi = scrambling_length(out.ee_fit->slope, *row.t_star.time);
            }
        }
    }
    return out;
}

struct SensitivityCase {
    std::string parameter;
    Real factor = 1.0;
    ProtocolAnalysis analysis;
};

/// Re-extract with each threshold scaled by 0.5 and 1.5 in turn.
inline std::vector<SensitivityCase> threshold_sensitivity(const RunRecord& run,
                                                          const std::vector<Real>& factors = {0.5,
                                                                                              1.5}) {
    std::vector<SensitivityCase> out;
    const Thresholds base = run.config.thresholds;
    for (const char* name : {"delta_sat", "eps_split", "dwell", "eps_mi"}) {
        for (Real f : factors) {
            Thresholds th = base;
            const std::string p = name;
            if (p == "delta_sat") {
                th.delta_sat *= f;
            } else if (p == "eps_split") {
                th.eps_split *= f;
            } else if (p == "dwell") {
                th.dwell = std::max(1, static_cast<int>(std::lround(th.dwell * f)));
            } else {
                th.eps_mi *= f;
            }
            out.push_back({p, f, analyze(run, th)});
        }
    }
    return out;
}

/// Evolve both variants with the N-site bulk spectrum. Each site-0 component
/// of the (N+1)-site state evolves independently because H leaves site 0 alone.
inline RunRecord run_protocol(const ProtocolConfig& cfg) {
    cfg.validate();
    const int n = cfg.bulk_sites();
    const int l = n + 1;
    const DenseOperator h = build_hamiltonian(cfg.bulk);
    const SpectralDecomposition spec = eigendecompose(h, false);

    RunRecord run;
    run.config = cfg;
    run.quality = measure_decomposition(h, spec);
    enforce_decomposition_contract(h, run.quality);
    run.t = uniform_grid(cfg.dt, cfg.t_max);
    const std::size_t nt = run.t.size();

    const StateVector bulk0 = product_state(cfg.bulk_initial, n);
    const StateVector psi_a = prepare_initial_state(InitialVariant::A, bulk0);
    const StateVector psi_b = prepare_initial_state(InitialVariant::B, bulk0);
    const Eigen::Index dim = spec.dim();
    Eigen::MatrixXcd comps(dim, 4);
    for (Eigen::Index b = 0; b < dim; ++b) {
        const auto u = static_cast<std::uint64_t>(b) << 1;
        comps(b, 0) = psi_a[u];
        comps(b, 1) = psi_a[u | 1];
        comps(b, 2) = psi_b[u];
        comps(b, 3) = psi_b[u | 1];
    }
    Eigen::MatrixXcd coeffs(dim, 4);
    coeffs.real() = spec.modes.transpose() * comps.real();
    coeffs.imag() = spec.modes.transpose() * comps.imag();

    run.site0_entropy.t = run.t;
    run.site0_entropy.y.assign(nt, 0.0);
    for (int d : cfg.d_list) {
        SubsystemRecord sub;
        sub.d = d;
        sub.ell = n - d;
        for (TimeSeries* s : {&sub.s_a, &sub.s_b, &sub.mutual_info}) {
            s->t = run.t;
            s->y.assign(nt, 0.0);
        }
        run.subsystems.push_back(std::move(sub));
    }
    std::vector<Real> norm_err(nt, 0.0);
    const SiteSubset site0{0};

    evolve_columns_parallel(spec, coeffs, run.t, cfg.threads,
                            [&](std::size_t k, const Eigen::MatrixXcd& states) {
                                StateVector a(l), b(l);
                                for (Eigen::Index i = 0; i < dim; ++i) {
                                    const auto u = static_cast<std::uint64_t>(i) << 1;
                                    a[u] = states(i, 0);
                                    a[u | 1] = states(i, 1);
                                    b[u] = states(i, 2);
                                    b[u | 1] = states(i, 3);
                                }
                                norm_err[k] = std::max(std::abs(a.norm() - 1.0),
                                                       std::abs(b.norm() - 1.0));
                                const Real s0 = entanglement_entropy(b, site0, cfg.base);
                                run.site0_entropy.y[k] = s0;
                                for (SubsystemRecord& sub : run.subsystems) {
                                    const SiteSubset r = far_block(n, sub.d);
                                    sub.s_a.y[k] = entanglement_entropy(a, r, cfg.base);
                                    const Real sr = entanglement_entropy(b, r, cfg.base);
                                    sub.s_b.y[k] = sr;
                                    sub.mutual_info.y[k] =
                                        s0 + sr - entanglement_entropy(b, site0 | r, cfg.base);
                                }
                            });
    for (Real e : norm_err) {
        run.max_norm_error = std::max(run.max_norm_error, e);
    }
    if (run.max_norm_error > 1e-10) {
        throw NumericalContractError("norm drift " + std::to_string(run.max_norm_error));
    }
    run.analysis = analyze(run, cfg.thresholds);
    return run;
}

} // namespace entprop
