#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "entprop/propagation.hpp"
#include "oracles.hpp"

using namespace entprop;

namespace {

TimeSeries make_series(Real dt, Real t_max, const std::function<Real(Real)>& f) {
    TimeSeries s;
    s.t = uniform_grid(dt, t_max);
    for (Real t : s.t) {
        s.y.push_back(f(t));
    }
    return s;
}

ProtocolConfig small_config(const ModelParams& p, std::vector<int> d_list, Real t_max) {
    ProtocolConfig cfg;
    cfg.bulk = p;
    cfg.bulk_initial = neel_bits(p.num_sites);
    cfg.d_list = std::move(d_list);
    cfg.t_max = t_max;
    return cfg;
}

} // namespace

TEST(TimeGrid, UniformAndValidated) {
    const auto t = uniform_grid(0.02, 1.0);
    ASSERT_EQ(t.size(), 51u);
    EXPECT_DOUBLE_EQ(t[50], 1.0);
    EXPECT_THROW(uniform_grid(0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(uniform_grid(0.1, -1.0), std::invalid_argument);
    TimeSeries bad{{0.0, 0.1, 0.3}, {1, 2, 3}};
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(ExtractTStar, SyntheticRamp) {
    const TimeSeries s = make_series(0.02, 8.0, [](Real t) { return std::min(t, 4.0); });
    const Extraction e = extract_t_star(s, 0.05);
    ASSERT_TRUE(e.found());
    EXPECT_NEAR(*e.time, 3.8, 1e-12);
    const TimeSeries c = make_series(0.02, 2.0, [](Real) { return 0.7; });
    EXPECT_DOUBLE_EQ(*extract_t_star(c, 0.05).time, 0.0);
}

TEST(ExtractTDiff, SyntheticSplit) {
    const TimeSeries a = make_series(0.02, 6.0, [](Real) { return 1.0; });
    const TimeSeries b = make_series(0.02, 6.0, [](Real t) { return t < 3.0 ? 1.0 : 1.0 + (t - 3.0); });
    const Extraction e = extract_t_diff(a, b, 0.03, 10);
    ASSERT_TRUE(e.found());
    EXPECT_GT(*e.time, 3.0);
    EXPECT_NEAR(*e.time, 3.04, 1e-12);
    const Extraction same = extract_t_diff(a, a, 0.02, 10);
    EXPECT_FALSE(same.found());
    EXPECT_FALSE(same.reason.empty());
}

TEST(ExtractTDiff, DwellRejectsTransientBlips) {
    const TimeSeries a = make_series(0.02, 4.0, [](Real) { return 0.0; });
    const TimeSeries b = make_series(0.02, 4.0, [](Real t) {
        if (t > 1.0 && t < 1.1) return 1.0;
        return t >= 2.5 ? 1.0 : 0.0;
    });
    EXPECT_NEAR(*extract_t_diff(a, b, 0.5, 10).time, 2.5, 1e-12);
}

TEST(ExtractTMi, StepAndZero) {
    const TimeSeries zero = make_series(0.02, 4.0, [](Real) { return 0.0; });
    EXPECT_FALSE(extract_t_mi(zero, 0.01, 10).found());
    const TimeSeries step = make_series(0.02, 4.0, [](Real t) { return t >= 2.0 - 1e-12 ? 0.5 : 0.0; });
    EXPECT_NEAR(*extract_t_mi(step, 0.01, 10).time, 2.0, 1e-12);
}

TEST(Recurrence, BandReentry) {
    const TimeSeries flat = make_series(0.02, 10.0, [](Real t) { return std::min(t, 1.0); });
    EXPECT_FALSE(detect_recurrence(flat, 0.1, 10).found);
    const TimeSeries dip = make_series(0.02, 10.0, [](Real t) {
        if (t < 1.0) return t;
        if (t > 3.0 && t < 4.0) return 0.3;
        return 1.0;
    });
    const RecurrenceInfo r = detect_recurrence(dip, 0.1, 10);
    EXPECT_TRUE(r.found);
    EXPECT_NEAR(*r.t_exit, 3.02, 1e-9);
    EXPECT_NEAR(*r.t_reenter, 4.0, 1e-9);
}

TEST(FitVelocity, ExactLineAndParity) {
    std::vector<std::pair<Real, Real>> pts;
    for (int ell = 4; ell <= 9; ++ell) {
        pts.emplace_back(0.5 * ell, ell);
    }
    const VelocityFit f = fit_velocity(pts);
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(f.intercept, 0.0, 1e-12);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_NEAR(f.slope_through_origin, 2.0, 1e-12);
    EXPECT_EQ(fit_velocity(pts, ParityFilter::Even).points.size(), 3u);
    EXPECT_EQ(fit_velocity(pts, ParityFilter::Odd).points.size(), 3u);
    EXPECT_THROW(fit_velocity({{1.0, 4.0}}), std::invalid_argument);
    EXPECT_THROW(fit_velocity({{1.0, 4.0}, {1.0, 5.0}}), std::invalid_argument);
    EXPECT_THROW(fit_velocity({{1.0, 4.0}, {2.0, 5.0}}, ParityFilter::Even), std::invalid_argument);
}

TEST(FitVelocity, InterceptAndResidual) {
    const VelocityFit f = fit_velocity({{1.0, 4.0}, {2.0, 5.5}, {3.0, 8.0}});
    // Closed-form least squares: slope 2, intercept 11/6, R^2 = 1 - (1/6)/(8.1667).
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(f.intercept, 11.0 / 6.0, 1e-12);
    EXPECT_NEAR(f.r_squared, 1.0 - (1.0 / 6.0) / (49.0 / 6.0), 1e-12);
}

TEST(TiOracle, DispersionValues) {
    EXPECT_NEAR(ti_dispersion(0.3, 0.0), 2 * 0.7, 1e-15);
    EXPECT_NEAR(ti_dispersion(1.0, std::numbers::pi), 4.0, 1e-15);
    for (Real k : {-3.0, 0.1, 1.0, 2.5, 7.0}) {
        EXPECT_DOUBLE_EQ(ti_dispersion(0.0, k), 2.0);
        EXPECT_GE(ti_dispersion(1.3, k), 0.0);
    }
}

TEST(TiOracle, MaximumGroupVelocity) {
    EXPECT_DOUBLE_EQ(ti_vmax(0.5), 1.0);
    EXPECT_DOUBLE_EQ(ti_vmax(1.5), 2.0);
    EXPECT_DOUBLE_EQ(ti_vmax(1.0), 2.0);
    EXPECT_THROW(ti_vmax(-0.1), std::invalid_argument);
    for (Real h : {0.1, 0.4, 0.5, 0.8, 1.0, 1.25, 1.5, 3.0}) {
        EXPECT_NEAR(ti_vmax_numeric(h), ti_vmax(h), 1e-6) << "h=" << h;
    }
}

TEST(TiOracle, GroupVelocityIsDerivative) {
    for (Real h : {0.4, 1.25}) {
        for (Real k = 0.1; k < 3.0; k += 0.3) {
            const Real fd = (ti_dispersion(h, k + 1e-6) - ti_dispersion(h, k - 1e-6)) / 2e-6;
            EXPECT_NEAR(ti_group_velocity(h, k), fd, 1e-7);
        }
    }
}

TEST(ScramblingLength, Product) {
    EXPECT_DOUBLE_EQ(scrambling_length(2.0, 1.5), 3.0);
    EXPECT_THROW(scrambling_length(0.0, 1.0), std::invalid_argument);
    EXPECT_NEAR(kLiebRobinsonBound, 32.619381941508, 1e-9);
}

TEST(PrepareInitialState, Variants) {
    const StateVector bulk = neel_state(4);
    const StateVector a = prepare_initial_state(InitialVariant::A, bulk);
    const StateVector b = prepare_initial_state(InitialVariant::B, bulk);
    EXPECT_EQ(a.num_sites(), 5);
    EXPECT_NEAR(entanglement_entropy(a, SiteSubset{0}), 0.0, 1e-15);
    EXPECT_NEAR(entanglement_entropy(b, SiteSubset{0}), 1.0, 1e-14);
    // Neel bulk: bulk site 1 up, so b = (|00> + |11>)/sqrt2 on sites 0,1 times |0 1 0> on 2..4.
    const std::uint64_t rest = neel_bits(4).bits << 1;
    EXPECT_NEAR(b[rest].real(), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(b[rest | 0b11].real(), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(b.norm(), 1.0, 1e-15);
}

TEST(BulkEvolutionHamiltonian, DecouplesSiteZero) {
    const ModelParams p = ModelParams::extended_chaotic_ising(5);
    const DenseOperator h = bulk_evolution_hamiltonian(p);
    EXPECT_EQ(h.num_sites(), 6);
    for (Eigen::Index r = 0; r < h.dim(); ++r) {
        for (Eigen::Index c = 0; c < h.dim(); ++c) {
            if (((r ^ c) & 1) != 0) {
                EXPECT_EQ(h.elements()(r, c), 0.0);
            }
        }
    }
    const Eigen::MatrixXd sector = h.elements()(Eigen::seq(0, h.dim() - 1, 2), Eigen::seq(0, h.dim() - 1, 2));
    EXPECT_EQ((sector - build_hamiltonian(p).elements()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE((h.elements() - oracle::hamiltonian(p, 1, 6)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RunProtocol, MatchesDenseAttachedRegisterEvolution) {
    const ProtocolConfig cfg = small_config(ModelParams::chaotic_ising(5), {1, 2, 3}, 3.0);
    const RunRecord run = run_protocol(cfg);
    const DenseOperator h = bulk_evolution_hamiltonian(cfg.bulk);
    const SpectralDecomposition spec = eigendecompose(h);
    const StateVector b0 = prepare_initial_state(InitialVariant::B, neel_state(5));
    const StateVector a0 = prepare_initial_state(InitialVariant::A, neel_state(5));
    for (std::size_t k = 0; k < run.t.size(); k += 13) {
        const StateVector a = evolve(spec, overlaps(spec, a0), run.t[k]);
        const StateVector b = evolve(spec, overlaps(spec, b0), run.t[k]);
        for (const SubsystemRecord& sub : run.subsystems) {
            const SiteSubset r = far_block(5, sub.d);
            EXPECT_NEAR(sub.s_a.y[k], entanglement_entropy(a, r), 1e-9);
            EXPECT_NEAR(sub.s_b.y[k], entanglement_entropy(b, r), 1e-9);
            EXPECT_NEAR(sub.mutual_info.y[k], mutual_information(b, SiteSubset{0}, r), 1e-9);
        }
    }
}

TEST(RunProtocol, VariantAEqualsBulkOnlySimulation) {
    const ModelParams p = ModelParams::extended_chaotic_ising(6);
    const ProtocolConfig cfg = small_config(p, {1, 2, 3, 4}, 4.0);
    const RunRecord run = run_protocol(cfg);
    const Eigen::MatrixXd h = oracle::hamiltonian(p, 0, 6);
    const StateVector psi = neel_state(6);
    for (std::size_t k = 0; k < run.t.size(); k += 20) {
        const StateVector v(6, oracle::evolve(h, psi.amplitudes(), run.t[k]));
        for (const SubsystemRecord& sub : run.subsystems) {
            EXPECT_NEAR(sub.s_a.y[k], entanglement_entropy(v, SiteSubset::block(6 - sub.d, sub.d)), 1e-9);
        }
    }
}

TEST(RunProtocol, Invariants) {
    const ProtocolConfig cfg = small_config(ModelParams::chaotic_ising(8), {1, 2, 3, 4}, 10.0);
    const RunRecord run = run_protocol(cfg);
    EXPECT_LE(run.max_norm_error, 1e-10);
    for (Real s0 : run.site0_entropy.y) {
        EXPECT_NEAR(s0, 1.0, 1e-9);
    }
    for (const SubsystemRecord& sub : run.subsystems) {
        EXPECT_EQ(sub.ell, 8 - sub.d);
        EXPECT_EQ(sub.s_a.t, run.t);
        EXPECT_NEAR(sub.s_a.y[0], 0.0, 1e-15);
        EXPECT_NEAR(sub.s_b.y[0], 0.0, 1e-15);
        for (Real mi : sub.mutual_info.y) {
            EXPECT_GE(mi, -1e-9);
        }
    }
    const Thresholds& th = cfg.thresholds;
    for (std::size_t i = 0; i < run.subsystems.size(); ++i) {
        const SubsystemRecord& sub = run.subsystems[i];
        const ScaleRow& row = run.analysis.rows[i];
        ASSERT_TRUE(row.t_diff.found()) << "d=" << sub.d;
        const Real cut = *row.t_diff.time - th.dwell * cfg.dt;
        for (std::size_t k = 0; k < run.t.size() && run.t[k] < cut; ++k) {
            EXPECT_LE(std::abs(sub.s_b.y[k] - sub.s_a.y[k]), th.eps_split);
        }
    }
    for (std::size_t i = 1; i < run.analysis.rows.size(); ++i) {
        EXPECT_LE(*run.analysis.rows[i].t_diff.time, *run.analysis.rows[i - 1].t_diff.time);
    }
}

TEST(RunProtocol, EciVolumeLawTrend) {
    const ProtocolConfig cfg = small_config(ModelParams::extended_chaotic_ising(10), {1, 2, 3, 4}, 10.0);
    const RunRecord run = run_protocol(cfg);
    for (std::size_t i = 1; i < run.analysis.rows.size(); ++i) {
        EXPECT_GE(run.analysis.rows[i].plateau, run.analysis.rows[i - 1].plateau);
    }
}

TEST(RunProtocol, DeterministicAcrossThreadCounts) {
    ProtocolConfig cfg = small_config(ModelParams::chaotic_ising(6), {1, 2}, 3.0);
    const RunRecord a = run_protocol(cfg);
    cfg.threads = 4;
    const RunRecord b = run_protocol(cfg);
    for (std::size_t i = 0; i < a.subsystems.size(); ++i) {
        EXPECT_EQ(a.subsystems[i].s_a.y, b.subsystems[i].s_a.y);
        EXPECT_EQ(a.subsystems[i].s_b.y, b.subsystems[i].s_b.y);
        EXPECT_EQ(a.subsystems[i].mutual_info.y, b.subsystems[i].mutual_info.y);
    }
}

TEST(RunProtocol, RejectsBadConfigs) {
    ProtocolConfig cfg = small_config(ModelParams::chaotic_ising(6), {0}, 1.0);
    EXPECT_THROW(run_protocol(cfg), std::invalid_argument);
    cfg.d_list = {6};
    EXPECT_THROW(run_protocol(cfg), std::invalid_argument);
    cfg.d_list = {2};
    cfg.thresholds.eps_split = 0.0;
    EXPECT_THROW(run_protocol(cfg), std::invalid_argument);
}

TEST(Sensitivity, ScalesEachThreshold) {
    const ProtocolConfig cfg = small_config(ModelParams::chaotic_ising(6), {1, 2, 3}, 6.0);
    const RunRecord run = run_protocol(cfg);
    const auto cases = threshold_sensitivity(run);
    ASSERT_EQ(cases.size(), 8u);
    EXPECT_EQ(cases[4].parameter, "dwell");
    EXPECT_EQ(cases[4].analysis.thresholds.dwell, 5);
    EXPECT_EQ(cases[5].analysis.thresholds.dwell, 15);
    EXPECT_DOUBLE_EQ(cases[0].analysis.thresholds.delta_sat, 0.05);
}
