#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "entprop/thermalization.hpp"
#include "oracles.hpp"

using namespace entprop;

TEST(TotalMagnetization, Examples) {
    EXPECT_DOUBLE_EQ(total_magnetization(neel_state(6), SiteSubset::all(6)), 0.0);
    EXPECT_DOUBLE_EQ(total_magnetization(product_state({0}, 5), SiteSubset::all(5)), 5.0);
    std::mt19937_64 rng(4);
    const StateVector v = oracle::random_state(5, rng);
    const SiteSubset s{1, 2, 3, 4};
    EXPECT_NEAR(total_magnetization(v, s), expectation(v, total_sz_operator(5, s)), 1e-13);
}

class SmallChain : public ::testing::Test {
  protected:
    void SetUp() override {
        h = build_hamiltonian(ModelParams::chaotic_ising(6));
        spec = eigendecompose(h);
        mz = total_sz_operator(6, SiteSubset::all(6));
    }
    DenseOperator h;
    SpectralDecomposition spec;
    DenseOperator mz;
};

TEST_F(SmallChain, DiagonalAverageOfEigenstates) {
    const StateVector k(6, spec.modes.col(10).cast<Complex>());
    const Real want = spec.modes.col(10).dot(mz.elements() * spec.modes.col(10));
    EXPECT_NEAR(diagonal_average(spec, overlaps(spec, k), mz), want, 1e-12);

    const Eigen::VectorXcd two = (spec.modes.col(3) + spec.modes.col(40)).cast<Complex>() / std::sqrt(2.0);
    const Eigen::VectorXd per = eigenstate_expectations(spec, mz);
    EXPECT_NEAR(diagonal_average(spec, overlaps(spec, StateVector(6, two)), mz), 0.5 * (per[3] + per[40]),
                1e-12);
}

TEST_F(SmallChain, DenseAndDiagonalPathsAgree) {
    const Eigen::VectorXd a = eigenstate_expectations(spec, mz);
    const Eigen::VectorXd b = eigenstate_expectations(spec, sigma_z_sum_diagonal(6, SiteSubset::all(6)));
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(SmallChain, DiagonalAverageInvariantUnderPhaseAndOrdering) {
    std::mt19937_64 rng(12);
    const StateVector v = oracle::random_state(6, rng);
    const StateVector w(6, v.amplitudes() * std::polar(1.0, 0.9));
    const Real d0 = diagonal_average(spec, overlaps(spec, v), mz);
    EXPECT_NEAR(diagonal_average(spec, overlaps(spec, w), mz), d0, 1e-12);

    SpectralDecomposition rev = spec;
    rev.energies = spec.energies.reverse();
    rev.modes = spec.modes(Eigen::all, Eigen::seq(spec.dim() - 1, 0, Eigen::fix<-1>));
    EXPECT_NEAR(diagonal_average(rev, overlaps(rev, v), mz), d0, 1e-12);
}

TEST_F(SmallChain, MicrocanonicalLimits) {
    const Eigen::VectorXd per = eigenstate_expectations(spec, mz);
    const ShellAverage all = microcanonical_average(spec, per, 0.0, 1e9);
    EXPECT_EQ(all.shell_count, spec.dim());
    EXPECT_NEAR(all.value, mz.elements().trace() / static_cast<Real>(spec.dim()), 1e-12);

    Eigen::Index n = 17;
    Real gap = 1e9;
    for (Eigen::Index m = 0; m < spec.dim(); ++m) {
        if (m != n) {
            gap = std::min(gap, std::abs(spec.energies[m] - spec.energies[n]));
        }
    }
    const ShellAverage one = microcanonical_average(spec, per, spec.energies[n], 0.5 * gap);
    EXPECT_EQ(one.shell_count, 1);
    EXPECT_NEAR(one.value, per[n], 1e-12);

    const ShellAverage none = microcanonical_average(spec, per, 1e6, 0.2);
    EXPECT_EQ(none.shell_count, 0);
    EXPECT_TRUE(std::isnan(none.value));
    EXPECT_THROW(microcanonical_average(spec, per, 0.0, 0.0), std::invalid_argument);
}

TEST_F(SmallChain, ShellGrowsWithWidth) {
    const Eigen::VectorXd per = eigenstate_expectations(spec, mz);
    int last = 0;
    for (Real de = 0.05; de < 10.0; de *= 1.5) {
        const int c = microcanonical_average(spec, per, 0.3, de).shell_count;
        EXPECT_GE(c, last);
        last = c;
    }
}

TEST(DiagonalEnsemble, MatchesLongTimeAverage) {
    const int n = 8;
    const DenseOperator h = build_hamiltonian(ModelParams::chaotic_ising(n));
    const SpectralDecomposition spec = eigendecompose(h);
    const StateVector psi = neel_state(n);
    const OverlapCoefficients a = overlaps(spec, psi);
    const Eigen::VectorXd mz = sigma_z_sum_diagonal(n, SiteSubset::all(n));
    TimeSeries s;
    s.t = uniform_grid(0.05, 200.0);
    s.y.resize(s.t.size());
    evolve_columns(spec, a.a, s.t, [&](std::size_t k, const Eigen::MatrixXcd& st) {
        s.y[k] = st.col(0).cwiseAbs2().dot(mz);
    });
    const Real diag = diagonal_average(a, eigenstate_expectations(spec, mz));
    EXPECT_NEAR(long_time_average(s), diag, 0.05);
}

TEST(RunThermalization, SmallRunIsConsistent) {
    ThermalizationConfig cfg;
    cfg.model = ModelParams::extended_chaotic_ising(8);
    cfg.initial = neel_bits(8);
    cfg.t_max = 4.0;
    const ThermalizationRun run = run_thermalization(cfg);
    const auto& mz = run.magnetization.series;
    ASSERT_EQ(mz.size(), 201u);
    EXPECT_NEAR(mz.y[0], 0.0, 1e-14);
    EXPECT_NEAR(run.half_chain_entropy.y[0], 0.0, 1e-14);
    EXPECT_GT(run.magnetization.shell_count, 0);
    EXPECT_NEAR(run.magnetization.e0, expectation(neel_state(8), build_hamiltonian(cfg.model)), 1e-14);

    ThermalizationConfig fine = cfg;
    fine.dt = cfg.dt / 2;
    const ThermalizationRun r2 = run_thermalization(fine);
    for (std::size_t k = 0; k < mz.size(); ++k) {
        EXPECT_NEAR(r2.magnetization.series.y[2 * k], mz.y[k], 1e-6);
        EXPECT_NEAR(r2.half_chain_entropy.y[2 * k], run.half_chain_entropy.y[k], 1e-6);
    }
}

TEST(RunThermalization, ThreadCountDoesNotChangeResults) {
    ThermalizationConfig cfg;
    cfg.model = ModelParams::chaotic_ising(7);
    cfg.initial = neel_bits(7);
    cfg.t_max = 3.0;
    const ThermalizationRun a = run_thermalization(cfg);
    cfg.threads = 3;
    const ThermalizationRun b = run_thermalization(cfg);
    EXPECT_EQ(a.magnetization.series.y, b.magnetization.series.y);
    EXPECT_EQ(a.half_chain_entropy.y, b.half_chain_entropy.y);
}
