// N = 14 thermalization contrast (16384-dim decompositions). Opt-in.

#include <cmath>

#include <gtest/gtest.h>

#include "entprop/thermalization.hpp"

using namespace entprop;

TEST(SlowThermalization, EciCloserToMicrocanonicalThanCiAtFourteenSites) {
    const auto gap = [](const ModelParams& p) {
        ThermalizationConfig cfg;
        cfg.model = p;
        cfg.initial = neel_bits(14);
        cfg.t_max = 2.0;
        const ThermalizationRun run = run_thermalization(cfg);
        return std::abs(run.magnetization.diagonal_avg - run.magnetization.microcanonical_avg);
    };
    const Real eci = gap(ModelParams::extended_chaotic_ising(14));
    const Real ci = gap(ModelParams::chaotic_ising(14));
    RecordProperty("gap_eci", std::to_string(eci));
    RecordProperty("gap_ci", std::to_string(ci));
    EXPECT_LT(eci, ci);
}
