#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "scrap/core_model.hpp"
#include "scrap/integrator.hpp"

using namespace scrap;

namespace {

ControlSample rotating(double rho, double w, double t)
{
    // Delta = rho sin(w t), Omega = rho cos(w t)
    return {rho * std::sin(w * t), rho * std::cos(w * t), rho * w * std::cos(w * t), -rho * w * std::sin(w * t), true};
}

} // namespace

TEST(PulseShapes, StarkPeakValue)
{
    const PulseParams p;
    EXPECT_NEAR(gaussian_stark(p.t_s, p), -1.0 + 100.0 / (std::sqrt(2.0 * std::numbers::pi) * 10.0), 1e-14);
    EXPECT_NEAR(gaussian_stark(-1e4, p), -p.S0, 1e-14);
}

TEST(PulseShapes, PumpAreaEqualsOmega0)
{
    const PulseParams p;
    const auto ts = ode::uniform_grid(0.0, 100.0, 4001);
    std::vector<double> v;
    for (double t : ts) v.push_back(gaussian_pump(t, p));
    EXPECT_NEAR(ode::integrate_samples(v, 0.0, 100.0), p.Omega0, 1e-6);
}

TEST(PulseShapes, RatesMatchFiniteDifferences)
{
    const PulseParams p;
    for (double t : {20.0, 48.0, 55.5, 70.0}) {
        const double h = 1e-5;
        EXPECT_NEAR(gaussian_stark_rate(t, p), (gaussian_stark(t + h, p) - gaussian_stark(t - h, p)) / (2 * h), 1e-8);
        EXPECT_NEAR(gaussian_pump_rate(t, p), (gaussian_pump(t + h, p) - gaussian_pump(t - h, p)) / (2 * h), 1e-8);
    }
}

TEST(PulseShapes, ZeroStarkWidthIsRejected)
{
    PulseParams p;
    p.sigma_s = 0.0;
    EXPECT_NO_THROW(p.validate());
    EXPECT_THROW(gaussian_stark(50.0, p), DegenerateWidthError);
}

TEST(PulseParamsValidation, RejectsNonPhysicalValues)
{
    PulseParams p;
    p.S0 = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.sigma_p = -1.0;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(ReducedCoordinates, RoundTrip)
{
    const PulseParams p;
    const auto rc = to_reduced(p);
    EXPECT_NEAR(rc.tau, 0.3, 1e-15);
    EXPECT_NEAR(rc.sigma, 2.0, 1e-15);
    const auto q = with_reduced(p, {0.07, 1.2});
    EXPECT_NEAR(q.t_s, 53.5, 1e-12);
    EXPECT_NEAR(q.sigma_s, 6.0, 1e-12);
}

TEST(MixingAngle, LimitsAndResonance)
{
    EXPECT_NEAR(mixing_angle({1.0, 0.0}), 0.0, 1e-15);
    EXPECT_NEAR(mixing_angle({0.0, 1.0}), std::numbers::pi / 4, 1e-15);
    EXPECT_NEAR(mixing_angle({-1.0, 1e-300}), std::numbers::pi / 2, 1e-15);
    EXPECT_THROW(mixing_angle({0.0, 0.0}), ConicalIntersectionError);
}

TEST(MixingAngle, AdiabaticVectorFollowsRotationAxis)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 200; ++i) {
        const ControlSample s{u(rng), std::abs(u(rng)) + 1e-3};
        const auto r = adiabatic_bloch(mixing_angle(s));
        const Vec3 w = bloch_axis(s);
        const double wn = norm(w);
        EXPECT_NEAR(norm(r), 1.0, 1e-14);
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(r[k], w[k] / wn, 1e-12);
    }
}

TEST(AdiabaticEnergies, GapAndDegeneracy)
{
    const auto e = adiabatic_energies({3.0, 4.0});
    EXPECT_NEAR(e.plus - e.minus, 5.0, 1e-14);
    EXPECT_NEAR(e.plus + e.minus, 3.0, 1e-14);
    EXPECT_FALSE(e.degenerate);
    EXPECT_TRUE(adiabatic_energies({0.0, 0.0}).degenerate);
}

TEST(Adiabaticity, ConstantFieldsAreAdiabatic)
{
    EXPECT_EQ(adiabaticity({0.3, 0.7, 0.0, 0.0, true}), 0.0);
}

TEST(Adiabaticity, UniformRotationOracle)
{
    // |Omega dDelta - dOmega Delta| = rho^2 w, so AD = w / (2 rho)
    for (double rho : {0.1, 1.0, 7.0})
        for (double w : {0.01, 0.5, 3.0})
            EXPECT_NEAR(adiabaticity(rotating(rho, w, 0.37)), w / (2.0 * rho), 1e-12 * w / rho);
}

TEST(Adiabaticity, NeedsRatesAndNonzeroField)
{
    EXPECT_THROW(adiabaticity({1.0, 1.0}), NotApplicableError);
    EXPECT_THROW(adiabaticity({0.0, 0.0, 1.0, 1.0, true}), ConicalIntersectionError);
}

TEST(Populations, PolesAndSum)
{
    EXPECT_DOUBLE_EQ(populations(south_pole).p1, 1.0);
    EXPECT_DOUBLE_EQ(populations(north_pole).p2, 1.0);
    const auto p = populations({0.6, 0.0, 0.8});
    EXPECT_NEAR(p.p1 + p.p2, 1.0, 1e-15);
    EXPECT_NEAR(p.p2, 0.9, 1e-15);
}

TEST(BlochRhs, PreservesNorm)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (int i = 0; i < 100; ++i) {
        const ControlSample s{n(rng), n(rng)};
        const BlochVector r{n(rng), n(rng), n(rng)};
        EXPECT_NEAR(dot(r, bloch_rhs(s, r)), 0.0, 1e-12);
    }
}
