#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scrap/inhomogeneity.hpp"

using namespace scrap;

namespace {

/// Composite Gauss-Legendre (5 points) on n panels.
template <class F>
double gauss_legendre(F&& f, double a, double b, int panels = 400)
{
    static const double x[] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
    static const double w[] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                               0.2369268850561891};
    const double h = (b - a) / panels;
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h;
        for (int k = 0; k < 5; ++k) s += w[k] * f(c + 0.5 * h * x[k]);
    }
    return 0.5 * h * s;
}

ShootingProblem zt_problem(double A = 0.05, double w = 20.0, double k = 10.0)
{
    ShootingProblem p;
    p.cost.tag = CostTag::ensemble_zt;
    p.cost.zt.A = A;
    p.cost.zt.w = w;
    p.cost.zt.k = k;
    return p;
}

ShootingOptions stark_active_options()
{
    ShootingOptions o;
    o.accept = stark_active();
    return o;
}

} // namespace

TEST(LinearInhom, CostCoefficientMatchesQuadrature)
{
    for (double k : {0.0, 0.01, 0.5, 3.0}) {
        LinearInhom l{k, 0.2, 1.7};
        const double num = gauss_legendre([&](double z) { return std::pow(1.0 + l.K(z), 2); }, l.z_min, l.z_max);
        EXPECT_NEAR(ensemble_cost_coeff_linear(l), num, 1e-12 * num);
    }
}

TEST(LinearInhom, PerturbedStarkScalesLinearly)
{
    LinearInhom l;
    l.k = 0.5;
    const ControlSample base{2.0, 3.0, 0.5, -1.0, true};
    const auto s = perturbed_controls(1.0, base, l);
    EXPECT_DOUBLE_EQ(s.delta, 3.0);
    EXPECT_DOUBLE_EQ(s.omega, 3.0);
    EXPECT_DOUBLE_EQ(s.ddelta_dt, 0.75);
    EXPECT_THROW(perturbed_controls(1.5, base, l), OutOfWindowError);
}

TEST(SpaceTimePerturbation, MomentsMatchQuadrature)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        SpaceTimePerturbation p;
        p.A = U(rng);
        p.w = 40.0 * U(rng);
        p.k = 30.0 * U(rng);
        p.z_min = -1.0 + U(rng);
        p.z_max = p.z_min + 0.1 + 2.0 * U(rng);
        const double t = 100.0 * U(rng);
        const auto m = zt_moments(t, p);
        const double i1 = gauss_legendre([&](double z) { return 1.0 + p.f(t) * p.eps(z); }, p.z_min, p.z_max);
        const double i2 =
            gauss_legendre([&](double z) { return std::pow(1.0 + p.f(t) * p.eps(z), 2); }, p.z_min, p.z_max);
        EXPECT_NEAR(m.I1, i1, 1e-10);
        EXPECT_NEAR(m.I2, i2, 1e-10);
    }
}

TEST(SpaceTimePerturbation, I2RateMatchesFiniteDifference)
{
    SpaceTimePerturbation p;
    const double h = 1e-5;
    for (double t : {3.0, 41.0, 77.0}) {
        const double fd = (zt_moments(t + h, p).I2 - zt_moments(t - h, p).I2) / (2 * h);
        EXPECT_NEAR(zt_moment_I2_rate(t, p), fd, 1e-8);
    }
}

TEST(SpaceTimePerturbation, ValidationBoundsAmplitude)
{
    SpaceTimePerturbation p;
    p.A = 1.5;
    EXPECT_THROW(p.validate(1.0), ConfigError);
    p.A = 0.05;
    p.z_max = p.z_min;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(SpaceTimePerturbation, ZeroAmplitudeLeavesFieldsUntouched)
{
    SpaceTimePerturbation p;
    p.A = 0.0;
    const ControlSample base{1.2, 0.4, 0.1, 0.2, true};
    for (double z : {0.0, 0.3, 1.0}) {
        const auto s = perturbed_controls(z, 17.0, base, p);
        EXPECT_EQ(s.delta, base.delta);
        EXPECT_EQ(s.ddelta_dt, base.ddelta_dt);
    }
    const std::vector<double> zs{0.0, 0.5, 1.0};
    const auto prof = stark_profile_over_z(40.0, 0.3, p, zs);
    EXPECT_EQ(prof[0], prof[1]);
    EXPECT_EQ(prof[1], prof[2]);
}

TEST(Ensemble, LinearSlopeKeepsTransferAbove99Percent)
{
    ShootingProblem prob;
    prob.cost.tag = CostTag::ensemble_linear;
    prob.cost.linear = {0.01, 0.0, 1.0};
    const auto res = solve_shooting(prob, guess_ladder(prob, 0), stark_active_options());
    ASSERT_TRUE(res);
    const auto bundle = ensemble_trajectories(prob, res.value(), std::vector<double>{0.0, 0.5, 1.0}, {});
    ASSERT_EQ(bundle.members.size(), 3u);
    for (const auto& m : bundle.members) EXPECT_GE(m.p2_end, 0.99) << "z = " << m.z;
    EXPECT_NEAR(bundle.members[0].p2_end, 1.0, 1e-6);
}

TEST(Ensemble, ZeroAmplitudeBundleIsIdentical)
{
    auto prob = zt_problem(0.0);
    const auto res = solve_shooting(prob, guess_ladder(prob, 0), stark_active_options());
    ASSERT_TRUE(res);
    const auto bundle = ensemble_trajectories(prob, res.value(), std::vector<double>{0.0, 0.4, 1.0}, {}, 201);
    for (std::size_t i = 0; i < 201; ++i)
        for (int k = 0; k < 3; ++k) {
            EXPECT_EQ(bundle.members[0].trajectory.states[i][k], bundle.members[1].trajectory.states[i][k]);
            EXPECT_EQ(bundle.members[0].trajectory.states[i][k], bundle.members[2].trajectory.states[i][k]);
        }
    EXPECT_EQ(bundle.max_endpoint_spread, 0.0);
}

TEST(Ensemble, OutOfWindowPositionIsRejected)
{
    auto prob = zt_problem();
    const auto res = solve_shooting(prob, guess_ladder(prob, 0), stark_active_options());
    ASSERT_TRUE(res);
    EXPECT_THROW(ensemble_trajectories(prob, res.value(), std::vector<double>{1.5}, {}), OutOfWindowError);
}

TEST(Ensemble, ReferenceMemberReproducesExtremal)
{
    auto prob = zt_problem();
    const auto res = solve_shooting(prob, guess_ladder(prob, 0), stark_active_options());
    ASSERT_TRUE(res);
    const auto bundle = ensemble_trajectories(prob, res.value(), std::vector<double>{prob.cost.z_ref()}, {});
    EXPECT_NEAR(bundle.members[0].p2_end, 1.0, 1e-6);
}

TEST(StabilityRun, ContiguousRunAroundOperatingPoint)
{
    const std::vector<bool> s{false, true, true, true, false, true};
    EXPECT_EQ(stable_run(s, 2), (std::pair<std::size_t, std::size_t>{1, 3}));
    EXPECT_FALSE(stable_run(s, 4).has_value());
    EXPECT_EQ(stable_run(s, 5), (std::pair<std::size_t, std::size_t>{5, 5}));
}

TEST(StabilityAxis, ParseAndAccess)
{
    for (auto a : {StabilityAxis::A, StabilityAxis::k, StabilityAxis::w}) EXPECT_EQ(parse_stability_axis(to_string(a)), a);
    EXPECT_FALSE(parse_stability_axis("x").has_value());
    SpaceTimePerturbation p;
    axis_parameter(p, StabilityAxis::w) = 7.0;
    EXPECT_EQ(p.w, 7.0);
}

TEST(StabilityMap, ZeroAmplitudeRowHasNoVariation)
{
    StabilityOptions opt;
    opt.axis = StabilityAxis::A;
    opt.values = {0.0, 0.05, 0.1};
    opt.z_samples = 11;
    opt.random_restarts = 0;
    const auto m = stability_map(zt_problem(), opt);
    ASSERT_FALSE(m.failed[0]);
    EXPECT_EQ(m.spread[0], 0.0);
    for (std::size_t j = 1; j < m.z_axis.size(); ++j) EXPECT_EQ(m.at(0, j), m.at(0, 0));
    EXPECT_EQ(m.operating_index, 1u);
    EXPECT_GT(m.spread[2], m.spread[1]);
}

TEST(StabilityMap, ZeroThresholdLeavesNoAcceptanceRegion)
{
    StabilityOptions opt;
    opt.axis = StabilityAxis::A;
    opt.values = {0.0, 0.05};
    opt.z_samples = 5;
    opt.random_restarts = 0;
    opt.threshold_fraction = 0.0;
    const auto m = stability_map(zt_problem(), opt);
    EXPECT_FALSE(m.acceptance_interval().has_value());
    EXPECT_FALSE(m.interior());
}

TEST(StabilityMap, RejectsBadOptions)
{
    StabilityOptions opt;
    EXPECT_THROW(stability_map(zt_problem(), opt), ConfigError);
    opt.values = {0.05};
    opt.probe_fraction = 1.5;
    EXPECT_THROW(stability_map(zt_problem(), opt), ConfigError);
    ShootingProblem energy;
    opt.probe_fraction = 0.4;
    EXPECT_THROW(stability_map(energy, opt), ConfigError);
}
