#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "scrap/pmp.hpp"

using namespace scrap;

namespace {

constexpr double pi = std::numbers::pi;

ShootingProblem energy_problem()
{
    ShootingProblem p;
    p.cost.tag = CostTag::energy;
    return p;
}

std::size_t sign_changes(const std::vector<double>& v)
{
    std::size_t n = 0;
    for (std::size_t i = 1; i < v.size(); ++i) n += (v[i] > 0.0) != (v[i - 1] > 0.0) ? 1 : 0;
    return n;
}

} // namespace

TEST(CostTags, RoundTrip)
{
    for (auto tag : {CostTag::energy, CostTag::fixed_pump_energy, CostTag::ensemble_linear, CostTag::ensemble_zt,
                     CostTag::mixed_adiabatic})
        EXPECT_EQ(parse_cost_tag(to_string(tag)), tag);
    EXPECT_FALSE(parse_cost_tag("bogus").has_value());
}

TEST(PseudoHamiltonian, EnergyFeedbackMaximises)
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n;
    CostFunctional cost;
    for (int trial = 0; trial < 50; ++trial) {
        const BlochVector r = [&] {
            Vec3 v{n(rng), n(rng), n(rng)};
            return (1.0 / norm(v)) * v;
        }();
        const Vec3 p{n(rng), n(rng), n(rng)};
        const auto best = optimal_fields_energy(cross(r, p));
        const double h_best = pseudo_hamiltonian(r, p, best, cost);
        for (int k = 0; k < 20; ++k) {
            const ControlSample other{best.delta + 0.3 * n(rng), best.omega + 0.3 * n(rng)};
            EXPECT_LE(pseudo_hamiltonian(r, p, other, cost), h_best + 1e-14);
        }
    }
}

TEST(PseudoHamiltonian, FixedPumpStarkFeedbackMaximises)
{
    CostFunctional cost;
    cost.tag = CostTag::fixed_pump_energy;
    const BlochVector r{0.6, 0.0, -0.8};
    const Vec3 p{0.2, -0.4, 0.9};
    const double omega = gaussian_pump(45.0, cost.pump);
    const double d = optimal_stark_fixed_pump(cross(r, p));
    const double h = pseudo_hamiltonian(r, p, {d, omega}, cost);
    for (double e : {-0.1, -0.01, 0.01, 0.1}) EXPECT_LT(pseudo_hamiltonian(r, p, {d + e, omega}, cost), h);
}

TEST(EnergyExtremal, PiPulseOracle)
{
    // p(t_i) = (0, pi/100, 0) gives l = (pi/100, 0, 0): a constant resonant pi pulse.
    const auto prob = energy_problem();
    const auto traj = integrate_from_unknowns(prob, {0.0, pi / 100.0, 0.0});
    const auto& c = *traj.controls;
    for (const auto& s : c) {
        EXPECT_NEAR(s.omega, pi / 100.0, 1e-12);
        EXPECT_NEAR(s.delta, 0.0, 1e-12);
    }
    EXPECT_NEAR(traj.states.back()[2], 1.0, 1e-9);
    EXPECT_NEAR(evaluate_cost(traj, prob.cost), pi * pi / 100.0, 1e-9);
}

TEST(EnergyExtremal, StarkShapeIsRotationOfInitialCostate)
{
    // From the south pole l3(0) = 0, so Omega = rho cos(l2 t), Delta = rho sin(l2 t).
    const auto prob = energy_problem();
    const Vec3 p0{-0.02, 0.05, 0.03};
    const auto traj = integrate_from_unknowns(prob, {p0[0], p0[1], p0[2]});
    const Vec3 l0 = cross(south_pole, p0);
    const double rho = std::hypot(l0[0], l0[2]);
    for (std::size_t i = 0; i < traj.size(); i += 100) {
        const double t = traj.times[i];
        EXPECT_NEAR((*traj.controls)[i].omega, rho * std::cos(l0[1] * t), 1e-9);
        EXPECT_NEAR((*traj.controls)[i].delta, rho * std::sin(l0[1] * t), 1e-9);
    }
}

TEST(EnergyExtremal, ConservationOnRandomCostates)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> mag(std::log(0.05), std::log(2.0));
    const auto prob = energy_problem();
    for (int trial = 0; trial < 10; ++trial) {
        Vec3 p{n(rng), n(rng), n(rng)};
        p = (std::exp(mag(rng)) / norm(p)) * p;
        const auto traj = integrate_from_unknowns(prob, {p[0], p[1], p[2]});
        const auto rep = conservation_report(traj);
        const double scale = std::max(rep.lsq0, 1e-12);
        EXPECT_LT(rep.norm_drift, 1e-8);
        EXPECT_LT(*rep.H_drift / scale, 1e-6);
        EXPECT_LT(*rep.lsq_drift / scale, 1e-6);
        EXPECT_LT(*rep.l2_drift / std::sqrt(scale), 1e-6);
        EXPECT_LT(*rep.p_norm_drift / rep.p_norm0, 1e-6);
    }
}

TEST(GuessLadder, DeterministicAndSeeded)
{
    const auto a = costate_guess_ladder(8, 42);
    const auto b = costate_guess_ladder(8, 42);
    const auto c = costate_guess_ladder(8, 43);
    ASSERT_EQ(a.size(), 6u * 14u + 8u);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.back(), c.back());
    for (std::size_t i = 0; i < 84; ++i) EXPECT_EQ(a[i], c[i]);
}

TEST(GuessLadder, DimensionFollowsProblem)
{
    auto prob = energy_problem();
    EXPECT_EQ(guess_ladder(prob, 0).front().size(), 3u);
    prob.free_time = true;
    EXPECT_EQ(guess_ladder(prob, 0).front().size(), 4u);
    prob.free_time = false;
    prob.cost.tag = CostTag::mixed_adiabatic;
    EXPECT_EQ(guess_ladder(prob, 0).front().size(), 5u);
}

TEST(Shooting, EnergyLadderFindsPiPulseFirst)
{
    const auto prob = energy_problem();
    const auto res = solve_shooting(prob, guess_ladder(prob, 0));
    ASSERT_TRUE(res);
    const auto& e = res.value();
    EXPECT_LT(e.residual, 1e-4);
    EXPECT_EQ(e.guess_index, 2u);
    EXPECT_NEAR(e.cost, pi * pi / 100.0, 1e-6);
    EXPECT_NEAR(e.H, 0.5 * (pi / 100.0) * (pi / 100.0), 1e-8);
}

TEST(Shooting, StarkActiveFilterSelectsChirpedExtremal)
{
    const auto prob = energy_problem();
    ShootingOptions opt;
    opt.accept = stark_active();
    const auto res = solve_shooting(prob, guess_ladder(prob, 0), opt);
    ASSERT_TRUE(res);
    const auto& e = res.value();
    EXPECT_LT(e.residual, 1e-4);
    EXPECT_GT(e.cost, pi * pi / 100.0);
    double max_delta = 0.0;
    for (const auto& s : *e.trajectory.controls) max_delta = std::max(max_delta, std::abs(s.delta));
    EXPECT_GT(max_delta, 1e-3);
    EXPECT_LT(*e.conservation.H_drift, 1e-9);
}

TEST(Shooting, WorkersDoNotChangeTheWinner)
{
    const auto prob = energy_problem();
    ShootingOptions opt;
    opt.accept = stark_active();
    const auto a = solve_shooting(prob, guess_ladder(prob, 0), opt);
    opt.workers = 4;
    const auto b = solve_shooting(prob, guess_ladder(prob, 0), opt);
    ASSERT_TRUE(a && b);
    EXPECT_EQ(a.value().guess_index, b.value().guess_index);
    EXPECT_EQ(a.value().unknowns, b.value().unknowns);
}

TEST(Shooting, FailureCarriesDiagnostics)
{
    const auto prob = energy_problem();
    ShootingOptions opt;
    opt.max_iterations = 2;
    const auto res = solve_shooting(prob, {{0.0, 0.0, 0.0}}, opt);
    EXPECT_FALSE(res);
    ASSERT_EQ(res.attempts.size(), 1u);
    EXPECT_NE(res.attempts[0].status, "converged");
    EXPECT_THROW(res.value(), ShootingFailure);
}

TEST(Shooting, RejectsMalformedGuesses)
{
    const auto prob = energy_problem();
    EXPECT_THROW(solve_shooting(prob, {}), ConfigError);
    EXPECT_THROW(solve_shooting(prob, {{1.0, 2.0}}), ConfigError);
}

TEST(Shooting, FixedPumpStarkFieldOscillates)
{
    auto prob = energy_problem();
    prob.cost.tag = CostTag::fixed_pump_energy;
    const auto res = solve_shooting(prob, guess_ladder(prob, 0));
    ASSERT_TRUE(res);
    const auto& e = res.value();
    EXPECT_LT(e.residual, 1e-4);
    std::vector<double> rate;
    for (const auto& s : *e.trajectory.controls) rate.push_back(s.ddelta_dt);
    EXPECT_GE(sign_changes(rate), 4u);
}

TEST(Shooting, MixedTagOnlyThroughSingularArc)
{
    CostFunctional cost;
    cost.tag = CostTag::mixed_adiabatic;
    EXPECT_THROW(extremal_rhs(cost), NotApplicableError);
}

TEST(Shooting, MixedAdiabaticConvergesAndConservesH)
{
    auto prob = energy_problem();
    prob.cost.tag = CostTag::mixed_adiabatic;
    prob.cost.energy_weight = 0.0;
    const auto res = solve_shooting(prob, {{0.0, 0.0, 0.0, -2.0, 0.2}});
    ASSERT_TRUE(res);
    const auto& e = res.value();
    EXPECT_LT(e.residual, 1e-4);
    ASSERT_TRUE(e.conservation.H_drift.has_value());
    EXPECT_LT(*e.conservation.H_drift, 1e-6);
    const auto& c = *e.trajectory.controls;
    EXPECT_LT(c.front().delta, 0.0);
    EXPECT_GT(c.back().delta, 0.0);
}

TEST(Shooting, FreeTimeHitsZeroHamiltonian)
{
    auto prob = energy_problem();
    prob.free_time = true;
    prob.cost.tag = CostTag::fixed_pump_energy;
    const auto res = solve_shooting(prob, guess_ladder(prob, 0));
    ASSERT_TRUE(res) << "no free-time extremal in the ladder";
    EXPECT_NEAR(res.value().H, 0.0, 1e-4);
}

TEST(CostFunctionalValidation, RejectsNegativeWeight)
{
    CostFunctional c;
    c.tag = CostTag::mixed_adiabatic;
    c.energy_weight = -1.0;
    EXPECT_THROW(c.validate(), ConfigError);
}
