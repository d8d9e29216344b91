#pragma once

// Ensembles of atoms at positions z sharing one optimal pulse pair, and
// stability maps of the z-dependent optimal Stark field over the
// perturbation parameters (A, k, w).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "scrap/pmp.hpp"

namespace scrap {

/// Field experienced at z by an atom driven with the reference controls.
inline ControlSample experienced_controls(const CostFunctional& cost, double z, double t, const ControlSample& base)
{
    switch (cost.tag) {
    case CostTag::ensemble_linear: return perturbed_controls(z, base, cost.linear);
    case CostTag::ensemble_zt: return perturbed_controls(z, t, base, cost.zt);
    default: return base;
    }
}

struct EnsembleMember {
    double z = 0.0;
    Trajectory trajectory;  // R_z(t) and the field it experiences
    double p2_end = 0.0;
};

struct EnsembleBundle {
    std::vector<EnsembleMember> members;
    double max_endpoint_spread = 0.0;  // largest |R_z(t_f) - R_z'(t_f)|
};

namespace detail {

template <std::size_t N>
Trajectory ensemble_member(const ShootingProblem& problem, const ExtremalSystem<N>& sys, const ode::State<N>& y0,
                           double t_f, double z, const IntegratorConfig& cfg, std::size_t samples)
{
    constexpr std::size_t M = N + 3;
    const CostFunctional& cost = problem.cost;
    ode::State<M> y{};
    std::copy(y0.begin(), y0.end(), y.begin());
    for (int i = 0; i < 3; ++i) y[N + i] = problem.r_start[i];

    auto split = [](const ode::State<M>& s) {
        ode::State<N> head{};
        std::copy(s.begin(), s.begin() + N, head.begin());
        return head;
    };
    auto rhs = [&](double t, const ode::State<M>& s, ode::State<M>& ds) {
        const auto head = split(s);
        ode::State<N> dhead{};
        sys.rhs(t, head, dhead);
        std::copy(dhead.begin(), dhead.end(), ds.begin());
        const ControlSample e = experienced_controls(cost, z, t, sys.controls(t, head));
        const Vec3 dr = bloch_rhs(e, {s[N], s[N + 1], s[N + 2]});
        for (int i = 0; i < 3; ++i) ds[N + i] = dr[i];
    };

    Trajectory traj;
    traj.times = ode::uniform_grid(problem.t_i, t_f, samples);
    std::vector<ControlSample> controls;
    double drift = 0.0;
    traj.stats = ode::integrate<M>(
        rhs, y, problem.t_i, t_f, cfg, traj.times,
        [&](double t, const ode::State<M>& s) {
            const BlochVector r{s[N], s[N + 1], s[N + 2]};
            traj.states.push_back(r);
            controls.push_back(experienced_controls(cost, z, t, sys.controls(t, split(s))));
            drift = std::max(drift, std::abs(norm(r) - 1.0));
        },
        [&](double, const ode::State<M>& s) { drift = std::max(drift, std::abs(norm(Vec3{s[N], s[N + 1], s[N + 2]}) - 1.0)); });
    traj.controls = std::move(controls);
    traj.norm_drift = drift;
    return traj;
}

} // namespace detail

/// Drives atoms at each z with the single pulse pair of `base`, integrating
/// the reference extremal jointly with every member.
inline EnsembleBundle ensemble_trajectories(const ShootingProblem& problem, const Extremal& base,
                                            std::span<const double> zs, const IntegratorConfig& cfg = {},
                                            std::size_t samples = 1001, unsigned workers = 1)
{
    problem.validate();
    if (base.unknowns.size() != problem.n_unknowns())
        throw ConfigError("ensemble_trajectories: extremal does not match the problem");
    EnsembleBundle out;
    out.members.resize(zs.size());
    parallel_for(zs.size(), workers, [&](std::size_t i) {
        auto& m = out.members[i];
        m.z = zs[i];
        if (problem.cost.tag == CostTag::ensemble_linear)
            check_z(m.z, problem.cost.linear.z_min, problem.cost.linear.z_max);
        if (problem.cost.tag == CostTag::ensemble_zt) check_z(m.z, problem.cost.zt.z_min, problem.cost.zt.z_max);
        if (problem.cost.tag == CostTag::mixed_adiabatic)
            m.trajectory = detail::ensemble_member<10>(problem, mixed_adiabatic_system(problem.cost.energy_weight),
                                                       detail::initial_state<10>(problem, base.unknowns), base.t_f, m.z,
                                                       cfg, samples);
        else
            m.trajectory = detail::ensemble_member<6>(problem, extremal_rhs(problem.cost),
                                                      detail::initial_state<6>(problem, base.unknowns), base.t_f, m.z,
                                                      cfg, samples);
        m.p2_end = populations(m.trajectory.states.back()).p2;
    });
    for (const auto& a : out.members)
        for (const auto& b : out.members)
            out.max_endpoint_spread =
                std::max(out.max_endpoint_spread, norm(a.trajectory.states.back() - b.trajectory.states.back()));
    return out;
}

enum class StabilityAxis { A, k, w };

inline std::string_view to_string(StabilityAxis a) noexcept
{
    switch (a) {
    case StabilityAxis::A: return "A";
    case StabilityAxis::k: return "k";
    case StabilityAxis::w: return "w";
    }
    return "?";
}

inline std::optional<StabilityAxis> parse_stability_axis(std::string_view s) noexcept
{
    if (s == "A") return StabilityAxis::A;
    if (s == "k") return StabilityAxis::k;
    if (s == "w") return StabilityAxis::w;
    return std::nullopt;
}

inline double& axis_parameter(SpaceTimePerturbation& p, StabilityAxis a) noexcept
{
    switch (a) {
    case StabilityAxis::A: return p.A;
    case StabilityAxis::k: return p.k;
    case StabilityAxis::w: break;
    }
    return p.w;
}

struct StabilityOptions {
    StabilityAxis axis = StabilityAxis::A;
    std::vector<double> values;       // scanned parameter values, ascending
    std::size_t z_samples = 41;
    double probe_fraction = 0.4;      // t_probe = t_i + fraction (t_f - t_i)
    double threshold_fraction = 0.05; // of max_t |Delta*(t; z_ref)|
    ShootingOptions shooting;
    std::size_t random_restarts = 16;
    std::uint64_t seed = 0;
};

struct StabilityMap {
    StabilityAxis axis = StabilityAxis::A;
    std::vector<double> z_axis;
    std::vector<double> param_axis;
    std::vector<double> values;  // values[i * nz + j] = Delta*(t_probe; z_j) at param_i, NaN when failed
    std::vector<double> spread;  // max_z - min_z per parameter value
    std::vector<double> scale;   // max_t |Delta*(t; z_ref)| per parameter value
    std::vector<bool> failed;
    std::vector<bool> stable;
    double probe_time = 0.0;
    double threshold_fraction = 0.05;
    std::size_t operating_index = 0;
    std::optional<std::pair<std::size_t, std::size_t>> acceptance_cells;  // inclusive index range

    double at(std::size_t i, std::size_t j) const { return values[i * z_axis.size() + j]; }

    std::optional<std::pair<double, double>> acceptance_interval() const
    {
        if (!acceptance_cells) return std::nullopt;
        return std::pair{param_axis[acceptance_cells->first], param_axis[acceptance_cells->second]};
    }

    /// A critical value was found inside the scanned range on at least one side.
    bool interior() const
    {
        if (!acceptance_cells) return false;
        return acceptance_cells->first > 0 || acceptance_cells->second + 1 < param_axis.size();
    }
};

/// Delta*(t; z) sampled over z for one perturbation, from l3 at that time.
inline std::vector<double> stark_profile_over_z(double t, double l3, const SpaceTimePerturbation& pert,
                                                std::span<const double> zs)
{
    std::vector<double> out(zs.size());
    for (std::size_t j = 0; j < zs.size(); ++j) out[j] = optimal_stark_zt(t, zs[j], l3, pert);
    return out;
}

/// Contiguous run of stable cells that contains `op`.
inline std::optional<std::pair<std::size_t, std::size_t>> stable_run(const std::vector<bool>& stable, std::size_t op)
{
    if (op >= stable.size() || !stable[op]) return std::nullopt;
    std::size_t lo = op, hi = op;
    while (lo > 0 && stable[lo - 1]) --lo;
    while (hi + 1 < stable.size() && stable[hi + 1]) ++hi;
    return std::pair{lo, hi};
}

/// Scans one perturbation parameter around `problem.cost.zt`. Every value
/// gets its own extremal, seeded from the operating point's costate and
/// falling back to the guess ladder; the Stark-active filter keeps the
/// chirped member of the family.
inline StabilityMap stability_map(const ShootingProblem& problem, const StabilityOptions& opt, unsigned workers = 1)
{
    if (problem.cost.tag != CostTag::ensemble_zt) throw ConfigError("stability_map: needs the ensemble-zt cost");
    problem.validate();
    if (opt.values.empty()) throw ConfigError("stability_map: no parameter values");
    if (opt.z_samples < 2) throw ConfigError("stability_map: need at least two z samples");
    if (!(opt.probe_fraction > 0.0 && opt.probe_fraction < 1.0))
        throw ConfigError("stability_map: probe fraction must lie in (0, 1)");
    if (!(opt.threshold_fraction >= 0.0)) throw ConfigError("stability_map: threshold must be non-negative");

    const auto& pert0 = problem.cost.zt;
    StabilityMap map;
    map.axis = opt.axis;
    map.param_axis = opt.values;
    map.z_axis = ode::uniform_grid(pert0.z_min, pert0.z_max, opt.z_samples);
    map.probe_time = problem.t_i + opt.probe_fraction * (problem.t_f - problem.t_i);
    map.threshold_fraction = opt.threshold_fraction;
    SpaceTimePerturbation op_pert = pert0;
    const double op_value = axis_parameter(op_pert, opt.axis);
    map.operating_index = static_cast<std::size_t>(
        std::min_element(opt.values.begin(), opt.values.end(),
                         [&](double a, double b) { return std::abs(a - op_value) < std::abs(b - op_value); }) -
        opt.values.begin());

    ShootingOptions sopt = opt.shooting;
    sopt.workers = 1;
    sopt.collect_all = false;
    if (!sopt.accept) sopt.accept = stark_active();
    const auto ladder = guess_ladder(problem, opt.random_restarts, opt.seed);
    const Extremal& op_extremal = solve_shooting(problem, ladder, sopt).value();

    const std::size_t np = opt.values.size(), nz = opt.z_samples;
    map.values.assign(np * nz, std::numeric_limits<double>::quiet_NaN());
    map.spread.assign(np, std::numeric_limits<double>::quiet_NaN());
    map.scale.assign(np, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> failed(np, 0), stable(np, 0);

    parallel_for(np, workers, [&](std::size_t i) {
        ShootingProblem cell = problem;
        axis_parameter(cell.cost.zt, opt.axis) = opt.values[i];
        try {
            cell.validate();
            std::vector<std::vector<double>> guesses{op_extremal.unknowns};
            guesses.insert(guesses.end(), ladder.begin(), ladder.end());
            const ShootingResult res = solve_shooting(cell, guesses, sopt);
            if (!res) {
                failed[i] = 1;
                return;
            }
            const Extremal& e = *res.best;
            const auto sys = extremal_rhs(cell.cost);
            const auto y = ode::integrate_to<6>(sys.rhs, detail::initial_state<6>(cell, e.unknowns), cell.t_i,
                                                map.probe_time, sopt.integrator);
            const double l3 = cross(Vec3{y[0], y[1], y[2]}, Vec3{y[3], y[4], y[5]})[2];
            const auto prof = stark_profile_over_z(map.probe_time, l3, cell.cost.zt, map.z_axis);
            std::copy(prof.begin(), prof.end(), map.values.begin() + static_cast<std::ptrdiff_t>(i * nz));
            const auto [mn, mx] = std::minmax_element(prof.begin(), prof.end());
            map.spread[i] = *mx - *mn;
            double scale = 0.0;
            for (const auto& s : *e.trajectory.controls) scale = std::max(scale, std::abs(s.delta));
            map.scale[i] = scale;
            stable[i] = map.spread[i] < opt.threshold_fraction * scale;
        } catch (const ScrapError&) {
            failed[i] = 1;
        }
    });
    map.failed.assign(failed.begin(), failed.end());
    map.stable.assign(stable.begin(), stable.end());
    map.acceptance_cells = stable_run(map.stable, map.operating_index);
    return map;
}

/// Per-axis acceptance intervals combined into a box in (A, k, w).
struct AcceptanceBox {
    std::optional<std::pair<double, double>> A, k, w;

    bool complete() const noexcept { return A && k && w; }
};

inline AcceptanceBox acceptance_box(std::span<const StabilityMap> maps)
{
    AcceptanceBox box;
    for (const auto& m : maps) {
        switch (m.axis) {
        case StabilityAxis::A: box.A = m.acceptance_interval(); break;
        case StabilityAxis::k: box.k = m.acceptance_interval(); break;
        case StabilityAxis::w: box.w = m.acceptance_interval(); break;
        }
    }
    return box;
}

} // namespace scrap
