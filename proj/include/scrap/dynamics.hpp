#pragma once

// Time integration of the Bloch equations and of coupled state/costate
// systems, plus conservation diagnostics and trajectory CSV export.

#include <algorithm>
#include <charconv>
#include <functional>
#include <limits>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "scrap/control_field.hpp"
#include "scrap/integrator.hpp"

namespace scrap {

using ode::IntegratorConfig;

struct Trajectory {
    std::vector<double> times;
    std::vector<BlochVector> states;
    std::optional<std::vector<Vec3>> costates;
    std::optional<std::vector<ControlSample>> controls;
    std::optional<std::vector<double>> hamiltonian;
    double norm_drift = 0.0;  // max | |R| - 1 | over samples and accepted steps
    ode::IntegrationStats stats;

    std::size_t size() const noexcept { return times.size(); }
};

namespace detail {

inline double norm_deviation(double a, double b, double c) { return std::abs(std::sqrt(a * a + b * b + c * c) - 1.0); }

inline void check_unit(const BlochVector& r, const char* who)
{
    if (std::abs(norm(r) - 1.0) > 1e-9) throw ConfigError(std::string(who) + ": initial Bloch vector must have unit norm");
}

} // namespace detail

/// Solves dR/dt = w(t) x R with w = (Omega, 0, Delta) and samples the
/// solution on `samples` uniform times covering [t_i, t_f].
inline Trajectory integrate_bloch(const ControlField& field, const BlochVector& r0, double t_i, double t_f,
                                  IntegratorConfig cfg, std::size_t samples = 1001)
{
    detail::check_unit(r0, "integrate_bloch");
    if (!(t_f > t_i)) throw ConfigError("integrate_bloch: t_f must exceed t_i");
    cfg.max_step = std::min(cfg.max_step, field.max_step_hint());

    Trajectory traj;
    traj.times = ode::uniform_grid(t_i, t_f, samples);
    traj.states.reserve(samples);
    std::vector<ControlSample> controls;
    controls.reserve(samples);
    double drift = 0.0;

    auto rhs = [&field](double t, const ode::State<3>& r, ode::State<3>& dr) { dr = bloch_rhs(field(t), r); };
    traj.stats = ode::integrate<3>(
        rhs, r0, t_i, t_f, cfg, traj.times,
        [&](double t, const ode::State<3>& r) {
            traj.states.push_back(r);
            controls.push_back(field(t));
            drift = std::max(drift, detail::norm_deviation(r[0], r[1], r[2]));
        },
        [&](double, const ode::State<3>& r) { drift = std::max(drift, detail::norm_deviation(r[0], r[1], r[2])); });
    traj.controls = std::move(controls);
    traj.norm_drift = drift;
    return traj;
}

/// Closed-loop system whose first six state entries are (R, p). Extra
/// entries (controls promoted to states and their adjoints) follow.
template <std::size_t N>
struct ExtremalSystem {
    std::function<void(double, const ode::State<N>&, ode::State<N>&)> rhs;
    std::function<ControlSample(double, const ode::State<N>&)> controls;
    std::function<double(double, const ode::State<N>&)> hamiltonian;
};

/// Integrates a state/costate system and records controls and H per sample.
/// `extra` receives the full state at every sample when non-null.
template <std::size_t N>
Trajectory integrate_extremal(const ExtremalSystem<N>& sys, const ode::State<N>& y0, double t_i, double t_f,
                              const IntegratorConfig& cfg, std::size_t samples = 1001,
                              std::vector<ode::State<N>>* extra = nullptr)
{
    static_assert(N >= 6);
    if (!(t_f > t_i)) throw ConfigError("integrate_extremal: t_f must exceed t_i");
    for (double v : y0)
        if (!std::isfinite(v)) throw ConfigError("integrate_extremal: initial state must be finite");

    Trajectory traj;
    traj.times = ode::uniform_grid(t_i, t_f, samples);
    std::vector<Vec3> costates;
    std::vector<ControlSample> controls;
    std::vector<double> ham;
    double drift = 0.0;
    traj.stats = ode::integrate<N>(
        sys.rhs, y0, t_i, t_f, cfg, traj.times,
        [&](double t, const ode::State<N>& y) {
            traj.states.push_back({y[0], y[1], y[2]});
            costates.push_back({y[3], y[4], y[5]});
            controls.push_back(sys.controls(t, y));
            ham.push_back(sys.hamiltonian(t, y));
            drift = std::max(drift, detail::norm_deviation(y[0], y[1], y[2]));
            if (extra) extra->push_back(y);
        },
        [&](double, const ode::State<N>& y) { drift = std::max(drift, detail::norm_deviation(y[0], y[1], y[2])); });
    traj.costates = std::move(costates);
    traj.controls = std::move(controls);
    traj.hamiltonian = std::move(ham);
    traj.norm_drift = drift;
    return traj;
}

/// Largest deviation of each conserved quantity from its initial value.
struct ConservationReport {
    double norm_drift = 0.0;
    std::optional<double> H_drift, l2_drift, lsq_drift, p_norm_drift;
    double H0 = 0.0, l2_0 = 0.0, lsq0 = 0.0, p_norm0 = 0.0;
};

inline ConservationReport conservation_report(const Trajectory& traj)
{
    ConservationReport rep;
    rep.norm_drift = traj.norm_drift;
    for (const auto& r : traj.states) rep.norm_drift = std::max(rep.norm_drift, std::abs(norm(r) - 1.0));
    if (!traj.costates || traj.costates->empty()) return rep;

    const auto& ps = *traj.costates;
    const Vec3 l0 = cross(traj.states[0], ps[0]);
    rep.l2_0 = l0[1];
    rep.lsq0 = dot(l0, l0);
    rep.p_norm0 = norm(ps[0]);
    double dl2 = 0.0, dlsq = 0.0, dp = 0.0, dH = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const Vec3 l = cross(traj.states[i], ps[i]);
        dl2 = std::max(dl2, std::abs(l[1] - rep.l2_0));
        dlsq = std::max(dlsq, std::abs(dot(l, l) - rep.lsq0));
        dp = std::max(dp, std::abs(norm(ps[i]) - rep.p_norm0));
    }
    rep.l2_drift = dl2;
    rep.lsq_drift = dlsq;
    rep.p_norm_drift = dp;
    if (traj.hamiltonian && !traj.hamiltonian->empty()) {
        rep.H0 = traj.hamiltonian->front();
        for (double h : *traj.hamiltonian) dH = std::max(dH, std::abs(h - rep.H0));
        rep.H_drift = dH;
    }
    return rep;
}

/// Adiabatic reference and non-adiabatic correction along a trajectory.
/// Samples at zero field have no adiabatic direction and hold NaN.
struct AdiabaticComparison {
    std::vector<BlochVector> r_ad;
    std::vector<Vec3> r_na;
    std::vector<double> ad;
    double max_na1 = 0.0;  // over samples with t <= until
    double max_na3 = 0.0;
    double until = 0.0;
};

inline AdiabaticComparison compare_with_adiabatic(const Trajectory& traj,
                                                  double until = std::numeric_limits<double>::infinity())
{
    if (!traj.controls) throw NotApplicableError("compare_with_adiabatic: trajectory carries no controls");
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    AdiabaticComparison out;
    out.until = std::min(until, traj.times.back());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& c = (*traj.controls)[i];
        if (c.delta == 0.0 && c.omega == 0.0) {
            out.r_ad.push_back({nan, nan, nan});
            out.r_na.push_back({nan, nan, nan});
            out.ad.push_back(nan);
            continue;
        }
        const BlochVector ra = adiabatic_bloch(mixing_angle(c));
        const Vec3 na = nabc(traj.states[i], ra);
        out.r_ad.push_back(ra);
        out.r_na.push_back(na);
        out.ad.push_back(c.has_rates ? adiabaticity(c) : nan);
        if (traj.times[i] <= out.until) {
            out.max_na1 = std::max(out.max_na1, std::abs(na[0]));
            out.max_na3 = std::max(out.max_na3, std::abs(na[2]));
        }
    }
    return out;
}

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// CSV with header t,r1,r2,r3[,p1,p2,p3][,delta,omega,AD].
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    const bool has_p = traj.costates.has_value();
    const bool has_c = traj.controls.has_value();
    os << "t,r1,r2,r3";
    if (has_p) os << ",p1,p2,p3";
    if (has_c) os << ",delta,omega,AD";
    os << '\n';
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& r = traj.states[i];
        os << format_double(traj.times[i]) << ',' << format_double(r[0]) << ',' << format_double(r[1]) << ','
           << format_double(r[2]);
        if (has_p) {
            const auto& p = (*traj.costates)[i];
            os << ',' << format_double(p[0]) << ',' << format_double(p[1]) << ',' << format_double(p[2]);
        }
        if (has_c) {
            const auto& c = (*traj.controls)[i];
            double ad = std::numeric_limits<double>::quiet_NaN();
            if (c.has_rates && (c.delta != 0.0 || c.omega != 0.0)) ad = adiabaticity(c);
            os << ',' << format_double(c.delta) << ',' << format_double(c.omega) << ',' << format_double(ad);
        }
        os << '\n';
    }
}

} // namespace scrap
