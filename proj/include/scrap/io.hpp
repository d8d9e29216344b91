#pragma once

// JSON views of the parameter structs and result summaries. Parsing is
// strict: unknown keys and wrongly typed values raise ConfigError so a typo
// in a scenario file never silently falls back to a default.

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>
#endif

#include <cmath>
#include <initializer_list>
#include <string>
#include <string_view>

#include "scrap/geophase.hpp"
#include "scrap/inhomogeneity.hpp"
#include "scrap/landscape.hpp"

namespace scrap::io {

using json = nlohmann::ordered_json;

namespace detail {

inline void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed)
{
    if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
    }
}

template <class T>
void read(const json& j, std::string_view where, const char* key, T& out)
{
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(where) + "." + key + ": wrong type");
    }
}

/// Non-finite numbers have no JSON literal; they are written as null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json pair_or_null(const std::optional<std::pair<double, double>>& p)
{
    if (!p) return nullptr;
    return json::array({p->first, p->second});
}

} // namespace detail

inline PulseParams parse_pulse(const json& j, PulseParams p = {})
{
    detail::check_keys(j, "pulse", {"S0", "Delta0", "Omega0", "sigma_s", "sigma_p", "t_s", "t_p"});
    detail::read(j, "pulse", "S0", p.S0);
    detail::read(j, "pulse", "Delta0", p.Delta0);
    detail::read(j, "pulse", "Omega0", p.Omega0);
    detail::read(j, "pulse", "sigma_s", p.sigma_s);
    detail::read(j, "pulse", "sigma_p", p.sigma_p);
    detail::read(j, "pulse", "t_s", p.t_s);
    detail::read(j, "pulse", "t_p", p.t_p);
    return p;
}

inline json to_json(const PulseParams& p)
{
    return {{"S0", p.S0},           {"Delta0", p.Delta0}, {"Omega0", p.Omega0}, {"sigma_s", p.sigma_s},
            {"sigma_p", p.sigma_p}, {"t_s", p.t_s},       {"t_p", p.t_p}};
}

inline IntegratorConfig parse_integrator(const json& j, IntegratorConfig c = {})
{
    detail::check_keys(j, "integrator", {"method", "rel_tol", "abs_tol", "max_step", "fixed_step", "max_steps"});
    if (j.contains("method")) {
        const auto m = j.at("method").get<std::string>();
        if (m == "dopri45") c.method = ode::Method::dopri45;
        else if (m == "rk4") c.method = ode::Method::rk4_fixed;
        else throw ConfigError("integrator.method: expected 'dopri45' or 'rk4'");
    }
    detail::read(j, "integrator", "rel_tol", c.rel_tol);
    detail::read(j, "integrator", "abs_tol", c.abs_tol);
    detail::read(j, "integrator", "max_step", c.max_step);
    detail::read(j, "integrator", "fixed_step", c.fixed_step);
    detail::read(j, "integrator", "max_steps", c.max_steps);
    return c;
}

inline json to_json(const IntegratorConfig& c)
{
    return {{"method", c.method == ode::Method::dopri45 ? "dopri45" : "rk4"},
            {"rel_tol", c.rel_tol},
            {"abs_tol", c.abs_tol},
            {"max_step", c.max_step},
            {"fixed_step", c.fixed_step},
            {"max_steps", c.max_steps}};
}

inline GridSpec parse_grid(const json& j, GridSpec g = {})
{
    detail::check_keys(j, "grid", {"tau_min", "tau_max", "n_tau", "sigma_min", "sigma_max", "n_sigma"});
    detail::read(j, "grid", "tau_min", g.tau_min);
    detail::read(j, "grid", "tau_max", g.tau_max);
    detail::read(j, "grid", "n_tau", g.n_tau);
    detail::read(j, "grid", "sigma_min", g.sigma_min);
    detail::read(j, "grid", "sigma_max", g.sigma_max);
    detail::read(j, "grid", "n_sigma", g.n_sigma);
    return g;
}

inline json to_json(const GridSpec& g)
{
    return {{"tau_min", g.tau_min},     {"tau_max", g.tau_max},     {"n_tau", g.n_tau},
            {"sigma_min", g.sigma_min}, {"sigma_max", g.sigma_max}, {"n_sigma", g.n_sigma}};
}

inline ReducedWindow parse_window(const json& j, ReducedWindow w = {})
{
    detail::check_keys(j, "critical_window", {"tau_min", "tau_max", "sigma_min", "sigma_max"});
    detail::read(j, "critical_window", "tau_min", w.tau_min);
    detail::read(j, "critical_window", "tau_max", w.tau_max);
    detail::read(j, "critical_window", "sigma_min", w.sigma_min);
    detail::read(j, "critical_window", "sigma_max", w.sigma_max);
    return w;
}

inline json to_json(const ReducedWindow& w)
{
    return {{"tau_min", w.tau_min}, {"tau_max", w.tau_max}, {"sigma_min", w.sigma_min}, {"sigma_max", w.sigma_max}};
}

inline LinearInhom parse_linear(const json& j, LinearInhom l = {})
{
    detail::check_keys(j, "cost.linear", {"k", "z_min", "z_max"});
    detail::read(j, "cost.linear", "k", l.k);
    detail::read(j, "cost.linear", "z_min", l.z_min);
    detail::read(j, "cost.linear", "z_max", l.z_max);
    return l;
}

inline json to_json(const LinearInhom& l) { return {{"k", l.k}, {"z_min", l.z_min}, {"z_max", l.z_max}}; }

/// The time window of the ripple is taken from the scenario window.
inline SpaceTimePerturbation parse_zt(const json& j, SpaceTimePerturbation z = {})
{
    detail::check_keys(j, "cost.zt", {"A", "w", "k", "z_min", "z_max"});
    detail::read(j, "cost.zt", "A", z.A);
    detail::read(j, "cost.zt", "w", z.w);
    detail::read(j, "cost.zt", "k", z.k);
    detail::read(j, "cost.zt", "z_min", z.z_min);
    detail::read(j, "cost.zt", "z_max", z.z_max);
    return z;
}

inline json to_json(const SpaceTimePerturbation& z)
{
    return {{"A", z.A}, {"w", z.w}, {"k", z.k}, {"z_min", z.z_min}, {"z_max", z.z_max}};
}

inline CostFunctional parse_cost(const json& j, CostFunctional c = {})
{
    detail::check_keys(j, "cost", {"tag", "energy_weight", "linear", "zt"});
    if (j.contains("tag")) {
        const auto tag = parse_cost_tag(j.at("tag").get<std::string>());
        if (!tag) throw ConfigError("cost.tag: unknown cost functional '" + j.at("tag").get<std::string>() + "'");
        c.tag = *tag;
    }
    detail::read(j, "cost", "energy_weight", c.energy_weight);
    if (j.contains("linear")) c.linear = parse_linear(j.at("linear"), c.linear);
    if (j.contains("zt")) c.zt = parse_zt(j.at("zt"), c.zt);
    return c;
}

inline json to_json(const CostFunctional& c)
{
    return {{"tag", std::string(to_string(c.tag))},
            {"energy_weight", c.energy_weight},
            {"linear", to_json(c.linear)},
            {"zt", to_json(c.zt)}};
}

inline json to_json(const ConservationReport& r)
{
    return {{"norm_drift", detail::num(r.norm_drift)},
            {"H0", detail::num(r.H0)},
            {"H_drift", r.H_drift ? detail::num(*r.H_drift) : json(nullptr)},
            {"l2_0", detail::num(r.l2_0)},
            {"l2_drift", r.l2_drift ? detail::num(*r.l2_drift) : json(nullptr)},
            {"l_sq0", detail::num(r.lsq0)},
            {"l_sq_drift", r.lsq_drift ? detail::num(*r.lsq_drift) : json(nullptr)},
            {"p_norm0", detail::num(r.p_norm0)},
            {"p_norm_drift", r.p_norm_drift ? detail::num(*r.p_norm_drift) : json(nullptr)}};
}

inline json to_json(const Extremal& e)
{
    json u = json::array();
    for (double v : e.unknowns) u.push_back(v);
    return {{"cost_tag", std::string(to_string(e.tag))},
            {"p_initial", {e.p_initial[0], e.p_initial[1], e.p_initial[2]}},
            {"unknowns", u},
            {"t_f", e.t_f},
            {"residual", e.residual},
            {"H", e.H},
            {"l_sq", e.l_sq},
            {"iterations", e.iterations},
            {"cost", e.cost},
            {"guess_index", e.guess_index},
            {"conservation", to_json(e.conservation)}};
}

inline json to_json(const ShootingAttempt& a)
{
    json g = json::array(), f = json::array();
    for (double v : a.guess) g.push_back(v);
    for (double v : a.final_unknowns) f.push_back(v);
    return {{"index", a.index}, {"status", a.status}, {"guess", g}, {"final", f},
            {"residual", detail::num(a.residual)}, {"iterations", a.iterations}};
}

inline json shooting_diagnostics(const ShootingResult& r)
{
    json attempts = json::array(), conv = json::array();
    for (const auto& a : r.attempts)
        if (a.status != "not-run") attempts.push_back(to_json(a));
    for (const auto& e : r.converged)
        conv.push_back({{"guess_index", e.guess_index}, {"cost", e.cost}, {"residual", e.residual}});
    return {{"success", r.best.has_value()},
            {"attempts_run", attempts.size()},
            {"attempts", attempts},
            {"converged_by_cost", conv}};
}

inline json to_json(const CriticalPoint& c)
{
    return {{"tau", c.tau}, {"sigma", c.sigma},
            {"kind", c.kind == CriticalKind::intersection ? "intersection" : "rejected_degenerate"}};
}

inline json to_json(const Argmax& a)
{
    return {{"tau", a.tau}, {"sigma", a.sigma}, {"value", a.value}, {"refined_tau", a.refined_tau},
            {"refined_sigma", a.refined_sigma}, {"i_tau", a.i_tau}, {"j_sigma", a.j_sigma}};
}

inline json to_json(const StabilityMap& m)
{
    json spread = json::array(), params = json::array(), stable = json::array(), failed = json::array();
    for (std::size_t i = 0; i < m.param_axis.size(); ++i) {
        params.push_back(m.param_axis[i]);
        spread.push_back(detail::num(m.spread[i] / m.scale[i]));
        stable.push_back(static_cast<bool>(m.stable[i]));
        failed.push_back(static_cast<bool>(m.failed[i]));
    }
    return {{"axis", std::string(to_string(m.axis))},
            {"threshold", m.threshold_fraction},
            {"probe_time", m.probe_time},
            {"operating_value", m.param_axis[m.operating_index]},
            {"acceptance_interval", detail::pair_or_null(m.acceptance_interval())},
            {"interior", m.interior()},
            {"parameter", params},
            {"relative_spread", spread},
            {"stable", stable},
            {"failed", failed}};
}

inline json to_json(const PhaseReport& r)
{
    json w = json::array();
    for (const auto& s : r.warnings) w.push_back(s);
    return {{"winding", r.closed ? json(r.winding) : json(nullptr)},
            {"gamma", r.gamma},
            {"angle_increment", r.angle_increment},
            {"closed", r.closed},
            {"warnings", w}};
}

/// Writes a (param x z) stability matrix; the first column holds the
/// parameter value.
inline void write_stability_csv(std::ostream& os, const StabilityMap& m)
{
    os << to_string(m.axis) << "\\z";
    for (double z : m.z_axis) os << ',' << format_double(z);
    os << '\n';
    for (std::size_t i = 0; i < m.param_axis.size(); ++i) {
        os << format_double(m.param_axis[i]);
        for (std::size_t j = 0; j < m.z_axis.size(); ++j) os << ',' << format_double(m.at(i, j));
        os << '\n';
    }
}

} // namespace scrap::io
