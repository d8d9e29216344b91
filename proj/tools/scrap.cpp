// scrap: scenario runner for the SCRAP two-level toolkit.
//
//   scrap <subcommand> [--config FILE] [--out DIR] [--seed N] [--workers N]
//                      [--set key.path=value ...] [subcommand options]
//
// Every run writes its outputs, the resolved configuration (config.json) and
// a manifest with SHA-256 digests (manifest.json). `scrap verify DIR`
// re-checks the digests. Exit codes: 0 success, 1 verification mismatch,
// 2 configuration error, 3 solver failure, 4 singular input.

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scrap/io.hpp"
#include "scrap/scrap.hpp"

namespace fs = std::filesystem;
using scrap::io::json;

namespace {

constexpr int exit_ok = 0, exit_mismatch = 1, exit_config = 2, exit_solver = 3, exit_singular = 4;

std::string sha256_hex(const std::string& data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

std::string utc_now()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw scrap::ConfigError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Outputs are buffered and written only once the computation succeeded or
/// produced diagnostics worth keeping.
struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;

    void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
    void add_json(std::string name, const json& j) { add(std::move(name), j.dump(2) + "\n"); }
};

struct RunContext {
    std::string command;
    json config = json::object();  // merged input
    json resolved = json::object();
    fs::path out_dir;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    std::string started;
};

// ---------------------------------------------------------------- config --

json parse_value(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return json(text);
    }
}

void apply_override(json& cfg, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw scrap::ConfigError("--set expects key.path=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    json* node = &cfg;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw scrap::ConfigError("--set: empty key in '" + path + "'");
        if (!node->is_object()) throw scrap::ConfigError("--set: '" + path + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[key] = parse_value(assignment.substr(eq + 1));
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

const json& section(const json& cfg, const char* key)
{
    static const json empty = json::object();
    return cfg.contains(key) ? cfg.at(key) : empty;
}

struct Common {
    scrap::PulseParams pulse;
    scrap::IntegratorConfig integrator;
    double t_i = 0.0, t_f = 100.0;
    double probe_time = 0.0;
};

Common parse_common(const json& cfg)
{
    scrap::io::detail::check_keys(cfg, "config",
                                  {"description", "scenario", "pulse", "window", "probe_time", "integrator", "grid",
                                   "critical_window", "simulate", "cost", "shooting", "ensemble", "stability",
                                   "geophase", "seed", "workers"});
    Common c;
    c.pulse = scrap::io::parse_pulse(section(cfg, "pulse"));
    c.integrator = scrap::io::parse_integrator(section(cfg, "integrator"));
    const json& w = section(cfg, "window");
    scrap::io::detail::check_keys(w, "window", {"t_i", "t_f"});
    scrap::io::detail::read(w, "window", "t_i", c.t_i);
    scrap::io::detail::read(w, "window", "t_f", c.t_f);
    c.probe_time = c.pulse.default_probe_time();
    if (cfg.contains("probe_time") && !cfg.at("probe_time").is_null()) scrap::io::detail::read(cfg, "config", "probe_time", c.probe_time);
    c.pulse.validate();
    c.integrator.validate();
    if (!(c.t_f > c.t_i)) throw scrap::ConfigError("window: t_f must exceed t_i");
    return c;
}

json common_json(const Common& c)
{
    return {{"pulse", scrap::io::to_json(c.pulse)},
            {"window", {{"t_i", c.t_i}, {"t_f", c.t_f}}},
            {"probe_time", c.probe_time},
            {"integrator", scrap::io::to_json(c.integrator)}};
}

struct ShootingConfig {
    scrap::ShootingOptions options;
    std::size_t random_restarts = 64;
    std::string filter = "none";
    bool free_time = false;
    std::optional<std::vector<std::vector<double>>> guesses;
};

ShootingConfig parse_shooting(const json& j, const scrap::IntegratorConfig& integ)
{
    using scrap::io::detail::read;
    scrap::io::detail::check_keys(j, "shooting",
                                  {"tol", "max_iterations", "random_restarts", "samples", "collect_all", "filter",
                                   "free_time", "guesses"});
    ShootingConfig s;
    s.options.integrator = integ;
    read(j, "shooting", "tol", s.options.tol);
    read(j, "shooting", "max_iterations", s.options.max_iterations);
    read(j, "shooting", "random_restarts", s.random_restarts);
    read(j, "shooting", "samples", s.options.samples);
    read(j, "shooting", "collect_all", s.options.collect_all);
    read(j, "shooting", "filter", s.filter);
    read(j, "shooting", "free_time", s.free_time);
    if (j.contains("guesses")) {
        std::vector<std::vector<double>> g;
        read(j, "shooting", "guesses", g);
        s.guesses = std::move(g);
    }
    if (s.filter == "stark-active") s.options.accept = scrap::stark_active();
    else if (s.filter != "none") throw scrap::ConfigError("shooting.filter: expected 'none' or 'stark-active'");
    return s;
}

json shooting_json(const ShootingConfig& s)
{
    json j = {{"tol", s.options.tol},
              {"max_iterations", s.options.max_iterations},
              {"random_restarts", s.random_restarts},
              {"samples", s.options.samples},
              {"collect_all", s.options.collect_all},
              {"filter", s.filter},
              {"free_time", s.free_time}};
    if (s.guesses) j["guesses"] = *s.guesses;
    return j;
}

scrap::ShootingProblem make_problem(const Common& c, const scrap::CostFunctional& cost, bool free_time)
{
    scrap::ShootingProblem p;
    p.t_i = c.t_i;
    p.t_f = c.t_f;
    p.cost = cost;
    p.cost.pump = c.pulse;
    p.cost.zt.t_i = c.t_i;
    p.cost.zt.t_f = c.t_f;
    p.free_time = free_time;
    return p;
}

// ---------------------------------------------------------------- csv ----

std::string map_csv(const scrap::GridMap& m)
{
    std::ostringstream os;
    scrap::write_map_csv(os, m);
    return os.str();
}

std::string trajectory_csv(const scrap::Trajectory& t)
{
    std::ostringstream os;
    scrap::write_trajectory_csv(os, t);
    return os.str();
}

// ---------------------------------------------------------------- commands

int cmd_adiabatic_map(RunContext& ctx, Outputs& out)
{
    const Common c = parse_common(ctx.config);
    const auto grid = scrap::io::parse_grid(section(ctx.config, "grid"));
    const auto win = scrap::io::parse_window(section(ctx.config, "critical_window"));
    grid.validate();
    ctx.resolved = common_json(c);
    ctx.resolved["grid"] = scrap::io::to_json(grid);
    ctx.resolved["critical_window"] = scrap::io::to_json(win);

    const auto p2 = scrap::efficiency_map(scrap::Measure::adiabatic_p2, grid, c.pulse, c.probe_time, c.t_i,
                                          c.integrator, ctx.workers);
    const auto ad = scrap::adiabaticity_map(c.probe_time, grid, c.pulse, ctx.workers);
    const auto crit = scrap::critical_points(c.probe_time, c.pulse, win);

    json pts = json::array();
    for (const auto& cp : crit) pts.push_back(scrap::io::to_json(cp));
    const double tau_T = (c.probe_time - c.pulse.t_p) / c.pulse.t_p;
    out.add("p2_adiabatic.csv", map_csv(p2));
    out.add("adiabaticity.csv", map_csv(ad));
    out.add_json("critical_points.json", {{"probe_time", c.probe_time}, {"tau_T", tau_T}, {"points", pts}});
    for (const auto& cp : crit)
        std::cout << (cp.kind == scrap::CriticalKind::intersection ? "intersection" : "degenerate  ") << " tau="
                  << cp.tau << " sigma=" << cp.sigma << "\n";
    return exit_ok;
}

int cmd_bloch_map(RunContext& ctx, Outputs& out)
{
    const Common c = parse_common(ctx.config);
    const auto grid = scrap::io::parse_grid(section(ctx.config, "grid"));
    grid.validate();
    ctx.resolved = common_json(c);
    ctx.resolved["grid"] = scrap::io::to_json(grid);

    json summary = {{"probe_time", c.probe_time}};
    std::size_t failed = 0, total = 0;
    for (auto [measure, name] : {std::pair{scrap::Measure::full_pa, "pa"}, std::pair{scrap::Measure::full_pb, "pb"}}) {
        const auto map = scrap::efficiency_map(measure, grid, c.pulse, c.probe_time, c.t_i, c.integrator, ctx.workers);
        for (double v : map.values) failed += std::isnan(v) ? 1 : 0;
        total += map.values.size();
        out.add(std::string(name) + ".csv", map_csv(map));
        if (map.missing() < map.values.size()) {
            const auto am = scrap::argmax(map);
            summary[std::string("argmax_") + name] = scrap::io::to_json(am);
            std::cout << "argmax " << name << ": tau=" << am.refined_tau << " sigma=" << am.refined_sigma
                      << " value=" << am.value << "\n";
        } else {
            summary[std::string("argmax_") + name] = nullptr;
        }
    }
    summary["failed_cells"] = failed;
    summary["total_cells"] = total;
    out.add_json("argmax.json", summary);
    if (static_cast<double>(failed) > 0.01 * static_cast<double>(total)) {
        std::cerr << "scrap: " << failed << " of " << total << " cells failed to integrate\n";
        return exit_solver;
    }
    return exit_ok;
}

std::vector<double> resonance_crossings(const scrap::Trajectory& t)
{
    std::vector<double> out;
    const auto& c = *t.controls;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double a = c[i - 1].delta, b = c[i].delta;
        if ((a < 0.0) != (b < 0.0) && a != b) out.push_back(t.times[i - 1] + (t.times[i] - t.times[i - 1]) * a / (a - b));
    }
    return out;
}

int cmd_simulate(RunContext& ctx, Outputs& out)
{
    Common c = parse_common(ctx.config);
    const json& s = section(ctx.config, "simulate");
    scrap::io::detail::check_keys(s, "simulate", {"tau", "sigma", "samples", "fields"});
    std::size_t samples = 2001;
    std::string fields = "gaussian";
    scrap::io::detail::read(s, "simulate", "samples", samples);
    scrap::io::detail::read(s, "simulate", "fields", fields);
    scrap::ReducedCoords rc = scrap::to_reduced(c.pulse);
    scrap::io::detail::read(s, "simulate", "tau", rc.tau);
    scrap::io::detail::read(s, "simulate", "sigma", rc.sigma);
    c.pulse = scrap::with_reduced(c.pulse, rc);
    if (fields != "gaussian" && fields != "zero") throw scrap::ConfigError("simulate.fields: expected 'gaussian' or 'zero'");
    if (!(rc.sigma > 0.0)) throw scrap::DegenerateWidthError("simulate: sigma must be positive");
    ctx.resolved = common_json(c);
    ctx.resolved["simulate"] = {{"tau", rc.tau}, {"sigma", rc.sigma}, {"samples", samples}, {"fields", fields}};

    const auto field = fields == "zero" ? scrap::ControlField::constant(0.0, 0.0) : scrap::ControlField::gaussian(c.pulse);
    const auto traj = scrap::integrate_bloch(field, scrap::south_pole, c.t_i, c.t_f, c.integrator, samples);
    const auto cmp = scrap::compare_with_adiabatic(traj, c.probe_time);

    std::ostringstream os;
    os << "t,r1,r2,r3,delta,omega,rad1,rad2,rad3,na1,na2,na3,AD\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        using scrap::format_double;
        const auto& r = traj.states[i];
        const auto& k = (*traj.controls)[i];
        os << format_double(traj.times[i]);
        for (double v : {r[0], r[1], r[2], k.delta, k.omega, cmp.r_ad[i][0], cmp.r_ad[i][1], cmp.r_ad[i][2],
                         cmp.r_na[i][0], cmp.r_na[i][1], cmp.r_na[i][2], cmp.ad[i]})
            os << ',' << format_double(v);
        os << '\n';
    }
    out.add("trajectory.csv", os.str());
    const auto crossings = resonance_crossings(traj);
    const double p2_probe = [&] {
        std::size_t best = 0;
        for (std::size_t i = 0; i < traj.size(); ++i)
            if (traj.times[i] <= c.probe_time) best = i;
        return scrap::populations(traj.states[best]).p2;
    }();
    out.add_json("summary.json", {{"tau", rc.tau},
                                  {"sigma", rc.sigma},
                                  {"P2_final", scrap::populations(traj.states.back()).p2},
                                  {"P2_probe", p2_probe},
                                  {"nabc_window", {c.t_i, cmp.until}},
                                  {"max_abs_na1", cmp.max_na1},
                                  {"max_abs_na3", cmp.max_na3},
                                  {"resonance_crossings", crossings},
                                  {"norm_drift", traj.norm_drift}});
    std::cout << "P2(t_f)=" << scrap::populations(traj.states.back()).p2 << " max|NA1|=" << cmp.max_na1
              << " max|NA3|=" << cmp.max_na3 << " on [" << c.t_i << ", " << cmp.until << "]\n";
    return exit_ok;
}

struct SolvedExtremal {
    scrap::ShootingProblem problem;
    ShootingConfig shooting;
    scrap::ShootingResult result;
};

SolvedExtremal solve_from_config(RunContext& ctx, const Common& c)
{
    SolvedExtremal s;
    const auto cost = scrap::io::parse_cost(section(ctx.config, "cost"));
    s.shooting = parse_shooting(section(ctx.config, "shooting"), c.integrator);
    s.shooting.options.workers = ctx.workers;
    s.problem = make_problem(c, cost, s.shooting.free_time);
    s.problem.validate();
    const auto guesses = s.shooting.guesses ? *s.shooting.guesses
                                            : scrap::guess_ladder(s.problem, s.shooting.random_restarts, ctx.seed);
    ctx.resolved = common_json(c);
    ctx.resolved["cost"] = scrap::io::to_json(s.problem.cost);
    ctx.resolved["shooting"] = shooting_json(s.shooting);
    s.result = scrap::solve_shooting(s.problem, guesses, s.shooting.options);
    return s;
}

int cmd_pmp(RunContext& ctx, Outputs& out)
{
    const Common c = parse_common(ctx.config);
    auto s = solve_from_config(ctx, c);
    out.add_json("shooting.json", scrap::io::shooting_diagnostics(s.result));
    if (!s.result) {
        std::cerr << "scrap: shooting failed for every guess; see shooting.json\n";
        return exit_solver;
    }
    const auto& e = *s.result.best;
    json summary = scrap::io::to_json(e);
    out.add("extremal.csv", trajectory_csv(e.trajectory));
    out.add_json("extremal.json", summary);
    std::cout << "cost_tag=" << scrap::to_string(e.tag) << " residual=" << e.residual << " H=" << e.H
              << " cost=" << e.cost << " guess=" << e.guess_index << "\n";
    return exit_ok;
}

int cmd_ensemble(RunContext& ctx, Outputs& out)
{
    const Common c = parse_common(ctx.config);
    auto s = solve_from_config(ctx, c);
    const json& ej = section(ctx.config, "ensemble");
    scrap::io::detail::check_keys(ej, "ensemble", {"z", "z_steps", "samples"});
    const auto& cost = s.problem.cost;
    const double z_min = cost.tag == scrap::CostTag::ensemble_zt ? cost.zt.z_min : cost.linear.z_min;
    const double z_max = cost.tag == scrap::CostTag::ensemble_zt ? cost.zt.z_max : cost.linear.z_max;
    std::vector<double> zs{z_min, 0.5 * (z_min + z_max), z_max};
    std::size_t samples = 1001;
    scrap::io::detail::read(ej, "ensemble", "samples", samples);
    if (ej.contains("z")) scrap::io::detail::read(ej, "ensemble", "z", zs);
    if (ej.contains("z_steps")) {
        std::size_t n = 0;
        scrap::io::detail::read(ej, "ensemble", "z_steps", n);
        zs = scrap::ode::uniform_grid(z_min, z_max, n);
    }
    ctx.resolved["ensemble"] = {{"z", zs}, {"samples", samples}};

    out.add_json("shooting.json", scrap::io::shooting_diagnostics(s.result));
    if (!s.result) {
        std::cerr << "scrap: shooting failed for every guess; see shooting.json\n";
        return exit_solver;
    }
    const auto& e = *s.result.best;
    out.add("extremal.csv", trajectory_csv(e.trajectory));
    out.add_json("extremal.json", scrap::io::to_json(e));

    const auto bundle = scrap::ensemble_trajectories(s.problem, e, zs, c.integrator, samples, ctx.workers);
    json members = json::array();
    for (std::size_t i = 0; i < bundle.members.size(); ++i) {
        std::ostringstream name;
        name << "members/z_" << std::setw(3) << std::setfill('0') << i << ".csv";
        out.add(name.str(), trajectory_csv(bundle.members[i].trajectory));
        members.push_back({{"z", bundle.members[i].z}, {"P2_end", bundle.members[i].p2_end}, {"file", name.str()}});
        std::cout << "z=" << bundle.members[i].z << " P2(t_f)=" << bundle.members[i].p2_end << "\n";
    }
    out.add_json("ensemble.json", {{"cost_tag", std::string(scrap::to_string(cost.tag))},
                                   {"members", members},
                                   {"max_endpoint_spread", bundle.max_endpoint_spread}});

    if (cost.tag == scrap::CostTag::ensemble_zt) {
        std::ostringstream os;
        const auto ts = scrap::ode::uniform_grid(c.t_i, c.t_f, 101);
        os << "t\\z";
        for (double z : zs) os << ',' << scrap::format_double(z);
        os << '\n';
        for (double t : ts) {
            os << scrap::format_double(t);
            for (double z : zs) os << ',' << scrap::format_double(1.0 + cost.zt.f(t) * cost.zt.eps(z));
            os << '\n';
        }
        out.add("perturbation_surface.csv", os.str());
    }
    return exit_ok;
}

int cmd_stability(RunContext& ctx, Outputs& out, const std::vector<std::string>& axis_filter,
                  std::optional<double> threshold_override)
{
    const Common c = parse_common(ctx.config);
    if (!section(ctx.config, "cost").contains("tag")) ctx.config["cost"]["tag"] = "ensemble-zt";
    auto cost = scrap::io::parse_cost(section(ctx.config, "cost"));
    if (cost.tag != scrap::CostTag::ensemble_zt) throw scrap::ConfigError("stability: cost.tag must be ensemble-zt");
    auto shooting = parse_shooting(section(ctx.config, "shooting"), c.integrator);
    const json& sj = section(ctx.config, "stability");
    using scrap::io::detail::read;
    scrap::io::detail::check_keys(sj, "stability", {"ranges", "z_samples", "probe_fraction", "threshold", "max_failed_fraction"});
    scrap::StabilityOptions base;
    double max_failed = 0.05;
    read(sj, "stability", "z_samples", base.z_samples);
    read(sj, "stability", "probe_fraction", base.probe_fraction);
    read(sj, "stability", "threshold", base.threshold_fraction);
    read(sj, "stability", "max_failed_fraction", max_failed);
    if (threshold_override) base.threshold_fraction = *threshold_override;
    base.shooting = shooting.options;
    base.random_restarts = shooting.random_restarts;
    base.seed = ctx.seed;

    std::map<std::string, std::array<double, 3>> ranges{{"A", {0.0, 0.5, 41}}, {"k", {0.0, 20.0, 41}}, {"w", {0.0, 40.0, 41}}};
    if (sj.contains("ranges")) {
        const json& rj = sj.at("ranges");
        scrap::io::detail::check_keys(rj, "stability.ranges", {"A", "k", "w"});
        for (const auto& [key, val] : rj.items()) {
            std::vector<double> r;
            read(rj, "stability.ranges", key.c_str(), r);
            if (r.size() != 3 || r[2] < 2 || !(r[1] > r[0]))
                throw scrap::ConfigError("stability.ranges." + key + ": expected [min, max, count >= 2]");
            ranges[key] = {r[0], r[1], r[2]};
        }
    }
    std::vector<std::string> axes = axis_filter.empty() ? std::vector<std::string>{"A", "k", "w"} : axis_filter;
    for (const auto& a : axes)
        if (!scrap::parse_stability_axis(a)) throw scrap::ConfigError("stability: unknown axis '" + a + "'");

    const auto problem = make_problem(c, cost, false);
    problem.validate();
    ctx.resolved = common_json(c);
    ctx.resolved["cost"] = scrap::io::to_json(problem.cost);
    ctx.resolved["shooting"] = shooting_json(shooting);
    json rj = json::object();
    for (const auto& [k, r] : ranges) rj[k] = {r[0], r[1], r[2]};
    ctx.resolved["stability"] = {{"axes", axes},
                                 {"ranges", rj},
                                 {"z_samples", base.z_samples},
                                 {"probe_fraction", base.probe_fraction},
                                 {"threshold", base.threshold_fraction},
                                 {"max_failed_fraction", max_failed}};

    std::vector<scrap::StabilityMap> maps;
    int status = exit_ok;
    for (const auto& a : axes) {
        scrap::StabilityOptions opt = base;
        opt.axis = *scrap::parse_stability_axis(a);
        const auto& r = ranges[a];
        opt.values = scrap::ode::uniform_grid(r[0], r[1], static_cast<std::size_t>(r[2]));
        maps.push_back(scrap::stability_map(problem, opt, ctx.workers));
        const auto& m = maps.back();
        std::ostringstream csv;
        scrap::io::write_stability_csv(csv, m);
        out.add("stability_" + a + ".csv", csv.str());
        out.add_json("stability_" + a + ".json", scrap::io::to_json(m));
        const auto iv = m.acceptance_interval();
        std::cout << "axis " << a << ": ";
        if (iv) std::cout << "[" << iv->first << ", " << iv->second << "]" << (m.interior() ? " interior" : " spans range") << "\n";
        else std::cout << "empty\n";
        const auto nfail = std::count(m.failed.begin(), m.failed.end(), true);
        if (static_cast<double>(nfail) > max_failed * static_cast<double>(m.failed.size())) {
            std::cerr << "scrap: axis " << a << ": " << nfail << " cells failed\n";
            status = exit_solver;
        }
    }
    const auto box = scrap::acceptance_box(maps);
    out.add_json("acceptance.json", {{"A", scrap::io::detail::pair_or_null(box.A)},
                                     {"k", scrap::io::detail::pair_or_null(box.k)},
                                     {"w", scrap::io::detail::pair_or_null(box.w)},
                                     {"complete", box.complete()}});
    return status;
}

int cmd_geophase(RunContext& ctx, Outputs& out, const std::string& path_file, bool allow_open_flag)
{
    const Common c = parse_common(ctx.config);
    const json& gj = section(ctx.config, "geophase");
    using scrap::io::detail::read;
    scrap::io::detail::check_keys(gj, "geophase", {"path", "radius", "file", "allow_open", "samples", "t_end"});
    std::string kind = "circle", file = path_file;
    double radius = 1.0, t_end = c.t_f + 30.0;
    bool allow_open = allow_open_flag;
    std::size_t samples = 257;
    read(gj, "geophase", "path", kind);
    read(gj, "geophase", "radius", radius);
    if (file.empty()) read(gj, "geophase", "file", file);
    read(gj, "geophase", "samples", samples);
    read(gj, "geophase", "t_end", t_end);
    if (!allow_open) read(gj, "geophase", "allow_open", allow_open);
    if (!file.empty()) kind = "file";

    scrap::ControlPath path;
    if (kind == "circle") path = scrap::circle_path(radius, samples);
    else if (kind == "cpr-enclosing") path = scrap::gaussian_cpr_path(c.pulse, -1.0, c.t_i, t_end);
    else if (kind == "cpr-avoiding") path = scrap::gaussian_cpr_path(c.pulse, +1.0, c.t_i, t_end);
    else if (kind == "file") {
        std::ifstream in(file);
        if (!in) throw scrap::ConfigError("geophase: cannot open path file " + file);
        path = scrap::read_path_csv(in);
    } else throw scrap::ConfigError("geophase.path: expected circle, cpr-enclosing, cpr-avoiding or file");

    ctx.resolved = common_json(c);
    ctx.resolved["geophase"] = {{"path", kind}, {"radius", radius}, {"file", file}, {"allow_open", allow_open},
                                {"samples", samples}, {"t_end", t_end}};

    const auto rep = scrap::geometric_phase(path);
    if (!rep.closed && !allow_open)
        throw scrap::ConfigError("geophase: path is open; pass --allow-open to report the polar-angle functional");
    std::ostringstream csv;
    scrap::write_path_csv(csv, path);
    out.add("path.csv", csv.str());
    out.add_json("phase.json", scrap::io::to_json(rep));
    std::cout << "gamma=" << rep.gamma << (rep.closed ? " winding=" + std::to_string(rep.winding) : std::string(" (open path)"))
              << "\n";
    return exit_ok;
}

int cmd_verify(const fs::path& dir)
{
    const json manifest = json::parse(read_file(dir / "manifest.json"));
    int bad = 0;
    for (const auto& f : manifest.at("files")) {
        const fs::path p = dir / f.at("name").get<std::string>();
        std::string status = "OK";
        if (!fs::exists(p)) status = "MISSING";
        else if (sha256_hex(read_file(p)) != f.at("sha256").get<std::string>()) status = "MISMATCH";
        if (status != "OK") ++bad;
        std::cout << status << "  " << f.at("name").get<std::string>() << "\n";
    }
    std::cout << (bad ? "verification failed\n" : "all digests match\n");
    return bad ? exit_mismatch : exit_ok;
}

void write_outputs(const RunContext& ctx, const Outputs& out, int status)
{
    fs::create_directories(ctx.out_dir);
    json files = json::array();
    auto emit = [&](const std::string& name, const std::string& content) {
        const fs::path p = ctx.out_dir / name;
        fs::create_directories(p.parent_path());
        std::ofstream os(p, std::ios::binary);
        os << content;
        if (!os) throw std::runtime_error("cannot write " + p.string());
        files.push_back({{"name", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    };
    json resolved = ctx.resolved;
    resolved["scenario"] = ctx.command;
    if (ctx.config.contains("description")) resolved["description"] = ctx.config.at("description");
    resolved["seed"] = ctx.seed;
    resolved["workers"] = ctx.workers;
    const std::string config_text = resolved.dump(2) + "\n";
    emit("config.json", config_text);
    for (const auto& [name, content] : out.files) emit(name, content);
    json manifest = {{"tool", "scrap"},
                     {"version", SCRAP_VERSION},
                     {"command", ctx.command},
                     {"config_sha256", sha256_hex(config_text)},
                     {"input_sha256", sha256_hex(ctx.config.dump())},
                     {"started", ctx.started},
                     {"finished", utc_now()},
                     {"exit_status", status},
                     {"files", files}};
    std::ofstream(ctx.out_dir / "manifest.json") << manifest.dump(2) << "\n";
}

int exit_code_for(const scrap::ScrapError& e)
{
    switch (e.kind()) {
    case scrap::ErrorKind::config:
    case scrap::ErrorKind::not_applicable: return exit_config;
    case scrap::ErrorKind::solver: return exit_solver;
    case scrap::ErrorKind::singular: return exit_singular;
    }
    return exit_config;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"SCRAP two-level toolkit: landscapes, dynamics, optimal control, ensembles, geometric phase"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("scrap ") + SCRAP_VERSION);

    std::string config_file, out_dir;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    std::vector<std::string> overrides;
    std::optional<double> probe_time;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "Scenario JSON file")->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory (default $SCRAP_OUT/<command> or scrap-out/<command>)");
        sub->add_option("--seed", seed, "Seed for randomised guess restarts");
        sub->add_option("--workers", workers, "Worker threads (0 = hardware parallelism)");
        sub->add_option("--set", overrides, "Override a config field, e.g. --set pulse.S0=2")
            ->expected(1)
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
        sub->add_option("--probe-time", probe_time, "Probe time T");
    };

    auto* adiabatic = app.add_subcommand("adiabatic-map", "Adiabatic P2 and AD maps plus saddle-curve critical points");
    auto* bloch = app.add_subcommand("bloch-map", "Full-dynamics efficiency maps P^a and P^b with their maxima");
    auto* simulate = app.add_subcommand("simulate", "Bloch trajectory with adiabatic reference and NABC");
    auto* pmp = app.add_subcommand("pmp", "Optimal-control extremal by shooting");
    auto* ensemble = app.add_subcommand("ensemble", "Per-position trajectory bundle driven by one optimal pulse pair");
    auto* stability = app.add_subcommand("stability", "Stability maps of the optimal Stark field over A, k, w");
    auto* geophase = app.add_subcommand("geophase", "Geometric phase and winding of a control path");
    auto* verify = app.add_subcommand("verify", "Re-check the digests listed in a run manifest");
    for (auto* s : {adiabatic, bloch, simulate, pmp, ensemble, stability, geophase}) add_common(s);

    std::optional<double> tau, sigma, threshold;
    std::string cost_tag, path_file, verify_dir;
    std::vector<std::string> axes;
    bool allow_open = false;
    simulate->add_option("--tau", tau, "Reduced delay (t_s - t_p) / t_p");
    simulate->add_option("--sigma", sigma, "Reduced width sigma_s / sigma_p");
    pmp->add_option("--cost", cost_tag, "Cost functional tag");
    ensemble->add_option("--cost", cost_tag, "Cost functional tag");
    stability->add_option("--cost", cost_tag, "Cost functional tag (must be ensemble-zt)");
    stability->add_option("--axis", axes, "Restrict to these axes (A, k, w)")->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    stability->add_option("--threshold", threshold, "Relative spread threshold");
    geophase->add_option("--path-file", path_file, "CSV path t,delta,omega");
    geophase->add_flag("--allow-open", allow_open, "Accept open paths");
    verify->add_option("dir", verify_dir, "Run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    if (verify->parsed()) {
        try {
            return cmd_verify(verify_dir);
        } catch (const std::exception& e) {
            std::cerr << "scrap: " << e.what() << "\n";
            return exit_config;
        }
    }

    RunContext ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    ctx.seed = seed;
    ctx.workers = scrap::resolve_workers(workers);
    ctx.started = utc_now();
    Outputs out;
    int status = exit_ok;
    try {
        if (!config_file.empty()) {
            try {
                ctx.config = json::parse(read_file(config_file));
            } catch (const json::exception& e) {
                throw scrap::ConfigError(std::string("config: ") + e.what());
            }
        }
        if (!ctx.config.is_object()) throw scrap::ConfigError("config: top level must be an object");
        if (ctx.config.contains("seed") && !config_file.empty() && seed == 0) ctx.seed = ctx.config.at("seed").get<std::uint64_t>();
        if (ctx.config.contains("workers") && workers == 0) ctx.workers = scrap::resolve_workers(ctx.config.at("workers").get<unsigned>());
        for (const auto& o : overrides) apply_override(ctx.config, o);
        if (probe_time) ctx.config["probe_time"] = *probe_time;
        if (tau) ctx.config["simulate"]["tau"] = *tau;
        if (sigma) ctx.config["simulate"]["sigma"] = *sigma;
        if (!cost_tag.empty()) ctx.config["cost"]["tag"] = cost_tag;

        if (!out_dir.empty()) ctx.out_dir = out_dir;
        else if (const char* env = std::getenv("SCRAP_OUT"); env && *env) ctx.out_dir = fs::path(env) / ctx.command;
        else ctx.out_dir = fs::path("scrap-out") / ctx.command;

        const auto& cmd = ctx.command;
        if (cmd == "adiabatic-map") status = cmd_adiabatic_map(ctx, out);
        else if (cmd == "bloch-map") status = cmd_bloch_map(ctx, out);
        else if (cmd == "simulate") status = cmd_simulate(ctx, out);
        else if (cmd == "pmp") status = cmd_pmp(ctx, out);
        else if (cmd == "ensemble") status = cmd_ensemble(ctx, out);
        else if (cmd == "stability") status = cmd_stability(ctx, out, axes, threshold);
        else if (cmd == "geophase") status = cmd_geophase(ctx, out, path_file, allow_open);
    } catch (const scrap::ScrapError& e) {
        std::cerr << "scrap " << ctx.command << ": " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const json::exception& e) {
        std::cerr << "scrap " << ctx.command << ": config: " << e.what() << "\n";
        return exit_config;
    }
    try {
        write_outputs(ctx, out, status);
    } catch (const std::exception& e) {
        std::cerr << "scrap " << ctx.command << ": " << e.what() << "\n";
        return exit_config;
    }
    std::cout << "outputs: " << ctx.out_dir.string() << "\n";
    return status;
}
