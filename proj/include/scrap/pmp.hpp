#pragma once

// Pontryagin maximum principle for the two-level transfer problem.
//
// With l = R x p the pseudo-Hamiltonian reads H = l1 Omega + l3 Delta + p0 r,
// p0 = -1/2. Maximising H over the controls gives feedback laws; substituting
// them into dR/dt = w x R, dp/dt = w x p yields closed extremal systems whose
// initial costate p(t_i) is found by shooting.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scrap/dynamics.hpp"
#include "scrap/parallel.hpp"
#include "scrap/perturbation.hpp"

namespace scrap {

enum class CostTag { energy, fixed_pump_energy, ensemble_linear, ensemble_zt, mixed_adiabatic };

inline std::string_view to_string(CostTag tag) noexcept
{
    switch (tag) {
    case CostTag::energy: return "energy";
    case CostTag::fixed_pump_energy: return "fixed-pump-energy";
    case CostTag::ensemble_linear: return "ensemble-linear";
    case CostTag::ensemble_zt: return "ensemble-zt";
    case CostTag::mixed_adiabatic: return "mixed-adiabatic";
    }
    return "?";
}

inline std::optional<CostTag> parse_cost_tag(std::string_view s) noexcept
{
    for (auto tag : {CostTag::energy, CostTag::fixed_pump_energy, CostTag::ensemble_linear, CostTag::ensemble_zt,
                     CostTag::mixed_adiabatic})
        if (to_string(tag) == s) return tag;
    return std::nullopt;
}

struct CostFunctional {
    static constexpr double p0 = -0.5;

    CostTag tag = CostTag::energy;
    PulseParams pump;            // fixed-pump-energy: the prescribed Gaussian pump
    LinearInhom linear;          // ensemble-linear
    SpaceTimePerturbation zt;    // ensemble-zt
    double energy_weight = 1.0;  // mixed-adiabatic: weight of Delta^2 + Omega^2

    void validate() const
    {
        switch (tag) {
        case CostTag::fixed_pump_energy: pump.validate(); break;
        case CostTag::ensemble_linear: linear.validate(); break;
        case CostTag::ensemble_zt: zt.validate(pump.S0); break;
        case CostTag::mixed_adiabatic:
            if (!(energy_weight >= 0.0)) throw ConfigError("CostFunctional: energy_weight must be non-negative");
            break;
        default: break;
        }
    }

    /// Position of the reference atom for the ensemble tags.
    double z_ref() const noexcept { return tag == CostTag::ensemble_zt ? zt.z_min : linear.z_min; }
};

/// Factor multiplying Delta in the generator seen by the reference atom.
inline double coupling_factor(const CostFunctional& cost, double t) noexcept
{
    if (cost.tag != CostTag::ensemble_zt) return 1.0;
    return 1.0 + cost.zt.f(t) * cost.zt.eps(cost.z_ref());
}

/// Running cost r(alpha, t).
inline double running_cost(const CostFunctional& cost, double t, const ControlSample& s)
{
    const double d2 = s.delta * s.delta, o2 = s.omega * s.omega;
    switch (cost.tag) {
    case CostTag::energy:
    case CostTag::fixed_pump_energy: return d2 + o2;
    case CostTag::ensemble_linear: return ensemble_cost_coeff_linear(cost.linear) * d2 + cost.linear.Z() * o2;
    case CostTag::ensemble_zt: return zt_moments(t, cost.zt).I2 * d2 + cost.zt.Z() * o2;
    case CostTag::mixed_adiabatic:
        if (!s.has_rates) throw NotApplicableError("running_cost: mixed-adiabatic cost needs control rates");
        return s.ddelta_dt * s.omega - s.domega_dt * s.delta + cost.energy_weight * (d2 + o2);
    }
    return 0.0;
}

/// H = l1 Omega + g l3 Delta + p0 r(alpha, t), with g = 1 except for the
/// space-time ensemble where g is the reference atom's perturbation factor.
/// For the mixed-adiabatic tag the adjoint terms of the promoted controls are
/// not included; see mixed_adiabatic_system for the full expression.
inline double pseudo_hamiltonian(const BlochVector& r, const Vec3& p, const ControlSample& s,
                                 const CostFunctional& cost, double t = 0.0)
{
    const Vec3 l = cross(r, p);
    return l[0] * s.omega + coupling_factor(cost, t) * l[2] * s.delta + CostFunctional::p0 * running_cost(cost, t, s);
}

inline ControlSample optimal_fields_energy(const Vec3& l) noexcept { return {l[2], l[0]}; }

inline double optimal_stark_fixed_pump(const Vec3& l) noexcept { return l[2]; }

/// Feedback controls of the six-state tags, with exact rates from
/// dl/dt = w x l.
inline ControlSample feedback_controls(const CostFunctional& cost, double t, const Vec3& l)
{
    ControlSample s;
    s.has_rates = true;
    switch (cost.tag) {
    case CostTag::energy: {
        s.delta = l[2];
        s.omega = l[0];
        const Vec3 dl = cross(Vec3{s.omega, 0.0, s.delta}, l);
        s.ddelta_dt = dl[2];
        s.domega_dt = dl[0];
        return s;
    }
    case CostTag::fixed_pump_energy: {
        s.delta = optimal_stark_fixed_pump(l);
        s.omega = gaussian_pump(t, cost.pump);
        s.domega_dt = gaussian_pump_rate(t, cost.pump);
        s.ddelta_dt = cross(Vec3{s.omega, 0.0, s.delta}, l)[2];
        return s;
    }
    case CostTag::ensemble_linear: {
        const double c = ensemble_cost_coeff_linear(cost.linear), Z = cost.linear.Z();
        s.delta = l[2] / c;
        s.omega = l[0] / Z;
        const Vec3 dl = cross(Vec3{s.omega, 0.0, s.delta}, l);
        s.ddelta_dt = dl[2] / c;
        s.domega_dt = dl[0] / Z;
        return s;
    }
    case CostTag::ensemble_zt: {
        const auto& zt = cost.zt;
        const double I2 = zt_moments(t, zt).I2;
        if (!(I2 > 0.0)) throw NotApplicableError("feedback_controls: I2 must be positive");
        const double g = coupling_factor(cost, t);
        const double dg = zt.df_dt(t) * zt.eps(cost.z_ref());
        const double Z = zt.Z();
        s.delta = g * l[2] / I2;
        s.omega = l[0] / Z;
        const Vec3 dl = cross(Vec3{s.omega, 0.0, g * s.delta}, l);
        s.ddelta_dt = (dg * l[2] + g * dl[2]) / I2 - g * l[2] * zt_moment_I2_rate(t, zt) / (I2 * I2);
        s.domega_dt = dl[0] / Z;
        return s;
    }
    case CostTag::mixed_adiabatic: break;
    }
    throw NotApplicableError("feedback_controls: mixed-adiabatic controls are states; use mixed_adiabatic_system");
}

/// Closed (R, p) system for the six-state tags.
inline ExtremalSystem<6> extremal_rhs(const CostFunctional& cost)
{
    if (cost.tag == CostTag::mixed_adiabatic)
        throw NotApplicableError("extremal_rhs: mixed-adiabatic needs the augmented system (mixed_adiabatic_system)");
    cost.validate();
    ExtremalSystem<6> sys;
    sys.rhs = [cost](double t, const ode::State<6>& y, ode::State<6>& dy) {
        const Vec3 r{y[0], y[1], y[2]}, p{y[3], y[4], y[5]};
        const ControlSample s = feedback_controls(cost, t, cross(r, p));
        const Vec3 w{s.omega, 0.0, coupling_factor(cost, t) * s.delta};
        const Vec3 dr = cross(w, r), dp = cross(w, p);
        dy = {dr[0], dr[1], dr[2], dp[0], dp[1], dp[2]};
    };
    sys.controls = [cost](double t, const ode::State<6>& y) {
        return feedback_controls(cost, t, cross(Vec3{y[0], y[1], y[2]}, Vec3{y[3], y[4], y[5]}));
    };
    sys.hamiltonian = [cost](double t, const ode::State<6>& y) {
        const Vec3 r{y[0], y[1], y[2]}, p{y[3], y[4], y[5]};
        return pseudo_hamiltonian(r, p, feedback_controls(cost, t, cross(r, p)), cost, t);
    };
    return sys;
}

/// Ten-state system for r = dDelta/dt Omega - dOmega/dt Delta + c (Delta^2 + Omega^2)
/// with state (R, p, Delta, Omega, q1, q2), where (q1, q2) are the adjoints
/// of the promoted controls and u = (dDelta/dt, dOmega/dt) are the new
/// controls.
///
/// H = l1 Omega + l3 Delta + q1 u1 + q2 u2 - (u1 Omega - u2 Delta + c (Delta^2 + Omega^2)) / 2
/// is linear in u, so the extremal runs on a singular arc: dH/du = 0 gives
/// q1 = Omega / 2 and q2 = -Delta / 2, and differentiating these against the
/// adjoint equations fixes
///     u1 = l1 - c Omega,   u2 = c Delta - l3.
/// On the arc H = l1 Omega + l3 Delta - c (Delta^2 + Omega^2) / 2, constant in t.
inline ExtremalSystem<10> mixed_adiabatic_system(double energy_weight = 1.0)
{
    if (!(energy_weight >= 0.0)) throw ConfigError("mixed_adiabatic_system: energy_weight must be non-negative");
    const double c = energy_weight;
    auto controls = [c](double, const ode::State<10>& y) {
        const Vec3 l = cross(Vec3{y[0], y[1], y[2]}, Vec3{y[3], y[4], y[5]});
        const double delta = y[6], omega = y[7];
        return ControlSample{delta, omega, l[0] - c * omega, c * delta - l[2], true};
    };
    ExtremalSystem<10> sys;
    sys.rhs = [c, controls](double t, const ode::State<10>& y, ode::State<10>& dy) {
        const Vec3 r{y[0], y[1], y[2]}, p{y[3], y[4], y[5]};
        const Vec3 l = cross(r, p);
        const ControlSample s = controls(t, y);
        const Vec3 w{s.omega, 0.0, s.delta};
        const Vec3 dr = cross(w, r), dp = cross(w, p);
        const double u1 = s.ddelta_dt, u2 = s.domega_dt;
        dy = {dr[0], dr[1], dr[2], dp[0], dp[1], dp[2], u1, u2,
              -l[2] - 0.5 * u2 + c * s.delta, -l[0] + 0.5 * u1 + c * s.omega};
    };
    sys.controls = controls;
    sys.hamiltonian = [c, controls](double t, const ode::State<10>& y) {
        const Vec3 l = cross(Vec3{y[0], y[1], y[2]}, Vec3{y[3], y[4], y[5]});
        const ControlSample s = controls(t, y);
        const double u1 = s.ddelta_dt, u2 = s.domega_dt;
        return l[0] * s.omega + l[2] * s.delta + y[8] * u1 + y[9] * u2 -
               0.5 * (u1 * s.omega - u2 * s.delta + c * (s.delta * s.delta + s.omega * s.omega));
    };
    return sys;
}

/// Integral of the running cost along a sampled extremal.
inline double evaluate_cost(const Trajectory& traj, const CostFunctional& cost)
{
    if (!traj.controls || traj.size() < 2) throw NotApplicableError("evaluate_cost: trajectory carries no controls");
    std::vector<double> r(traj.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = running_cost(cost, traj.times[i], (*traj.controls)[i]);
    return ode::integrate_samples(r, traj.times.front(), traj.times.back());
}

struct ShootingProblem {
    BlochVector r_start = south_pole;
    BlochVector r_target = north_pole;
    double t_i = 0.0;
    double t_f = 100.0;
    CostFunctional cost;
    /// Also adjust t_f so that H(t_i) = 0 (free final time).
    bool free_time = false;

    void validate() const
    {
        if (std::abs(norm(r_start) - 1.0) > 1e-9 || std::abs(norm(r_target) - 1.0) > 1e-9)
            throw ConfigError("ShootingProblem: start and target must lie on the unit sphere");
        if (!(t_f > t_i)) throw ConfigError("ShootingProblem: t_f must exceed t_i");
        cost.validate();
    }

    /// p(t_i), then (Delta(t_i), Omega(t_i)) for the mixed tag, then t_f in free-time mode.
    std::size_t n_unknowns() const noexcept
    {
        return (cost.tag == CostTag::mixed_adiabatic ? 5 : 3) + (free_time ? 1 : 0);
    }
};

struct Extremal {
    CostTag tag = CostTag::energy;
    std::vector<double> unknowns;
    Vec3 p_initial{};
    double t_f = 0.0;
    Trajectory trajectory;
    double residual = 0.0;
    int iterations = 0;
    double cost = 0.0;
    double H = 0.0;     // H(t_i)
    double l_sq = 0.0;  // |l(t_i)|^2
    ConservationReport conservation;
    std::size_t guess_index = 0;
    std::vector<double> residual_history;
};

struct ShootingAttempt {
    std::size_t index = 0;
    std::vector<double> guess;
    std::vector<double> final_unknowns;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    std::string status;  // converged | rejected | stalled | diverged | integration-failed | not-run
};

struct ShootingOptions {
    double tol = 1e-4;
    double polish_tol = 1e-11;  // iterations continue toward this once below tol
    int max_iterations = 80;
    IntegratorConfig integrator{};
    std::size_t samples = 2001;
    unsigned workers = 1;
    bool collect_all = false;  // solve every guess and rank the converged ones by cost
    std::function<bool(const Extremal&)> accept;
};

struct ShootingResult {
    std::optional<Extremal> best;
    std::vector<Extremal> converged;  // ascending cost
    std::vector<ShootingAttempt> attempts;

    explicit operator bool() const noexcept { return best.has_value(); }

    const Extremal& value() const
    {
        if (best) return *best;
        std::ostringstream os;
        os << "shooting failed for all " << attempts.size() << " guesses";
        std::size_t shown = 0;
        for (const auto& a : attempts) {
            if (a.status == "not-run") continue;
            if (shown++ == 8) {
                os << "; ...";
                break;
            }
            os << "; #" << a.index << ' ' << a.status << " residual=" << a.residual << " it=" << a.iterations;
        }
        throw ShootingFailure(os.str());
    }
};

/// Deterministic ladder: magnitudes {0.05, 0.1, 0.2, 0.5, 1, 2} along
/// +-e1, +-e2, +-e3 and the eight cube diagonals, followed by seeded random
/// directions with log-uniform magnitudes in [0.05, 2].
inline std::vector<Vec3> costate_guess_ladder(std::size_t random_restarts = 64, std::uint64_t seed = 0)
{
    std::vector<Vec3> dirs;
    for (int a = 0; a < 3; ++a)
        for (double s : {1.0, -1.0}) {
            Vec3 v{};
            v[a] = s;
            dirs.push_back(v);
        }
    const double d = 1.0 / std::sqrt(3.0);
    for (double a : {1.0, -1.0})
        for (double b : {1.0, -1.0})
            for (double c : {1.0, -1.0}) dirs.push_back({a * d, b * d, c * d});

    std::vector<Vec3> out;
    for (double m : {0.05, 0.1, 0.2, 0.5, 1.0, 2.0})
        for (const auto& v : dirs) out.push_back(m * v);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> logm(std::log(0.05), std::log(2.0));
    for (std::size_t i = 0; i < random_restarts; ++i) {
        Vec3 v{gauss(rng), gauss(rng), gauss(rng)};
        const double n = norm(v);
        if (n == 0.0) v = {1.0, 0.0, 0.0};
        out.push_back((std::exp(logm(rng)) / (n == 0.0 ? 1.0 : n)) * v);
    }
    return out;
}

/// Guess vectors matching problem.n_unknowns(). The mixed tag pairs every
/// costate guess with a small negative initial detuning and a small pump,
/// the configuration an adiabatic passage from the south pole starts from.
inline std::vector<std::vector<double>> guess_ladder(const ShootingProblem& problem, std::size_t random_restarts = 64,
                                                     std::uint64_t seed = 0)
{
    std::vector<std::vector<double>> out;
    for (const auto& p : costate_guess_ladder(random_restarts, seed)) {
        std::vector<double> g{p[0], p[1], p[2]};
        if (problem.cost.tag == CostTag::mixed_adiabatic) {
            const double scale = std::max(norm(p), 0.05);
            g.push_back(-scale);
            g.push_back(0.5 * scale);
        }
        if (problem.free_time) g.push_back(problem.t_f);
        out.push_back(std::move(g));
    }
    return out;
}

/// Rejects extremals whose Stark field vanishes identically (constant-pump
/// Rabi pi-pulses), keeping the chirped members of the family.
inline std::function<bool(const Extremal&)> stark_active(double rel_threshold = 1e-3)
{
    return [rel_threshold](const Extremal& e) {
        double dmax = 0.0, omax = 0.0;
        for (const auto& s : *e.trajectory.controls) {
            dmax = std::max(dmax, std::abs(s.delta));
            omax = std::max(omax, std::abs(s.omega));
        }
        return dmax > rel_threshold * std::max(omax, 1e-300);
    };
}

namespace detail {

struct LmOutcome {
    std::vector<double> u;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    std::string status;
    std::vector<double> history;
};

/// Levenberg-Marquardt on a residual F: R^n -> R^m with a central-difference
/// Jacobian. Accepted steps strictly decrease |F|.
template <class F>
LmOutcome levenberg_marquardt(F&& fun, std::vector<double> u, const ShootingOptions& opt)
{
    LmOutcome out;
    auto r = fun(u);
    if (!r) {
        out.u = std::move(u);
        out.status = "integration-failed";
        return out;
    }
    const std::size_t n = u.size(), m = r->size();
    auto vnorm = [](const Eigen::VectorXd& v) { return v.norm(); };
    auto to_eigen = [](const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); };

    Eigen::VectorXd res = to_eigen(*r);
    double rn = vnorm(res);
    out.history.push_back(rn);
    double lambda = -1.0;
    out.status = "stalled";

    for (int it = 0; it < opt.max_iterations; ++it) {
        if (rn <= opt.polish_tol) break;
        Eigen::MatrixXd J(m, n);
        bool ok = true;
        for (std::size_t j = 0; j < n && ok; ++j) {
            const double h = 1e-6 * std::max(std::abs(u[j]), 1e-3);
            auto up = u, um = u;
            up[j] += h;
            um[j] -= h;
            const auto fp = fun(up), fm = fun(um);
            if (!fp || !fm) {
                ok = false;
                break;
            }
            for (std::size_t i = 0; i < m; ++i) J(i, j) = ((*fp)[i] - (*fm)[i]) / (2.0 * h);
        }
        if (!ok) {
            out.status = "integration-failed";
            break;
        }
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * res;
        if (lambda < 0.0) lambda = std::max(1e-3 * A.diagonal().maxCoeff(), 1e-12);

        bool accepted = false;
        Eigen::VectorXd step;
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::MatrixXd M = A;
            M.diagonal().array() += lambda;
            step = -M.ldlt().solve(g);
            std::vector<double> trial(n);
            for (std::size_t j = 0; j < n; ++j) trial[j] = u[j] + step[j];
            const auto rt = fun(trial);
            if (rt) {
                Eigen::VectorXd rv = to_eigen(*rt);
                const double tn = vnorm(rv);
                if (tn < rn) {
                    u = std::move(trial);
                    res = std::move(rv);
                    rn = tn;
                    lambda = std::max(lambda / 3.0, 1e-15);
                    accepted = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        out.iterations = it + 1;
        out.history.push_back(rn);
        if (!accepted) break;
        double un = 0.0;
        for (double v : u) un = std::max(un, std::abs(v));
        if (!std::isfinite(un) || un > 1e4) {
            out.status = "diverged";
            break;
        }
        if (step.norm() < 1e-15 * (1.0 + un)) break;
    }
    out.u = std::move(u);
    out.residual = rn;
    if (rn < opt.tol) out.status = "converged";
    return out;
}

template <std::size_t N>
ode::State<N> initial_state(const ShootingProblem& problem, const std::vector<double>& u)
{
    if (u.size() < (N == 10 ? 5u : 3u)) throw ConfigError("initial_state: too few unknowns");
    ode::State<N> y{};
    for (int i = 0; i < 3; ++i) {
        y[i] = problem.r_start[i];
        y[3 + i] = u[i];
    }
    if constexpr (N == 10) {
        y[6] = u[3];
        y[7] = u[4];
        y[8] = 0.5 * u[4];
        y[9] = -0.5 * u[3];
    }
    return y;
}

template <std::size_t N>
ShootingResult shoot(const ShootingProblem& problem, const ExtremalSystem<N>& sys,
                     const std::vector<std::vector<double>>& guesses, const ShootingOptions& opt)
{
    const std::size_t nu = problem.n_unknowns();
    const std::size_t base = nu - (problem.free_time ? 1 : 0);
    auto end_time = [&](const std::vector<double>& u) { return problem.free_time ? u[base] : problem.t_f; };

    auto residual = [&](const std::vector<double>& u) -> std::optional<std::vector<double>> {
        const double tf = end_time(u);
        if (!(tf > problem.t_i)) return std::nullopt;
        const auto y0 = initial_state<N>(problem, u);
        try {
            const auto y1 = ode::integrate_to<N>(sys.rhs, y0, problem.t_i, tf, opt.integrator);
            std::vector<double> r{y1[0] - problem.r_target[0], y1[1] - problem.r_target[1],
                                  y1[2] - problem.r_target[2]};
            if (problem.free_time) r.push_back(sys.hamiltonian(problem.t_i, y0));
            for (double v : r)
                if (!std::isfinite(v)) return std::nullopt;
            return r;
        } catch (const ScrapError&) {
            return std::nullopt;
        }
    };

    ShootingResult result;
    result.attempts.resize(guesses.size());
    std::vector<std::optional<Extremal>> found(guesses.size());
    const unsigned workers = resolve_workers(opt.workers);
    const std::size_t batch = opt.collect_all ? guesses.size() : workers;

    for (std::size_t start = 0; start < guesses.size(); start += batch) {
        const std::size_t stop = std::min(guesses.size(), start + batch);
        parallel_for(stop - start, workers, [&](std::size_t k) {
            const std::size_t i = start + k;
            auto& att = result.attempts[i];
            att.index = i;
            att.guess = guesses[i];
            auto lm = levenberg_marquardt(residual, guesses[i], opt);
            att.final_unknowns = lm.u;
            att.residual = lm.residual;
            att.iterations = lm.iterations;
            att.status = lm.status;
            if (lm.status != "converged") return;

            Extremal e;
            e.tag = problem.cost.tag;
            e.unknowns = lm.u;
            e.p_initial = {lm.u[0], lm.u[1], lm.u[2]};
            e.t_f = end_time(lm.u);
            e.residual = lm.residual;
            e.iterations = lm.iterations;
            e.guess_index = i;
            e.residual_history = std::move(lm.history);
            try {
                e.trajectory = integrate_extremal<N>(sys, initial_state<N>(problem, lm.u), problem.t_i, e.t_f,
                                                     opt.integrator, opt.samples);
            } catch (const ScrapError&) {
                att.status = "integration-failed";
                return;
            }
            e.conservation = conservation_report(e.trajectory);
            e.H = e.trajectory.hamiltonian->front();
            const Vec3 l0 = cross(problem.r_start, e.p_initial);
            e.l_sq = dot(l0, l0);
            e.cost = evaluate_cost(e.trajectory, problem.cost);
            if (opt.accept && !opt.accept(e)) {
                att.status = "rejected";
                return;
            }
            found[i] = std::move(e);
        });
        if (!opt.collect_all && std::any_of(found.begin() + start, found.begin() + stop, [](auto& f) { return f.has_value(); }))
            break;
    }
    for (auto& a : result.attempts)
        if (a.status.empty()) a.status = "not-run";

    for (auto& f : found)
        if (f) {
            if (!result.best) result.best = *f;
            result.converged.push_back(std::move(*f));
        }
    std::stable_sort(result.converged.begin(), result.converged.end(),
                     [](const Extremal& a, const Extremal& b) { return a.cost < b.cost; });
    return result;
}

} // namespace detail

/// Solves the fixed-endpoint problem from each guess in index order. The
/// first guess (lowest index) whose refined endpoint residual falls below
/// tol and which passes the optional shape filter wins.
inline ShootingResult solve_shooting(const ShootingProblem& problem, const std::vector<std::vector<double>>& guesses,
                                     const ShootingOptions& opt = {})
{
    problem.validate();
    if (guesses.empty()) throw ConfigError("solve_shooting: at least one guess is required");
    if (!(opt.tol > 0.0)) throw ConfigError("solve_shooting: tol must be positive");
    opt.integrator.validate();
    for (const auto& g : guesses)
        if (g.size() != problem.n_unknowns()) throw ConfigError("solve_shooting: guess has the wrong dimension");

    if (problem.cost.tag == CostTag::mixed_adiabatic)
        return detail::shoot<10>(problem, mixed_adiabatic_system(problem.cost.energy_weight), guesses, opt);
    return detail::shoot<6>(problem, extremal_rhs(problem.cost), guesses, opt);
}

/// Integrates an extremal from known unknowns without any shooting.
inline Trajectory integrate_from_unknowns(const ShootingProblem& problem, const std::vector<double>& u,
                                          const IntegratorConfig& cfg = {}, std::size_t samples = 2001)
{
    problem.validate();
    if (u.size() != problem.n_unknowns()) throw ConfigError("integrate_from_unknowns: wrong number of unknowns");
    const double tf = problem.free_time ? u.back() : problem.t_f;
    if (problem.cost.tag == CostTag::mixed_adiabatic)
        return integrate_extremal<10>(mixed_adiabatic_system(problem.cost.energy_weight),
                                      detail::initial_state<10>(problem, u), problem.t_i, tf, cfg, samples);
    return integrate_extremal<6>(extremal_rhs(problem.cost), detail::initial_state<6>(problem, u), problem.t_i, tf, cfg,
                                 samples);
}

} // namespace scrap
