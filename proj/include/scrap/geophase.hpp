#pragma once

// Geometric phase of the adiabatic state along paths in the (Delta, Omega)
// control plane. The phase is half the polar angle swept around the
// conical intersection at the origin, so closed loops give pi times their
// winding number. Windings are counted positive when the path turns from
// the Omega axis towards the Delta axis, i.e. as -1/(2 pi) times the
// increment of atan2(Omega, Delta).

#include <array>
#include <cmath>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "scrap/dynamics.hpp"

namespace scrap {

/// Sampled control path (t, Delta, Omega).
struct ControlPath {
    std::vector<double> t, delta, omega;
    double closure_tol = 1e-6;

    std::size_t size() const noexcept { return t.size(); }

    bool closed() const noexcept
    {
        if (size() < 2) return false;
        return std::abs(delta.back() - delta.front()) + std::abs(omega.back() - omega.front()) < closure_tol;
    }

    void push_back(double time, double d, double o)
    {
        t.push_back(time);
        delta.push_back(d);
        omega.push_back(o);
    }

    void validate() const
    {
        if (size() < 2 || delta.size() != size() || omega.size() != size())
            throw ConfigError("ControlPath: need at least two samples of equal-length (t, delta, omega)");
        for (std::size_t i = 0; i < size(); ++i) {
            if (!std::isfinite(delta[i]) || !std::isfinite(omega[i])) throw ConfigError("ControlPath: non-finite sample");
            if (delta[i] == 0.0 && omega[i] == 0.0)
                throw ConicalIntersectionError("ControlPath: sample at the conical intersection");
        }
    }

    static ControlPath from_trajectory(const Trajectory& traj)
    {
        if (!traj.controls) throw NotApplicableError("ControlPath::from_trajectory: trajectory has no controls");
        ControlPath p;
        for (std::size_t i = 0; i < traj.size(); ++i) p.push_back(traj.times[i], (*traj.controls)[i].delta, (*traj.controls)[i].omega);
        return p;
    }
};

/// Real part of the Berry connection: (-Omega, Delta) / (2 (Delta^2 + Omega^2)).
inline std::array<double, 2> vector_potential(const ControlSample& s)
{
    const double r2 = s.delta * s.delta + s.omega * s.omega;
    if (r2 == 0.0) throw ConicalIntersectionError("vector_potential: Delta = Omega = 0");
    return {-s.omega / (2.0 * r2), s.delta / (2.0 * r2)};
}

namespace detail {

/// Signed angle subtended at the origin by the straight segment a -> b.
inline double segment_angle(double ax, double ay, double bx, double by)
{
    if ((ax == 0.0 && ay == 0.0) || (bx == 0.0 && by == 0.0))
        throw ConicalIntersectionError("control path touches the conical intersection");
    const double cr = ax * by - ay * bx;
    const double dt = ax * bx + ay * by;
    if (cr == 0.0 && dt < 0.0) throw ConicalIntersectionError("control path segment passes through the conical intersection");
    return std::atan2(cr, dt);
}

} // namespace detail

/// Total polar-angle increment of atan2(Omega, Delta) along the polygonal
/// path, including the closing segment when the path is closed. Steps at or
/// beyond `max_step` radians are reported as under-resolved.
inline double polar_angle_increment(const ControlPath& path, double max_step = 0.99 * std::numbers::pi)
{
    path.validate();
    double total = 0.0;
    auto add = [&](std::size_t i, std::size_t j) {
        const double a = detail::segment_angle(path.delta[i], path.omega[i], path.delta[j], path.omega[j]);
        if (std::abs(a) >= max_step)
            throw RefinementNeededError("control path under-resolved: adjacent samples subtend " + std::to_string(a) +
                                        " rad at the origin");
        total += a;
    };
    for (std::size_t i = 0; i + 1 < path.size(); ++i) add(i, i + 1);
    if (path.closed()) add(path.size() - 1, 0);
    return total;
}

inline int winding_number(const ControlPath& path, double max_step = 0.99 * std::numbers::pi)
{
    if (!path.closed()) throw NotApplicableError("winding_number: path is not closed");
    return -static_cast<int>(std::lround(polar_angle_increment(path, max_step) / (2.0 * std::numbers::pi)));
}

struct PhaseReport {
    double gamma = 0.0;           // in [0, 2 pi)
    double angle_increment = 0.0; // unwrapped polar angle swept
    bool closed = false;
    int winding = 0;              // closed paths only
    std::vector<std::string> warnings;
};

/// gamma = |swept polar angle| / 2, reduced mod 2 pi.
inline PhaseReport geometric_phase(const ControlPath& path, double max_step = 0.99 * std::numbers::pi)
{
    PhaseReport rep;
    rep.closed = path.closed();
    rep.angle_increment = polar_angle_increment(path, max_step);
    if (rep.closed) {
        const long turns = std::lround(rep.angle_increment / (2.0 * std::numbers::pi));
        rep.winding = -static_cast<int>(turns);
        rep.angle_increment = 2.0 * std::numbers::pi * static_cast<double>(turns);
    } else {
        rep.warnings.push_back("open path: value is the polar-angle functional, not a closed-loop Berry phase");
    }
    rep.gamma = std::fmod(0.5 * std::abs(rep.angle_increment), 2.0 * std::numbers::pi);
    return rep;
}

/// Samples f on [t0, t1], bisecting every interval until adjacent samples
/// subtend less than `max_step` at the origin.
inline ControlPath refine_path(const std::function<std::array<double, 2>(double)>& f, double t0, double t1,
                               std::size_t initial = 64, double max_step = std::numbers::pi / 8, int max_depth = 40)
{
    if (!(t1 > t0) || initial < 2) throw ConfigError("refine_path: need t1 > t0 and at least two initial samples");
    ControlPath out;
    auto eval = [&](double t) {
        const auto v = f(t);
        if (v[0] == 0.0 && v[1] == 0.0) throw ConicalIntersectionError("refine_path: path passes the conical intersection");
        return v;
    };
    std::function<void(double, std::array<double, 2>, double, std::array<double, 2>, int)> split =
        [&](double ta, std::array<double, 2> a, double tb, std::array<double, 2> b, int depth) {
            if (std::abs(detail::segment_angle(a[0], a[1], b[0], b[1])) < max_step) {
                out.push_back(tb, b[0], b[1]);
                return;
            }
            if (depth >= max_depth) throw RefinementNeededError("refine_path: angular step does not resolve");
            const double tm = 0.5 * (ta + tb);
            const auto m = eval(tm);
            split(ta, a, tm, m, depth + 1);
            split(tm, m, tb, b, depth + 1);
        };
    const auto grid = ode::uniform_grid(t0, t1, initial);
    auto prev = eval(grid[0]);
    out.push_back(grid[0], prev[0], prev[1]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const auto cur = eval(grid[i]);
        split(grid[i - 1], prev, grid[i], cur, 0);
        prev = cur;
    }
    return out;
}

/// Circle Delta = r sin s, Omega = r cos s over one period, closed.
inline ControlPath circle_path(double radius, std::size_t samples = 257, double phase0 = 0.0)
{
    if (!(radius > 0.0)) throw ConfigError("circle_path: radius must be positive");
    ControlPath p;
    const auto s = ode::uniform_grid(0.0, 2.0 * std::numbers::pi, samples);
    for (double v : s) p.push_back(v, radius * std::sin(v + phase0), radius * std::cos(v + phase0));
    p.delta.back() = p.delta.front();
    p.omega.back() = p.omega.front();
    return p;
}

/// Complete-population-return loop driven by the Gaussian Stark pulse of `p`
/// and two pump Gaussians centred on its resonance crossings. The second pump
/// enters with `second_sign`: -1 carries the path round the intersection
/// through Omega < 0, +1 keeps it in the upper half plane.
inline ControlPath gaussian_cpr_path(const PulseParams& p, double second_sign = -1.0, double t0 = 0.0,
                                     double t1 = 130.0, std::size_t initial = 256)
{
    p.validate();
    const double peak = p.Delta0 * inv_sqrt_2pi / p.sigma_s;
    if (!(peak > p.S0)) throw NotApplicableError("gaussian_cpr_path: Stark pulse never reaches resonance");
    const double half = p.sigma_s * std::sqrt(2.0 * std::log(peak / p.S0));
    PulseParams first = p, second = p;
    first.t_p = p.t_s - half;
    second.t_p = p.t_s + half;
    auto f = [=](double t) -> std::array<double, 2> {
        return {gaussian_stark(t, p), gaussian_pump(t, first) + second_sign * gaussian_pump(t, second)};
    };
    ControlPath path = refine_path(f, t0, t1, initial);
    path.closure_tol = 1e-6 * std::max(1.0, p.S0);
    return path;
}

/// Phase from the adiabaticity integral on a path of constant radius
/// rho = sqrt(Delta^2 + Omega^2): gamma = rho * int AD dt.
inline double phase_via_adiabaticity(const Trajectory& traj, double rel_tol = 1e-6)
{
    if (!traj.controls || traj.size() < 2) throw NotApplicableError("phase_via_adiabaticity: trajectory has no controls");
    const auto& c = *traj.controls;
    const double rho2 = c.front().delta * c.front().delta + c.front().omega * c.front().omega;
    if (!(rho2 > 0.0)) throw ConicalIntersectionError("phase_via_adiabaticity: zero field");
    std::vector<double> ad(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double r2 = c[i].delta * c[i].delta + c[i].omega * c[i].omega;
        if (std::abs(r2 - rho2) > rel_tol * rho2)
            throw NotApplicableError("phase_via_adiabaticity: Delta^2 + Omega^2 is not constant along the path");
        if (!c[i].has_rates) throw NotApplicableError("phase_via_adiabaticity: controls carry no rates");
        ad[i] = adiabaticity(c[i]);
    }
    return std::sqrt(rho2) * ode::integrate_samples(ad, traj.times.front(), traj.times.back());
}

inline void write_path_csv(std::ostream& os, const ControlPath& path)
{
    os << "t,delta,omega\n";
    for (std::size_t i = 0; i < path.size(); ++i)
        os << format_double(path.t[i]) << ',' << format_double(path.delta[i]) << ',' << format_double(path.omega[i])
           << '\n';
}

inline ControlPath read_path_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("read_path_csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,delta,omega") throw ConfigError("read_path_csv: expected header t,delta,omega");
    ControlPath p;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, c;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c))
            throw ConfigError("read_path_csv: malformed line " + std::to_string(lineno));
        try {
            p.push_back(std::stod(a), std::stod(b), std::stod(c));
        } catch (const std::exception&) {
            throw ConfigError("read_path_csv: non-numeric value on line " + std::to_string(lineno));
        }
    }
    return p;
}

} // namespace scrap
