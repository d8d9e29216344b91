#pragma once

// Efficiency and adiabaticity landscapes over the reduced Stark coordinates
// (tau, sigma), and the analytic critical-point curves of the adiabatic
// efficiency P2(T) = cos^2 Theta(T).

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "scrap/dynamics.hpp"
#include "scrap/parallel.hpp"

namespace scrap {

enum class Measure { adiabatic_p2, full_pa, full_pb, adiabaticity };

inline std::string to_string(Measure m)
{
    switch (m) {
    case Measure::adiabatic_p2: return "adiabatic-P2";
    case Measure::full_pa: return "full-Pa";
    case Measure::full_pb: return "full-Pb";
    case Measure::adiabaticity: return "AD";
    }
    return "?";
}

struct GridSpec {
    double tau_min = -0.5, tau_max = 1.0;
    std::size_t n_tau = 121;
    double sigma_min = 0.05, sigma_max = 6.0;
    std::size_t n_sigma = 121;

    void validate() const
    {
        if (n_tau == 0 || n_sigma == 0) throw ConfigError("GridSpec: grid is empty");
        if (!(tau_max >= tau_min) || !(sigma_max >= sigma_min)) throw ConfigError("GridSpec: inverted axis range");
        if (!std::isfinite(tau_min) || !std::isfinite(tau_max) || !std::isfinite(sigma_min) || !std::isfinite(sigma_max))
            throw ConfigError("GridSpec: non-finite bounds");
    }

    static std::vector<double> axis(double lo, double hi, std::size_t n)
    {
        if (n == 1) return {lo};
        return ode::uniform_grid(lo, hi, n);
    }
    std::vector<double> tau_axis() const { return axis(tau_min, tau_max, n_tau); }
    std::vector<double> sigma_axis() const { return axis(sigma_min, sigma_max, n_sigma); }
};

/// Scalar field over (tau, sigma); values are row-major with tau as the row
/// index. Cells that could not be evaluated hold NaN.
struct GridMap {
    std::vector<double> tau_axis, sigma_axis;
    std::vector<double> values;
    double probe_time = 0.0;
    Measure measure = Measure::adiabatic_p2;
    PulseParams params;

    double at(std::size_t i_tau, std::size_t j_sigma) const { return values[i_tau * sigma_axis.size() + j_sigma]; }
    std::size_t missing() const
    {
        std::size_t n = 0;
        for (double v : values) n += std::isnan(v) ? 1 : 0;
        return n;
    }
};

/// Adiabatic population of |2> at the probe time.
inline double p2_adiabatic(double T, const ReducedCoords& rc, const PulseParams& pump)
{
    if (!(rc.sigma > 0.0)) throw DegenerateWidthError("p2_adiabatic: sigma must be positive");
    const PulseParams p = with_reduced(pump, rc);
    const double c = std::cos(mixing_angle({gaussian_stark(T, p), gaussian_pump(T, p)}));
    return c * c;
}

/// Stark centres t_s for which the Stark field is resonant at T for the given
/// width. The log argument is Delta0 / (sqrt(2 pi) S0 sigma_s); there is no
/// solution once it drops below one.
inline std::optional<std::pair<double, double>> saddle_curve_ts(double sigma_s, double T, const PulseParams& p)
{
    if (!(sigma_s > 0.0)) throw DegenerateWidthError("saddle_curve_ts: sigma_s must be positive");
    const double arg = p.Delta0 * inv_sqrt_2pi / (p.S0 * sigma_s);
    if (arg < 1.0) return std::nullopt;
    const double half = std::sqrt(2.0 * sigma_s * sigma_s * std::log(arg));
    return std::pair{T - half, T + half};
}

/// Widths sigma_s = +-(T - t_s); only the non-negative one is physical.
inline std::pair<double, double> saddle_curve_sigma(double t_s, double T) noexcept
{
    const double s = std::abs(T - t_s);
    return {s, -s};
}

enum class CriticalKind { intersection, rejected_degenerate };

struct CriticalPoint {
    double tau = 0.0;
    double sigma = 0.0;
    CriticalKind kind = CriticalKind::intersection;
};

struct ReducedWindow {
    double tau_min = -0.5, tau_max = 1.0;
    double sigma_min = 0.0, sigma_max = 6.0;
};

/// Intersections of the two saddle-curve families inside `win`.
///
/// Along either branch of t_s(sigma_s) the two families meet where
/// sqrt(2 ln arg) = 1, found by scanning sigma_s for a sign change and
/// bisecting. Both families also meet at sigma_s -> 0, t_s = T; that point is
/// reported as rejected_degenerate.
inline std::vector<CriticalPoint> critical_points(double T, const PulseParams& p, const ReducedWindow& win = {})
{
    p.validate();
    std::vector<CriticalPoint> out;
    const double tau_T = (T - p.t_p) / p.t_p;
    if (win.sigma_min <= 0.0 && tau_T >= win.tau_min && tau_T <= win.tau_max)
        out.push_back({tau_T, 0.0, CriticalKind::rejected_degenerate});

    const double s_lo = std::max(win.sigma_min, 0.0) * p.sigma_p;
    const double s_hi = win.sigma_max * p.sigma_p;
    if (!(s_hi > 0.0)) return out;
    // g > 0 where the t_s curve lies further from T than the sigma curve.
    auto g = [&](double ss) {
        const double arg = p.Delta0 * inv_sqrt_2pi / (p.S0 * ss);
        return arg <= 0.0 ? -1.0 : 2.0 * std::log(arg) - 1.0;
    };
    const std::size_t n_scan = 2000;
    const double start = std::max(s_lo, s_hi * 1e-9);
    double a = start, ga = g(a);
    for (std::size_t k = 1; k <= n_scan; ++k) {
        const double b = start + (s_hi - start) * static_cast<double>(k) / static_cast<double>(n_scan);
        const double gb = g(b);
        if (ga == 0.0 || (ga > 0.0) != (gb > 0.0)) {
            double lo = a, hi = b;
            if (ga != 0.0) {
                for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    ((g(mid) > 0.0) == (ga > 0.0) ? lo : hi) = mid;
                }
            }
            const double ss = 0.5 * (lo + hi);
            for (double sign : {-1.0, 1.0}) {
                const double ts = T + sign * ss;
                const double tau = (ts - p.t_p) / p.t_p;
                const double sig = ss / p.sigma_p;
                if (tau >= win.tau_min && tau <= win.tau_max && sig >= win.sigma_min && sig <= win.sigma_max)
                    out.push_back({tau, sig, CriticalKind::intersection});
            }
        }
        a = b;
        ga = gb;
    }
    return out;
}

namespace detail {

/// Integrates the Bloch equations for Gaussian pulses from the south pole
/// up to T, together with the running integral of P2. Returns (P2(T), int P2 dt).
inline std::pair<double, double> full_bloch_measures(const PulseParams& p, double t_i, double T,
                                                     const IntegratorConfig& cfg_in)
{
    IntegratorConfig cfg = cfg_in;
    cfg.max_step = std::min(cfg.max_step, 0.25 * std::min(p.sigma_s, p.sigma_p));
    const double amp_s = p.Delta0 * inv_sqrt_2pi / p.sigma_s;
    const double amp_p = p.Omega0 * inv_sqrt_2pi / p.sigma_p;
    const double is2 = 0.5 / (p.sigma_s * p.sigma_s), ip2 = 0.5 / (p.sigma_p * p.sigma_p);
    auto rhs = [&](double t, const ode::State<4>& y, ode::State<4>& dy) {
        const double ds = t - p.t_s, dp = t - p.t_p;
        const double delta = -p.S0 + amp_s * std::exp(-ds * ds * is2);
        const double omega = amp_p * std::exp(-dp * dp * ip2);
        dy[0] = -delta * y[1];
        dy[1] = delta * y[0] - omega * y[2];
        dy[2] = omega * y[1];
        dy[3] = 0.5 + 0.5 * y[2];
    };
    const auto y = ode::integrate_to<4>(rhs, {0.0, 0.0, -1.0, 0.0}, t_i, T, cfg);
    return {0.5 + 0.5 * y[2], y[3]};
}

} // namespace detail

/// One value per (tau, sigma) cell. Full measures start from the south pole
/// at t_i; full-Pb is normalised by (T - t_i). Failed cells hold NaN.
inline GridMap efficiency_map(Measure measure, const GridSpec& grid, const PulseParams& pump, double T, double t_i,
                              const IntegratorConfig& cfg, unsigned workers = 0)
{
    grid.validate();
    pump.validate();
    cfg.validate();
    if (measure == Measure::adiabaticity) throw ConfigError("efficiency_map: use adiabaticity_map for AD");
    if ((measure == Measure::full_pa || measure == Measure::full_pb) && !(T > t_i))
        throw ConfigError("efficiency_map: probe time must exceed t_i");
    GridMap map{grid.tau_axis(), grid.sigma_axis(), {}, T, measure, pump};
    const std::size_t ns = map.sigma_axis.size();
    map.values.assign(map.tau_axis.size() * ns, std::numeric_limits<double>::quiet_NaN());
    parallel_for(map.values.size(), workers, [&](std::size_t idx) {
        const ReducedCoords rc{map.tau_axis[idx / ns], map.sigma_axis[idx % ns]};
        try {
            if (measure == Measure::adiabatic_p2) {
                map.values[idx] = p2_adiabatic(T, rc, pump);
            } else {
                if (!(rc.sigma > 0.0)) return;
                const auto [pa, integral] = detail::full_bloch_measures(with_reduced(pump, rc), t_i, T, cfg);
                map.values[idx] = measure == Measure::full_pa ? pa : integral / (T - t_i);
            }
        } catch (const ScrapError&) {
            // singular cell: left as NaN
        }
    });
    return map;
}

/// AD(T) per cell using analytic pulse rates.
inline GridMap adiabaticity_map(double T, const GridSpec& grid, const PulseParams& pump, unsigned workers = 0)
{
    grid.validate();
    pump.validate();
    GridMap map{grid.tau_axis(), grid.sigma_axis(), {}, T, Measure::adiabaticity, pump};
    const std::size_t ns = map.sigma_axis.size();
    map.values.assign(map.tau_axis.size() * ns, std::numeric_limits<double>::quiet_NaN());
    parallel_for(map.values.size(), workers, [&](std::size_t idx) {
        const ReducedCoords rc{map.tau_axis[idx / ns], map.sigma_axis[idx % ns]};
        try {
            map.values[idx] = adiabaticity(gaussian_sample(T, with_reduced(pump, rc)));
        } catch (const ScrapError&) {
        }
    });
    return map;
}

struct Argmax {
    std::size_t i_tau = 0, j_sigma = 0;
    double tau = 0.0, sigma = 0.0, value = 0.0;
    double refined_tau = 0.0, refined_sigma = 0.0;
};

namespace detail {

/// Vertex offset (in cells, clamped to +-0.5) of the parabola through three
/// equally spaced samples.
inline double parabola_offset(double fm, double f0, double fp)
{
    const double den = fm - 2.0 * f0 + fp;
    if (!(den < 0.0) || !std::isfinite(den)) return 0.0;
    return std::clamp(0.5 * (fm - fp) / den, -0.5, 0.5);
}

} // namespace detail

/// Best cell (ties broken by smallest sigma, then smallest tau) plus a
/// separable quadratic refinement over its neighbours.
inline Argmax argmax(const GridMap& map)
{
    const std::size_t nt = map.tau_axis.size(), ns = map.sigma_axis.size();
    bool found = false;
    Argmax best;
    for (std::size_t j = 0; j < ns; ++j) {
        for (std::size_t i = 0; i < nt; ++i) {
            const double v = map.at(i, j);
            if (std::isnan(v)) continue;
            if (!found || v > best.value) {
                found = true;
                best.i_tau = i;
                best.j_sigma = j;
                best.value = v;
            }
        }
    }
    if (!found) throw NotApplicableError("argmax: map has no valid cells");
    best.tau = best.refined_tau = map.tau_axis[best.i_tau];
    best.sigma = best.refined_sigma = map.sigma_axis[best.j_sigma];
    const std::size_t i = best.i_tau, j = best.j_sigma;
    if (i > 0 && i + 1 < nt) {
        const double off = detail::parabola_offset(map.at(i - 1, j), best.value, map.at(i + 1, j));
        best.refined_tau += off * (map.tau_axis[1] - map.tau_axis[0]);
    }
    if (j > 0 && j + 1 < ns) {
        const double off = detail::parabola_offset(map.at(i, j - 1), best.value, map.at(i, j + 1));
        best.refined_sigma += off * (map.sigma_axis[1] - map.sigma_axis[0]);
    }
    return best;
}

/// Matrix CSV: header row "tau\sigma,<sigma values>", then one row per tau.
inline void write_map_csv(std::ostream& os, const GridMap& map)
{
    os << "tau\\sigma";
    for (double s : map.sigma_axis) os << ',' << format_double(s);
    os << '\n';
    for (std::size_t i = 0; i < map.tau_axis.size(); ++i) {
        os << format_double(map.tau_axis[i]);
        for (std::size_t j = 0; j < map.sigma_axis.size(); ++j) os << ',' << format_double(map.at(i, j));
        os << '\n';
    }
}

} // namespace scrap
