#pragma once

// Pointwise formulas of the two-level Stark-chirped passage model: Gaussian
// pulses, adiabatic basis, adiabaticity and the Bloch generator.

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "scrap/errors.hpp"
#include "scrap/vec3.hpp"

namespace scrap {

using BlochVector = Vec3;

inline constexpr BlochVector south_pole{0.0, 0.0, -1.0};
inline constexpr BlochVector north_pole{0.0, 0.0, 1.0};

/// Gaussian Stark and pump pulse parameters (atomic units).
struct PulseParams {
    double S0 = 1.0;        // static detuning
    double Delta0 = 100.0;  // Stark pulse area
    double Omega0 = 100.0;  // pump pulse area
    double sigma_s = 10.0;
    double sigma_p = 5.0;
    double t_s = 65.0;
    double t_p = 50.0;

    /// Throws ConfigError when an invariant is broken. sigma_s = 0 is allowed
    /// here and rejected only where the Stark profile is evaluated.
    void validate() const
    {
        if (!(S0 > 0.0)) throw ConfigError("PulseParams: S0 must be positive");
        if (!(sigma_p > 0.0)) throw ConfigError("PulseParams: sigma_p must be positive");
        if (!(sigma_s >= 0.0)) throw ConfigError("PulseParams: sigma_s must be non-negative");
        if (!(Omega0 >= 0.0)) throw ConfigError("PulseParams: Omega0 must be non-negative");
        if (!(Delta0 >= 0.0)) throw ConfigError("PulseParams: Delta0 must be non-negative");
        if (!std::isfinite(t_s) || !std::isfinite(t_p)) throw ConfigError("PulseParams: centres must be finite");
    }

    /// The probe time used by the efficiency landscapes, t_p + 3 sigma_p.
    double default_probe_time() const noexcept { return t_p + 3.0 * sigma_p; }
};

/// Stark centre and width measured in units of the pump pulse.
struct ReducedCoords {
    double tau = 0.0;    // (t_s - t_p) / t_p
    double sigma = 1.0;  // sigma_s / sigma_p
};

inline ReducedCoords to_reduced(const PulseParams& p) noexcept
{
    return {(p.t_s - p.t_p) / p.t_p, p.sigma_s / p.sigma_p};
}

/// Copy of `pump` with the Stark centre and width replaced by `rc`.
inline PulseParams with_reduced(PulseParams pump, const ReducedCoords& rc) noexcept
{
    pump.t_s = pump.t_p * (1.0 + rc.tau);
    pump.sigma_s = rc.sigma * pump.sigma_p;
    return pump;
}

/// Instantaneous control values. The rates are only needed for the
/// adiabaticity function and are flagged explicitly.
struct ControlSample {
    double delta = 0.0;
    double omega = 0.0;
    double ddelta_dt = 0.0;
    double domega_dt = 0.0;
    bool has_rates = false;
};

inline constexpr double inv_sqrt_2pi = 0.3989422804014327;  // 1/sqrt(2 pi)

inline double gaussian_stark(double t, const PulseParams& p)
{
    if (!(p.sigma_s > 0.0)) throw DegenerateWidthError("gaussian_stark: sigma_s must be positive");
    const double x = (t - p.t_s) / p.sigma_s;
    return -p.S0 + p.Delta0 * inv_sqrt_2pi / p.sigma_s * std::exp(-0.5 * x * x);
}

inline double gaussian_stark_rate(double t, const PulseParams& p)
{
    if (!(p.sigma_s > 0.0)) throw DegenerateWidthError("gaussian_stark_rate: sigma_s must be positive");
    const double x = (t - p.t_s) / p.sigma_s;
    return -x / p.sigma_s * p.Delta0 * inv_sqrt_2pi / p.sigma_s * std::exp(-0.5 * x * x);
}

inline double gaussian_pump(double t, const PulseParams& p)
{
    if (!(p.sigma_p > 0.0)) throw DegenerateWidthError("gaussian_pump: sigma_p must be positive");
    const double x = (t - p.t_p) / p.sigma_p;
    return p.Omega0 * inv_sqrt_2pi / p.sigma_p * std::exp(-0.5 * x * x);
}

inline double gaussian_pump_rate(double t, const PulseParams& p)
{
    if (!(p.sigma_p > 0.0)) throw DegenerateWidthError("gaussian_pump_rate: sigma_p must be positive");
    const double x = (t - p.t_p) / p.sigma_p;
    return -x / p.sigma_p * p.Omega0 * inv_sqrt_2pi / p.sigma_p * std::exp(-0.5 * x * x);
}

/// Both Gaussian controls with analytic rates.
inline ControlSample gaussian_sample(double t, const PulseParams& p)
{
    return {gaussian_stark(t, p), gaussian_pump(t, p), gaussian_stark_rate(t, p), gaussian_pump_rate(t, p), true};
}

/// Theta = atan2(Omega, Delta) / 2, in [0, pi/2] for Omega >= 0.
inline double mixing_angle(const ControlSample& s)
{
    if (s.delta == 0.0 && s.omega == 0.0)
        throw ConicalIntersectionError("mixing_angle: Delta = Omega = 0");
    return 0.5 * std::atan2(s.omega, s.delta);
}

struct AdiabaticEnergies {
    double minus = 0.0;
    double plus = 0.0;
    bool degenerate = false;  // true only at Delta = Omega = 0
};

inline AdiabaticEnergies adiabatic_energies(const ControlSample& s) noexcept
{
    const double half_gap = 0.5 * std::hypot(s.delta, s.omega);
    return {0.5 * s.delta - half_gap, 0.5 * s.delta + half_gap, half_gap == 0.0};
}

struct AdiabaticFrame {
    double theta = 0.0;
    double eps_minus = 0.0;
    double eps_plus = 0.0;
};

inline AdiabaticFrame adiabatic_frame(const ControlSample& s)
{
    const auto e = adiabatic_energies(s);
    return {mixing_angle(s), e.minus, e.plus};
}

/// |Omega dDelta/dt - dOmega/dt Delta| / (2 (Delta^2 + Omega^2)^{3/2}).
inline double adiabaticity(const ControlSample& s)
{
    if (!s.has_rates) throw NotApplicableError("adiabaticity: control rates missing");
    const double r2 = s.delta * s.delta + s.omega * s.omega;
    if (r2 == 0.0) throw ConicalIntersectionError("adiabaticity: Delta = Omega = 0");
    return std::abs(s.omega * s.ddelta_dt - s.domega_dt * s.delta) / (2.0 * r2 * std::sqrt(r2));
}

/// Bloch vector of the adiabatic state followed from the south pole. It is
/// the unit vector along the rotation axis (Omega, 0, Delta).
inline BlochVector adiabatic_bloch(double theta) noexcept
{
    return {std::sin(2.0 * theta), 0.0, std::cos(2.0 * theta)};
}

/// Non-adiabatic Bloch correction R - R_ad.
inline Vec3 nabc(const BlochVector& r, const BlochVector& r_ad) noexcept { return r - r_ad; }

/// Rotation axis w with dR/dt = w x R.
inline constexpr Vec3 bloch_axis(const ControlSample& s) noexcept { return {s.omega, 0.0, s.delta}; }

inline constexpr Vec3 bloch_rhs(const ControlSample& s, const BlochVector& r) noexcept
{
    return cross(bloch_axis(s), r);
}

struct Populations {
    double p1 = 1.0;
    double p2 = 0.0;
};

inline constexpr Populations populations(const BlochVector& r) noexcept
{
    return {0.5 * (1.0 - r[2]), 0.5 * (1.0 + r[2])};
}

} // namespace scrap
