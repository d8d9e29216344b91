#pragma once

// Closed-form pieces of the position-dependent Stark perturbations: the
// linear slope K(z) = k (z - z_min) and the separable space-time ripple
// f(t) eps(z) = A cos(w t / (t_f - t_i)) cos(k z / Z).

#include <cmath>

#include "scrap/core_model.hpp"

namespace scrap {

struct LinearInhom {
    double k = 0.01;
    double z_min = 0.0;
    double z_max = 1.0;

    double Z() const noexcept { return z_max - z_min; }
    double K(double z) const noexcept { return k * (z - z_min); }

    void validate() const
    {
        if (!(Z() > 0.0)) throw ConfigError("LinearInhom: z_max must exceed z_min");
        if (!(1.0 + k * Z() > 0.0)) throw ConfigError("LinearInhom: 1 + kZ must stay positive");
    }
};

struct SpaceTimePerturbation {
    double A = 0.05;
    double w = 20.0;
    double k = 10.0;
    double t_i = 0.0, t_f = 100.0;
    double z_min = 0.0, z_max = 1.0;

    double Z() const noexcept { return z_max - z_min; }
    double f(double t) const noexcept { return A * std::cos(w * t / (t_f - t_i)); }
    double df_dt(double t) const noexcept { return -A * w / (t_f - t_i) * std::sin(w * t / (t_f - t_i)); }
    double eps(double z) const noexcept { return std::cos(k * z / Z()); }

    /// A <= S0 bound included when a static detuning is supplied.
    void validate(double S0 = 1.0) const
    {
        if (!(Z() > 0.0)) throw ConfigError("SpaceTimePerturbation: z_max must exceed z_min");
        if (!(t_f > t_i)) throw ConfigError("SpaceTimePerturbation: t_f must exceed t_i");
        if (!(A >= 0.0)) throw ConfigError("SpaceTimePerturbation: A must be non-negative");
        if (!(A / S0 <= 1.0)) throw ConfigError("SpaceTimePerturbation: A / S0 must not exceed 1");
        if (!std::isfinite(w) || !std::isfinite(k)) throw ConfigError("SpaceTimePerturbation: non-finite parameters");
    }
};

inline void check_z(double z, double z_min, double z_max)
{
    if (!(z >= z_min && z <= z_max)) throw OutOfWindowError("perturbed_controls: z outside [z_min, z_max]");
}

/// Stark field seen at position z under the linear slope; Omega unchanged.
inline ControlSample perturbed_controls(double z, const ControlSample& base, const LinearInhom& inhom)
{
    check_z(z, inhom.z_min, inhom.z_max);
    ControlSample s = base;
    const double g = 1.0 + inhom.K(z);
    s.delta *= g;
    s.ddelta_dt *= g;
    return s;
}

/// Stark field seen at (z, t) under the space-time ripple; Omega unchanged.
inline ControlSample perturbed_controls(double z, double t, const ControlSample& base, const SpaceTimePerturbation& pert)
{
    check_z(z, pert.z_min, pert.z_max);
    ControlSample s = base;
    const double e = pert.eps(z);
    const double g = 1.0 + pert.f(t) * e;
    s.delta = g * base.delta;
    s.ddelta_dt = g * base.ddelta_dt + pert.df_dt(t) * e * base.delta;
    return s;
}

/// z-integral of (1 + K(z))^2, the coefficient of Delta^2 in the ensemble
/// energy. Expanded as a polynomial so the k -> 0 limit is exact.
inline double ensemble_cost_coeff_linear(const LinearInhom& inhom) noexcept
{
    const double Z = inhom.Z(), k = inhom.k;
    return Z + k * Z * Z + k * k * Z * Z * Z / 3.0;
}

/// Stationary controls of l1 Omega + l3 Delta - (c Delta^2 + Z Omega^2) / 2.
inline ControlSample optimal_fields_linear(const Vec3& l, const LinearInhom& inhom) noexcept
{
    return {l[2] / ensemble_cost_coeff_linear(inhom), l[0] / inhom.Z()};
}

namespace detail {

inline double sinc(double x) noexcept
{
    if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0 + x * x * x * x / 120.0;
    return std::sin(x) / x;
}

} // namespace detail

/// z-integrals of eps and eps^2 over the window.
struct EpsMoments {
    double S1 = 0.0;  // int eps dz
    double S2 = 0.0;  // int eps^2 dz
};

inline EpsMoments eps_moments(const SpaceTimePerturbation& pert) noexcept
{
    const double Z = pert.Z(), k = pert.k;
    const double mid = (pert.z_min + pert.z_max) / Z;  // a + b in units of Z
    return {Z * std::cos(0.5 * k * mid) * detail::sinc(0.5 * k),
            0.5 * Z + 0.5 * Z * std::cos(k * mid) * detail::sinc(k)};
}

/// I1(t) = int (1 + f eps) dz and I2(t) = int (1 + f eps)^2 dz.
struct ZtMoments {
    double I1 = 0.0;
    double I2 = 0.0;
};

inline ZtMoments zt_moments(double t, const SpaceTimePerturbation& pert) noexcept
{
    const auto m = eps_moments(pert);
    const double f = pert.f(t), Z = pert.Z();
    return {Z + f * m.S1, Z + 2.0 * f * m.S1 + f * f * m.S2};
}

/// dI2/dt, used for the rate of the optimal Stark field.
inline double zt_moment_I2_rate(double t, const SpaceTimePerturbation& pert) noexcept
{
    const auto m = eps_moments(pert);
    const double f = pert.f(t), df = pert.df_dt(t);
    return 2.0 * df * m.S1 + 2.0 * f * df * m.S2;
}

/// Delta*(t; z) = (1 + f(t) eps(z)) l3(t) / I2(t).
inline double optimal_stark_zt(double t, double z, double l3, const SpaceTimePerturbation& pert)
{
    check_z(z, pert.z_min, pert.z_max);
    const double I2 = zt_moments(t, pert).I2;
    if (!(I2 > 0.0)) throw NotApplicableError("optimal_stark_zt: I2 must be positive");
    return (1.0 + pert.f(t) * pert.eps(z)) * l3 / I2;
}

} // namespace scrap
