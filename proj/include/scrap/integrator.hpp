#pragma once

// Explicit Runge-Kutta integrators over fixed-size states: the Dormand-Prince
// 5(4) embedded pair with its continuous extension, and classical RK4 with
// cubic Hermite interpolation between steps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "scrap/errors.hpp"

namespace scrap::ode {

template <std::size_t N>
using State = std::array<double, N>;

enum class Method { rk4_fixed, dopri45 };

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    double max_step = 0.5;
    Method method = Method::dopri45;
    double fixed_step = 1e-2;  // rk4_fixed only
    long max_steps = 50'000'000;

    void validate() const
    {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ConfigError("IntegratorConfig: tolerances must be positive");
        if (!(max_step > 0.0)) throw ConfigError("IntegratorConfig: max_step must be positive");
        if (method == Method::rk4_fixed && !(fixed_step > 0.0))
            throw ConfigError("IntegratorConfig: fixed_step must be positive");
    }
};

struct IntegrationStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

struct NoStepHook {
    template <class S>
    void operator()(double, const S&) const noexcept {}
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
// continuous extension (Hairer & Wanner, DOPRI5 dense output)
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

template <std::size_t N>
double scaled_norm(const State<N>& err, const State<N>& y0, const State<N>& y1, double atol, double rtol)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double e = err[i] / sc;
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(N));
}

template <std::size_t N, class Rhs>
double initial_step(Rhs& rhs, double t, const State<N>& y, const State<N>& f0, double dir, const IntegratorConfig& cfg,
                    IntegrationStats& stats)
{
    State<N> zero{};
    const double dy = scaled_norm<N>(y, y, zero, cfg.abs_tol, cfg.rel_tol);
    const double df = scaled_norm<N>(f0, y, zero, cfg.abs_tol, cfg.rel_tol);
    double h0 = (dy < 1e-5 || df < 1e-5) ? 1e-6 : 0.01 * dy / df;
    h0 = std::min(h0, cfg.max_step);
    State<N> y1, f1;
    for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + dir * h0 * f0[i];
    rhs(t + dir * h0, y1, f1);
    ++stats.rhs_evals;
    State<N> diff;
    for (std::size_t i = 0; i < N; ++i) diff[i] = f1[i] - f0[i];
    const double d2 = scaled_norm<N>(diff, y, zero, cfg.abs_tol, cfg.rel_tol) / h0;
    const double m = std::max(df, d2);
    const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    return std::min({100.0 * h0, h1, cfg.max_step});
}

} // namespace detail

/// Integrates dy/dt = rhs(t, y) from t0 to t1 (either direction).
///
/// `outputs` lists sample times, monotone in the direction of integration and
/// inside [t0, t1]; `observe(t, y)` is called once per output time using the
/// method's interpolant. `on_step(t, y)` sees every accepted step endpoint.
/// Throws StiffnessError on step-size underflow or when max_steps is exceeded.
template <std::size_t N, class Rhs, class Observer, class StepHook = NoStepHook>
IntegrationStats integrate(Rhs&& rhs, State<N> y, double t0, double t1, const IntegratorConfig& cfg,
                           std::span<const double> outputs, Observer&& observe, StepHook&& on_step = {})
{
    using namespace detail;
    cfg.validate();
    IntegrationStats stats;
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    std::size_t next_out = 0;
    auto emit_exact = [&](double t, const State<N>& yy) {
        while (next_out < outputs.size() && outputs[next_out] == t) {
            observe(outputs[next_out], yy);
            ++next_out;
        }
    };
    emit_exact(t0, y);
    if (t0 == t1) return stats;

    State<N> k1, k2, k3, k4, k5, k6, k7, ytmp, ynew;
    double t = t0;
    rhs(t, y, k1);
    ++stats.rhs_evals;

    if (cfg.method == Method::rk4_fixed) {
        const long n = std::max(1L, static_cast<long>(std::ceil(std::abs(t1 - t0) / cfg.fixed_step - 1e-9)));
        const double h = (t1 - t0) / static_cast<double>(n);
        for (long s = 0; s < n; ++s) {
            const double ts = t0 + h * static_cast<double>(s);
            for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + 0.5 * h * k1[i];
            rhs(ts + 0.5 * h, ytmp, k2);
            for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + 0.5 * h * k2[i];
            rhs(ts + 0.5 * h, ytmp, k3);
            for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * k3[i];
            const double tn = (s + 1 == n) ? t1 : t0 + h * static_cast<double>(s + 1);
            rhs(tn, ytmp, k4);
            for (std::size_t i = 0; i < N; ++i) ynew[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            rhs(tn, ynew, k5);
            stats.rhs_evals += 4;
            while (next_out < outputs.size() && (outputs[next_out] - tn) * dir <= 0.0) {
                const double th = (outputs[next_out] - ts) / h;
                const double h00 = (1 + 2 * th) * (1 - th) * (1 - th), h10 = th * (1 - th) * (1 - th);
                const double h01 = th * th * (3 - 2 * th), h11 = th * th * (th - 1);
                for (std::size_t i = 0; i < N; ++i)
                    ytmp[i] = h00 * y[i] + h10 * h * k1[i] + h01 * ynew[i] + h11 * h * k5[i];
                observe(outputs[next_out], ytmp);
                ++next_out;
            }
            y = ynew;
            k1 = k5;
            ++stats.accepted;
            on_step(tn, y);
        }
        return stats;
    }

    double h = initial_step<N>(rhs, t, y, k1, dir, cfg, stats);
    double err_old = 1e-4;
    bool last_rejected = false;
    while ((t1 - t) * dir > 0.0) {
        if (stats.accepted + stats.rejected >= cfg.max_steps)
            throw StiffnessError("integrate: maximum number of steps exceeded");
        h = std::min(h, cfg.max_step);
        bool last = false;
        if ((t + dir * h - t1) * dir >= 0.0) {
            h = std::abs(t1 - t);
            last = true;
        }
        if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
            throw StiffnessError("integrate: step size underflow at t = " + std::to_string(t));
        const double hs = dir * h;

        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + hs * a21 * k1[i];
        rhs(t + c2 * hs, ytmp, k2);
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * hs, ytmp, k3);
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * hs, ytmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * hs, ytmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const double tn = last ? t1 : t + hs;
        rhs(tn, ytmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        rhs(tn, ynew, k7);
        stats.rhs_evals += 6;

        State<N> err;
        for (std::size_t i = 0; i < N; ++i)
            err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double en = scaled_norm<N>(err, y, ynew, cfg.abs_tol, cfg.rel_tol);

        if (en <= 1.0) {
            // Lund-stabilised PI controller, as in DOPRI5
            double fac = std::pow(en, 0.17) / std::pow(err_old, 0.04) / 0.9;
            fac = std::clamp(fac, 0.1, 5.0);
            err_old = std::max(en, 1e-4);
            if (next_out < outputs.size() && (outputs[next_out] - tn) * dir <= 0.0) {
                State<N> r2, r3, r4, r5;
                for (std::size_t i = 0; i < N; ++i) {
                    r2[i] = ynew[i] - y[i];
                    r3[i] = hs * k1[i] - r2[i];
                    r4[i] = r2[i] - hs * k7[i] - r3[i];
                    r5[i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
                }
                while (next_out < outputs.size() && (outputs[next_out] - tn) * dir <= 0.0) {
                    const double th = (outputs[next_out] - t) / hs;
                    const double th1 = 1.0 - th;
                    for (std::size_t i = 0; i < N; ++i)
                        ytmp[i] = y[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
                    if (outputs[next_out] == tn) ytmp = ynew;
                    observe(outputs[next_out], ytmp);
                    ++next_out;
                }
            }
            t = tn;
            y = ynew;
            k1 = k7;
            ++stats.accepted;
            on_step(t, y);
            double hnew = h / fac;
            if (last_rejected) hnew = std::min(hnew, h);
            h = hnew;
            last_rejected = false;
        } else {
            h = h / std::min(10.0, std::pow(en, 0.2) / 0.9);
            last_rejected = true;
            ++stats.rejected;
        }
    }
    return stats;
}

/// Convenience overload returning only the final state.
template <std::size_t N, class Rhs>
State<N> integrate_to(Rhs&& rhs, const State<N>& y0, double t0, double t1, const IntegratorConfig& cfg)
{
    State<N> out = y0;
    const double outputs[] = {t1};
    integrate<N>(rhs, y0, t0, t1, cfg, std::span<const double>(outputs), [&](double, const State<N>& y) { out = y; });
    return out;
}

/// n equally spaced times covering [t0, t1] inclusive (n >= 2).
inline std::vector<double> uniform_grid(double t0, double t1, std::size_t n)
{
    if (n < 2) throw ConfigError("uniform_grid: need at least two samples");
    std::vector<double> g(n);
    const double h = (t1 - t0) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = t0 + h * static_cast<double>(i);
    g.back() = t1;
    return g;
}

/// Integral of uniformly sampled values over [t0, t1]: composite Simpson
/// when the sample count is odd, trapezoid otherwise.
inline double integrate_samples(std::span<const double> values, double t0, double t1)
{
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double h = (t1 - t0) / static_cast<double>(n - 1);
    if (n % 2 == 0 || n < 3) {
        double s = 0.5 * (values.front() + values.back());
        for (std::size_t i = 1; i + 1 < n; ++i) s += values[i];
        return s * h;
    }
    double s = values.front() + values.back();
    for (std::size_t i = 1; i + 1 < n; ++i) s += (i % 2 ? 4.0 : 2.0) * values[i];
    return s * h / 3.0;
}

} // namespace scrap::ode
