#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "scrap/core_model.hpp"

namespace scrap {

/// Time-parameterised control pair (Delta(t), Omega(t)).
///
/// Fields built from analytic pulses carry exact rates; sampled fields use a
/// C1 cubic Hermite interpolant whose derivative supplies the rates.
class ControlField {
public:
    using Sampler = std::function<ControlSample(double)>;

    ControlField(Sampler sampler, double max_step_hint) : sampler_(std::move(sampler)), hint_(max_step_hint) {}

    static ControlField gaussian(const PulseParams& p)
    {
        p.validate();
        if (!(p.sigma_s > 0.0)) throw DegenerateWidthError("ControlField::gaussian: sigma_s must be positive");
        // The narrower pulse sets the resolution the stepper must not skip over.
        return ControlField([p](double t) { return gaussian_sample(t, p); }, 0.25 * std::min(p.sigma_s, p.sigma_p));
    }

    static ControlField constant(double delta, double omega)
    {
        return ControlField([=](double) { return ControlSample{delta, omega, 0.0, 0.0, true}; }, 1e300);
    }

    static ControlField sampled(std::vector<double> times, std::vector<double> deltas, std::vector<double> omegas);

    ControlSample operator()(double t) const { return sampler_(t); }
    double max_step_hint() const noexcept { return hint_; }

private:
    Sampler sampler_;
    double hint_;
};

namespace detail {

struct HermiteTable {
    std::vector<double> t, y, dy;

    HermiteTable(std::vector<double> times, std::vector<double> values) : t(std::move(times)), y(std::move(values))
    {
        const std::size_t n = t.size();
        dy.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (n == 1) {
                dy[i] = 0.0;
            } else if (i == 0) {
                dy[i] = (y[1] - y[0]) / (t[1] - t[0]);
            } else if (i + 1 == n) {
                dy[i] = (y[n - 1] - y[n - 2]) / (t[n - 1] - t[n - 2]);
            } else {
                dy[i] = (y[i + 1] - y[i - 1]) / (t[i + 1] - t[i - 1]);
            }
        }
    }

    std::pair<double, double> eval(double x) const
    {
        if (t.size() == 1) return {y[0], 0.0};
        if (x <= t.front()) return {y.front(), 0.0};
        if (x >= t.back()) return {y.back(), 0.0};
        const auto it = std::upper_bound(t.begin(), t.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
        const double h = t[i + 1] - t[i];
        const double s = (x - t[i]) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double v = (2 * s3 - 3 * s2 + 1) * y[i] + (s3 - 2 * s2 + s) * h * dy[i] + (-2 * s3 + 3 * s2) * y[i + 1] +
                         (s3 - s2) * h * dy[i + 1];
        const double d = ((6 * s2 - 6 * s) * y[i] + (3 * s2 - 4 * s + 1) * h * dy[i] + (-6 * s2 + 6 * s) * y[i + 1] +
                          (3 * s2 - 2 * s) * h * dy[i + 1]) /
                         h;
        return {v, d};
    }
};

} // namespace detail

inline ControlField ControlField::sampled(std::vector<double> times, std::vector<double> deltas,
                                          std::vector<double> omegas)
{
    if (times.empty() || times.size() != deltas.size() || times.size() != omegas.size())
        throw ConfigError("ControlField::sampled: sample arrays must be non-empty and of equal length");
    double min_gap = 1e300;
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw ConfigError("ControlField::sampled: times must be strictly increasing");
        min_gap = std::min(min_gap, times[i] - times[i - 1]);
    }
    auto d = std::make_shared<const detail::HermiteTable>(times, std::move(deltas));
    auto o = std::make_shared<const detail::HermiteTable>(std::move(times), std::move(omegas));
    return ControlField(
        [d, o](double t) {
            const auto [dv, dd] = d->eval(t);
            const auto [ov, od] = o->eval(t);
            return ControlSample{dv, ov, dd, od, true};
        },
        min_gap);
}

} // namespace scrap
