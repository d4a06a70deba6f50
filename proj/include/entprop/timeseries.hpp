#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "entprop/spin_basis.hpp"

namespace entprop {

/// Uniformly sampled real trace y(t_k), t_k = k dt.
struct TimeSeries {
    std::vector<Real> t;
    std::vector<Real> y;

    std::size_t size() const { return t.size(); }
    bool empty() const { return t.empty(); }
    Real dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }

    /// Equal lengths, ascending and uniformly spaced to 1e-12.
    void validate() const {
        if (t.size() != y.size()) {
            throw std::invalid_argument("time series: t and y lengths differ");
        }
        for (std::size_t k = 2; k < t.size(); ++k) {
            if (std::abs((t[k] - t[k - 1]) - (t[1] - t[0])) > 1e-12) {
                throw std::invalid_argument("time series: grid is not uniform");
            }
        }
        if (t.size() > 1 && !(t[1] > t[0])) {
            throw std::invalid_argument("time series: grid is not ascending");
        }
    }
};

/// t_k = k dt for k = 0..round(t_max/dt).
inline std::vector<Real> uniform_grid(Real dt, Real t_max) {
    if (!(dt > 0.0) || !std::isfinite(dt) || !(t_max >= 0.0) || !std::isfinite(t_max)) {
        throw std::invalid_argument("time grid needs dt > 0 and finite t_max >= 0");
    }
    const auto steps = static_cast<std::size_t>(std::llround(t_max / dt));
    std::vector<Real> t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        t[k] = static_cast<Real>(k) * dt;
    }
    return t;
}

/// An extracted time scale: a grid time, or not-found with a reason.
struct Extraction {
    std::optional<Real> time;
    std::string reason;

    static Extraction at(Real t) { return {t, {}}; }
    static Extraction not_found(std::string why) { return {std::nullopt, std::move(why)}; }
    bool found() const { return time.has_value(); }
};

/// Mean of the last quarter of the window.
inline Real plateau_value(const TimeSeries& s) {
    if (s.empty()) {
        throw std::invalid_argument("plateau of an empty series");
    }
    const std::size_t n = s.size();
    const std::size_t first = n - std::max<std::size_t>(n / 4, 1);
    Real sum = 0.0;
    for (std::size_t k = first; k < n; ++k) {
        sum += s.y[k];
    }
    return sum / static_cast<Real>(n - first);
}

/// First k with x[k] > threshold that stays above it for `dwell` consecutive
/// samples (k included). The run must fit inside the window.
inline std::optional<std::size_t> first_sustained_above(const std::vector<Real>& x, Real threshold,
                                                        int dwell) {
    if (dwell < 1) {
        throw std::invalid_argument("dwell must be at least one sample");
    }
    const auto need = static_cast<std::size_t>(dwell);
    std::size_t run = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        run = x[k] > threshold ? run + 1 : 0;
        if (run == need) {
            return k + 1 - need;
        }
    }
    return std::nullopt;
}

/// Band re-entry: after first reaching (1 - delta) * plateau the series drops
/// below the band for at least `dwell` samples and later comes back.
struct RecurrenceInfo {
    bool found = false;
    std::optional<Real> t_enter;
    std::optional<Real> t_exit;
    std::optional<Real> t_reenter;
};

inline RecurrenceInfo detect_recurrence(const TimeSeries& s, Real delta, int dwell) {
    s.validate();
    RecurrenceInfo info;
    if (s.empty()) {
        return info;
    }
    const Real p = plateau_value(s);
    const Real lower = p - delta * std::abs(p);
    std::size_t k = 0;
    while (k < s.size() && s.y[k] < lower) {
        ++k;
    }
    if (k == s.size()) {
        return info;
    }
    info.t_enter = s.t[k];
    std::vector<Real> below(s.size(), 0.0);
    for (std::size_t j = 0; j < s.size(); ++j) {
        below[j] = lower - s.y[j];
    }
    std::vector<Real> tail(below.begin() + static_cast<std::ptrdiff_t>(k), below.end());
    const auto exit = first_sustained_above(tail, 0.0, dwell);
    if (!exit) {
        return info;
    }
    const std::size_t e = k + *exit;
    info.t_exit = s.t[e];
    for (std::size_t j = e; j < s.size(); ++j) {
        if (s.y[j] >= lower) {
            info.t_reenter = s.t[j];
            info.found = true;
            break;
        }
    }
    return info;
}

/// (1/T) int_0^T y dt by the trapezoidal rule on the sampled grid.
inline Real long_time_average(const TimeSeries& s) {
    s.validate();
    if (s.size() < 2) {
        throw std::invalid_argument("long-time average needs two samples");
    }
    Real integral = 0.0;
    for (std::size_t k = 1; k < s.size(); ++k) {
        integral += 0.5 * (s.y[k] + s.y[k - 1]) * (s.t[k] - s.t[k - 1]);
    }
    return integral / (s.t.back() - s.t.front());
}

} // namespace entprop
