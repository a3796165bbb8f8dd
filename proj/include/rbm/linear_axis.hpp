#pragma once

// Simulated linear actuator carrying one arm: time-optimal trapezoidal
// moves under velocity and acceleration limits.

#include <algorithm>
#include <cmath>

#include "rbm/error.hpp"

namespace rbm {

struct AxisLimits {
    double max_velocity = 1.0;      // m/s
    double max_acceleration = 8.0;  // m/s²
    double travel = 0.5;            // m, positions lie in [0, travel]

    void validate() const {
        if (!(max_velocity > 0 && max_acceleration > 0 && travel > 0))
            throw ConfigError("axis: limits and travel must be positive");
    }
};

struct LinearAxisState {
    double position = 0.0;
    double velocity = 0.0;

    bool operator==(const LinearAxisState&) const = default;
};

/// Rest-to-rest move time over `distance`.
inline double trapezoid_time(double distance, const AxisLimits& lim) {
    const double d = std::abs(distance);
    const double v = lim.max_velocity;
    const double a = lim.max_acceleration;
    if (d >= v * v / a) return d / v + v / a;
    return 2.0 * std::sqrt(d / a);
}

/// One control period toward `target`. Braking uses the discrete-time stopping
/// speed so the axis lands on the target without exceeding the limits.
inline LinearAxisState axis_step(const LinearAxisState& s, double target, const AxisLimits& lim, double dt) {
    if (target < 0 || target > lim.travel) throw RoutingError("axis: target outside travel");
    const double a = lim.max_acceleration;
    const double remaining = target - s.position;
    const double dv = a * dt;
    if (std::abs(remaining) <= 1e-12 && std::abs(s.velocity) <= dv) return {target, 0.0};

    // Largest speed from which the remaining distance can still be braked in whole steps.
    const double brake = dv * (std::sqrt(0.25 + 2.0 * std::abs(remaining) / (dv * dt)) - 0.5);
    const double desired = std::copysign(std::min(lim.max_velocity, brake), remaining);
    const double v = std::clamp(desired, s.velocity - dv, s.velocity + dv);
    LinearAxisState next{s.position + v * dt, v};
    const double after = target - next.position;
    if (after == 0.0 || std::signbit(after) != std::signbit(remaining)) {
        next.position = target;
        next.velocity = 0.0;
    }
    return next;
}

}  // namespace rbm
