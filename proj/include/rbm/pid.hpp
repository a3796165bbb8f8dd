#pragma once

#include <algorithm>
#include <cmath>

namespace rbm {

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
    double integral_limit = 0.0;  // Nm, bound on the integral contribution
    double output_limit = 0.0;    // Nm

    bool operator==(const PidGains&) const = default;
};

struct PidState {
    double integral = 0.0;  // Nm
    double previous_error = 0.0;
    bool primed = false;
};

/// Positional PID; the integral term is clamped in place (anti-windup).
inline double pid_step(const PidGains& g, double setpoint, double measured, double dt, PidState& s) {
    const double error = setpoint - measured;
    if (!s.primed) {
        s.previous_error = error;
        s.primed = true;
    }
    s.integral = std::clamp(s.integral + g.ki * error * dt, -g.integral_limit, g.integral_limit);
    const double derivative = (error - s.previous_error) / dt;
    s.previous_error = error;
    const double out = g.kp * error + s.integral + g.kd * derivative;
    return std::clamp(out, -g.output_limit, g.output_limit);
}

}  // namespace rbm
