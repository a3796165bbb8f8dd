#pragma once

// i²t overcurrent protection: integrates the squared current above the
// nominal rating, leaks it away with a thermal time constant, and latches a
// trip once the budget is exceeded.

#include <cmath>
#include <limits>

#include "rbm/mallet_dynamics.hpp"

namespace rbm {

struct TripConfig {
    double i2t_limit = std::numeric_limits<double>::infinity();  // A²·s
    double cooldown_time = 1.0;  // s; infinity disables the leak
};

struct TripState {
    double accumulator = 0.0;  // A²·s
    bool tripped = false;

    void reset() { *this = TripState{}; }
};

inline TripState overcurrent_check(TripState trip, double current, const MotorSpec& motor, double dt,
                                   const TripConfig& cfg) {
    const double nominal = motor.nominal_current();
    const double excess = std::max(0.0, current * current - nominal * nominal);
    const double leak = std::isinf(cfg.cooldown_time) ? 1.0 : std::exp(-dt / cfg.cooldown_time);
    trip.accumulator = trip.accumulator * leak + excess * dt;
    if (trip.accumulator > cfg.i2t_limit) trip.tripped = true;
    return trip;
}

}  // namespace rbm
