#pragma once

// Open-loop solenoid striker used as the comparison actuator. There is no
// position feedback: impact speed follows the commanded velocity until the
// coil saturates and scatters from stroke to stroke.

#include <cmath>
#include <cstdint>
#include <random>

#include "rbm/error.hpp"
#include "rbm/motion_profiler.hpp"

namespace rbm {

struct SolenoidSpec {
    double max_force_torque = 0.3125;  // Nm on the mallet at full drive
    int saturation_velocity = 80;
    double noise_sigma = 0.15;         // lognormal sigma of the impact speed
    double min_spl_floor = 73.0;       // dB, quietest reproducible stroke
    double stroke_time = 0.020;        // s, fire to contact
    double return_time = 0.100;        // s, spring return to rest

    double cycle_time() const { return stroke_time + return_time; }

    void validate() const {
        if (saturation_velocity < 1 || saturation_velocity > 127)
            throw ConfigError("solenoid: saturation velocity outside 1..127");
        if (!(noise_sigma >= 0)) throw ConfigError("solenoid: noise sigma must be non-negative");
        if (!(max_force_torque > 0 && stroke_time > 0 && return_time > 0))
            throw ConfigError("solenoid: force and timing must be positive");
    }
};

/// Impact speeds resolved against a particular mallet and acoustic chain.
struct SolenoidModel {
    SolenoidSpec spec;
    double floor_speed = 0.0;  // rad/s at velocity 1
    double max_speed = 0.0;    // rad/s at and above saturation

    /// Full-drive speed of a mallet accelerated from rest through `stroke` rad.
    static double full_drive_speed(const SolenoidSpec& spec, double inertia, double stroke) {
        return std::sqrt(2.0 * spec.max_force_torque * stroke / inertia);
    }

    double mean_speed(int velocity) const {
        require_midi_velocity(velocity);
        if (velocity >= spec.saturation_velocity || spec.saturation_velocity == 1) return max_speed;
        const double frac = static_cast<double>(velocity - 1) / (spec.saturation_velocity - 1);
        return floor_speed + frac * (max_speed - floor_speed);
    }
};

/// Mean-preserving lognormal scatter around `mean_speed`.
inline double solenoid_step(const SolenoidModel& model, int velocity, std::mt19937_64& rng) {
    const double mean = model.mean_speed(velocity);
    const double sigma = model.spec.noise_sigma;
    if (sigma == 0.0) return mean;
    std::normal_distribution<double> z(0.0, 1.0);
    return mean * std::exp(sigma * z(rng) - 0.5 * sigma * sigma);
}

inline double solenoid_step(const SolenoidModel& model, int velocity, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return solenoid_step(model, velocity, rng);
}

}  // namespace rbm
