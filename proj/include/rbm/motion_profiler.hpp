#pragma once

// MIDI velocity → stroke motion profile under a constant travel time.
//
// A strike is a constant-acceleration drop that starts at rest at a "ready"
// angle above the key and reaches the key after exactly `travel_time`. The
// drop height is ½·a·T², linear in the acceleration, so the velocity alone
// defines the profile and the impact speed a·T scales with it.

#include <cmath>

#include "rbm/error.hpp"

namespace rbm {

constexpr int kMinMidiVelocity = 1;
constexpr int kMaxMidiVelocity = 127;

struct ProfilerConfig {
    double min_acceleration = 0.423497;  // rad/s², velocity 1
    double max_acceleration = 365.1196;  // rad/s², velocity 127
    double travel_time = 0.015;          // s, command to contact
    double lift_time = 0.014;            // s, contact back to rest
    double arm_time = 0.030;             // s, rest to ready angle
    double default_position = 1.6119;    // rad, rest angle above the key
    double contact_position = 1.5708;    // rad, key surface

    double max_stroke() const { return 0.5 * max_acceleration * travel_time * travel_time; }

    void validate() const {
        if (!(min_acceleration > 0 && min_acceleration < max_acceleration))
            throw ConfigError("profiler: need 0 < min_acceleration < max_acceleration");
        if (!(travel_time > 0 && lift_time > 0 && arm_time > 0))
            throw ConfigError("profiler: travel, lift and arm times must be positive");
        if (!(default_position > contact_position))
            throw ConfigError("profiler: default position must lie above the contact position");
        // Every stroke has to start from an angle between the key and the rest position.
        const double headroom = default_position - contact_position;
        if (max_stroke() > headroom * (1.0 + 1e-9))
            throw ConfigError("profiler: loudest stroke starts above the rest position");
    }
};

enum class StrokeDirection { Strike, Lift };

struct MotionProfile {
    double acceleration = 0.0;     // rad/s², magnitude
    double start_position = 0.0;   // rad
    double target_position = 0.0;  // rad
    double travel_time = 0.0;      // s
    StrokeDirection direction = StrokeDirection::Strike;

    double stroke() const { return std::abs(start_position - target_position); }

    bool operator==(const MotionProfile&) const = default;
};

inline void require_midi_velocity(int velocity) {
    if (velocity < kMinMidiVelocity || velocity > kMaxMidiVelocity)
        throw std::out_of_range("MIDI velocity " + std::to_string(velocity) + " outside 1..127");
}

inline double velocity_to_acceleration(int velocity, const ProfilerConfig& cfg) {
    require_midi_velocity(velocity);
    const double span = cfg.max_acceleration - cfg.min_acceleration;
    return cfg.min_acceleration + span * static_cast<double>(velocity - 1) / 126.0;
}

inline MotionProfile make_strike_profile(int velocity, const ProfilerConfig& cfg) {
    cfg.validate();
    MotionProfile p;
    p.acceleration = velocity_to_acceleration(velocity, cfg);
    p.travel_time = cfg.travel_time;
    p.target_position = cfg.contact_position;
    p.start_position = cfg.contact_position + 0.5 * p.acceleration * cfg.travel_time * cfg.travel_time;
    p.direction = StrokeDirection::Strike;
    return p;
}

/// Contact back to rest in `lift_time`: accelerate for half the time, brake for the rest.
inline MotionProfile make_lift_profile(const ProfilerConfig& cfg) {
    cfg.validate();
    MotionProfile p;
    p.start_position = cfg.contact_position;
    p.target_position = cfg.default_position;
    p.travel_time = cfg.lift_time;
    p.acceleration = 4.0 * p.stroke() / (cfg.lift_time * cfg.lift_time);
    p.direction = StrokeDirection::Lift;
    return p;
}

inline double impact_speed(const MotionProfile& profile) {
    return profile.acceleration * profile.travel_time;
}

/// Highest repetition rate a strike-then-lift cycle allows, Hz.
inline double cycle_rate(const ProfilerConfig& cfg) {
    return 1.0 / (cfg.travel_time + cfg.lift_time);
}

}  // namespace rbm
