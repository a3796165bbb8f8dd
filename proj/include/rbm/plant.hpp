#pragma once

// Rigid mallet on a motor shaft, one rotational degree of freedom.
//
//   J·θ̈ = τ − G·sin θ − M_f·s(θ̇)
//
// θ is measured from the downward vertical; a downstroke decreases θ, so
// gravity assists it. s() is sign() with a narrow linear band around zero,
// integrated implicitly so the friction term cannot overshoot through zero.
// Two hard stops bound the motion: the key surface below (perfectly
// inelastic, velocity zeroed) and a mechanical stop above used for homing.

#include <algorithm>
#include <cmath>
#include <limits>

#include "rbm/error.hpp"
#include "rbm/mallet_dynamics.hpp"

namespace rbm {

struct PlantParams {
    double inertia = 0.0;           // kg·m², mallet + rotor
    double gravity_moment = 0.0;    // G = first moment · g, Nm
    double friction = 0.0;          // Nm
    double torque_constant = 1.0;   // Nm/A
    double friction_band = 1e-4;    // rad/s
    double lower_stop = -std::numeric_limits<double>::infinity();
    double upper_stop = std::numeric_limits<double>::infinity();

    static PlantParams from(const MalletGeometry& geom, const MotorSpec& motor, const StrikeConfig& strike) {
        PlantParams p;
        p.inertia = mallet_inertia(geom) + motor.rotor_inertia;
        p.gravity_moment = mallet_moment(geom) * strike.gravity;
        p.friction = friction_torque(motor);
        p.torque_constant = motor.torque_constant;
        return p;
    }

    double gravity_torque(double theta) const { return gravity_moment * std::sin(theta); }

    /// Potential energy with zero at the horizontal.
    double potential(double theta) const { return -gravity_moment * std::cos(theta); }

    double friction_at(double omega) const {
        return friction * std::clamp(omega / friction_band, -1.0, 1.0);
    }
};

struct PlantState {
    double angle = 0.0;             // rad
    double angular_velocity = 0.0;  // rad/s
    double motor_current = 0.0;     // A
    double time = 0.0;              // s

    bool operator==(const PlantState&) const = default;
};

struct PlantStep {
    PlantState state;
    bool hit_key = false;
    double impact_speed = 0.0;  // |θ̇| just before the key stopped the mallet
};

inline double kinetic_energy(const PlantState& s, const PlantParams& p) {
    return 0.5 * p.inertia * s.angular_velocity * s.angular_velocity;
}

inline PlantStep plant_step(const PlantState& state, double applied_torque, const PlantParams& p, double dt) {
    if (!(dt > 0)) throw std::invalid_argument("plant_step: dt must be positive");
    if (!std::isfinite(state.angle) || !std::isfinite(state.angular_velocity) || !std::isfinite(applied_torque))
        throw PlantFault("plant_step: non-finite state or torque");

    const double h = dt / p.inertia;
    const double free = state.angular_velocity + h * (applied_torque - p.gravity_torque(state.angle));

    // Implicit friction: solve ω' = free − h·M_f·s(ω') exactly for the piecewise-linear s.
    const double slip = h * p.friction;
    double omega;
    if (free > slip + p.friction_band)
        omega = free - slip;
    else if (free < -(slip + p.friction_band))
        omega = free + slip;
    else
        omega = free / (1.0 + slip / p.friction_band);

    PlantStep out;
    out.state.angle = state.angle + dt * omega;
    out.state.angular_velocity = omega;
    out.state.motor_current = applied_torque / p.torque_constant;
    out.state.time = state.time + dt;

    if (out.state.angle <= p.lower_stop) {
        out.hit_key = omega < 0;
        out.impact_speed = out.hit_key ? -omega : 0.0;
        out.state.angle = p.lower_stop;
        out.state.angular_velocity = 0.0;
    } else if (out.state.angle >= p.upper_stop) {
        out.state.angle = p.upper_stop;
        out.state.angular_velocity = 0.0;
    }

    if (!std::isfinite(out.state.angle) || !std::isfinite(out.state.angular_velocity))
        throw PlantFault("plant_step: state diverged");
    return out;
}

}  // namespace rbm
