#pragma once

// Quasi-static torque balance for a rotary mallet striker.
//
// The mallet is a ball of radius R and mass m_b on the end of a rod of
// length L and mass m_s, pivoting about the motor shaft. Angles are measured
// from the downward vertical. During a downstroke the net torque is
//
//   M_d = M_m + M_g(θ) − M_f,   M_g = [m_b(R+L) + m_s·L/2]·g·sin θ,   M_f = k_m·I_0
//
// and the motor torque needed for a target downstroke torque is its inverse.

#include <cmath>
#include <numbers>

#include "rbm/error.hpp"

namespace rbm {

struct MalletGeometry {
    double ball_radius = 0.0;  // R, m
    double ball_mass = 0.0;    // m_b, kg
    double rod_length = 0.0;   // L, m
    double rod_mass = 0.0;     // m_s, kg

    void validate() const {
        if (!(ball_radius > 0 && ball_mass > 0 && rod_length > 0 && rod_mass > 0))
            throw ConfigError("mallet: all dimensions and masses must be positive");
        if (!(ball_radius < rod_length))
            throw ConfigError("mallet: ball radius must be smaller than rod length");
    }
};

struct MotorSpec {
    double torque_constant = 0.0;  // k_m, Nm/A
    double no_load_current = 0.0;  // I_0, A
    double nominal_torque = 0.0;   // Nm
    double max_current = 0.0;      // A
    double rotor_inertia = 0.0;    // kg·m²
    double diameter = 0.0;         // m
    double depth = 0.0;            // m

    double peak_torque() const { return torque_constant * max_current; }
    double nominal_current() const { return nominal_torque / torque_constant; }

    void validate() const {
        if (!(torque_constant > 0 && no_load_current > 0 && nominal_torque > 0 &&
              max_current > 0 && rotor_inertia > 0 && diameter > 0 && depth > 0))
            throw ConfigError("motor: all parameters must be positive");
        if (nominal_torque > peak_torque())
            throw ConfigError("motor: nominal torque exceeds k_m * max_current");
    }
};

struct StrikeConfig {
    double contact_angle = std::numbers::pi / 2;  // θ_c, rad from downward vertical
    double gravity = 9.81;                         // m/s²

    void validate() const {
        if (!(contact_angle >= 0 && contact_angle <= std::numbers::pi))
            throw ConfigError("strike: contact angle must lie in [0, pi]");
        if (!(gravity >= 0 && std::isfinite(gravity)))
            throw ConfigError("strike: gravity must be finite and non-negative");
    }
};

struct Envelope {
    double max_diameter = 0.065;
    double max_depth = 0.040;
};

struct FeasibilityReport {
    double required_torque = 0.0;
    bool fits_envelope = false;
    bool torque_ok = false;

    bool feasible() const { return fits_envelope && torque_ok; }
};

namespace detail {
inline void require_physical(double v, const char* name) {
    if (!std::isfinite(v) || v < 0)
        throw std::invalid_argument(std::string("mallet: ") + name + " must be finite and non-negative");
}
}  // namespace detail

/// First moment of the mallet about the pivot, m_b(R+L) + m_s·L/2 (kg·m).
inline double mallet_moment(const MalletGeometry& geom) {
    detail::require_physical(geom.ball_radius, "ball radius");
    detail::require_physical(geom.ball_mass, "ball mass");
    detail::require_physical(geom.rod_length, "rod length");
    detail::require_physical(geom.rod_mass, "rod mass");
    return geom.ball_mass * (geom.ball_radius + geom.rod_length) + geom.rod_mass * geom.rod_length / 2.0;
}

inline double gravity_torque(const MalletGeometry& geom, double theta, double g) {
    if (!std::isfinite(theta) || !std::isfinite(g))
        throw std::invalid_argument("gravity_torque: non-finite angle or gravity");
    return mallet_moment(geom) * std::sin(theta) * g;
}

inline double friction_torque(const MotorSpec& motor) {
    return motor.torque_constant * motor.no_load_current;
}

/// Motor torque M_m that delivers a downstroke torque `md` at the contact angle.
inline double required_motor_torque(double md, const MalletGeometry& geom, const MotorSpec& motor,
                                    const StrikeConfig& cfg) {
    if (!(md > 0))
        throw std::invalid_argument("required_motor_torque: downstroke torque must be positive");
    return md - gravity_torque(geom, cfg.contact_angle, cfg.gravity) + friction_torque(motor);
}

inline double net_downstroke_torque(double mm, const MalletGeometry& geom, const MotorSpec& motor,
                                    double theta, double g) {
    return mm + gravity_torque(geom, theta, g) - friction_torque(motor);
}

/// Mallet inertia about the pivot: point ball at R+L plus a uniform rod.
/// The ball's own 2/5·m_b·R² term is ignored (R ≪ L).
inline double mallet_inertia(const MalletGeometry& geom) {
    const double reach = geom.ball_radius + geom.rod_length;
    return geom.ball_mass * reach * reach + geom.rod_mass * geom.rod_length * geom.rod_length / 3.0;
}

inline FeasibilityReport feasibility_check(const MotorSpec& motor, const MalletGeometry& geom,
                                           const StrikeConfig& cfg, double md_required,
                                           const Envelope& envelope) {
    if (!(envelope.max_diameter > 0 && envelope.max_depth > 0))
        throw std::invalid_argument("feasibility_check: envelope must be positive");
    FeasibilityReport report;
    report.required_torque = required_motor_torque(md_required, geom, motor, cfg);
    report.torque_ok = motor.nominal_torque >= report.required_torque;
    report.fits_envelope = motor.diameter <= envelope.max_diameter && motor.depth <= envelope.max_depth;
    return report;
}

}  // namespace rbm
