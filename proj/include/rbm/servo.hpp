#pragma once

// One striker's drive: plant, position loop, overcurrent protection and the
// relay auto-tuner. The drive runs `substeps` control updates per bus tick and
// applies each torque command one update late (computation delay).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rbm/error.hpp"
#include "rbm/mallet_dynamics.hpp"
#include "rbm/overcurrent.hpp"
#include "rbm/pid.hpp"
#include "rbm/plant.hpp"
#include "rbm/trajectory.hpp"

namespace rbm {

struct ServoConfig {
    double tick_period = 0.001;  // s
    int substeps = 8;
    double upper_stop_offset = 0.6;      // rad above the key
    double encoder_resolution = 2.0 * std::numbers::pi / 65536.0;
    double encoder_offset = 0.7;         // rad, unknown to the controller until homed
    double integral_limit = 0.1;         // Nm
    double homing_torque = 0.08;         // Nm
    double homing_timeout = 2.0;         // s
    double homing_move_time = 0.1;       // s
    double homing_settle_velocity = 1e-3;  // rad/s
    double homing_min_time = 0.02;       // s
    double relay_amplitude = 0.5;        // Nm
    double relay_duration = 0.05;        // s
    double tuning_ratio = 10.0;          // ultimate frequency / loop bandwidth
    double tuning_damping = 0.8;

    double dt() const { return tick_period / substeps; }

    void validate() const {
        if (!(tick_period > 0 && substeps >= 4))
            throw ConfigError("servo: tick period must be positive and substeps >= 4");
        if (!(upper_stop_offset > 0 && encoder_resolution > 0 && integral_limit >= 0))
            throw ConfigError("servo: stop offset, encoder resolution and integral limit must be positive");
        if (!(homing_torque > 0 && homing_timeout > 0 && homing_move_time > 0))
            throw ConfigError("servo: homing parameters must be positive");
        if (!(relay_amplitude > 0 && relay_duration > 0 && tuning_ratio > 1 && tuning_damping > 0))
            throw ConfigError("servo: tuning parameters out of range");
    }
};

struct TickReport {
    bool hit_key = false;
    double impact_speed = 0.0;
    double peak_current = 0.0;
};

class ServoAxis {
public:
    enum class Mode { Off, Torque, Position };

    /// `truth` drives the simulated plant, `model` is what the drive's feedforward believes.
    ServoAxis(PlantParams truth, PlantParams model, MotorSpec motor, PidGains gains, TripConfig trip,
              ServoConfig cfg, PlantState initial)
        : truth_(truth), model_(model), motor_(motor), gains_(gains), trip_cfg_(trip), cfg_(cfg),
          plant_(initial), bias_(cfg.encoder_offset) {}

    void set_trajectory(const Trajectory& t) {
        trajectory_ = t;
        mode_ = Mode::Position;
        pid_.previous_error = trajectory_.at(plant_.time).position - angle();
        pid_.primed = true;
    }

    void set_torque(double torque) {
        open_loop_torque_ = torque;
        mode_ = Mode::Torque;
    }

    void power_off() { mode_ = Mode::Off; }

    /// Declares the current encoder reading to be `known_angle`.
    void zero_encoder(double known_angle) { bias_ = plant_.angle - known_angle; }

    void reset_trip() {
        trip_.reset();
        pid_ = PidState{};
    }

    TickReport step_tick() {
        TickReport report;
        const double dt = cfg_.dt();
        for (int i = 0; i < cfg_.substeps; ++i) {
            const double applied = trip_.tripped ? 0.0 : pending_;
            const PlantStep step = plant_step(plant_, applied, truth_, dt);
            plant_ = step.state;
            if (step.hit_key && !report.hit_key) {
                report.hit_key = true;
                report.impact_speed = step.impact_speed;
            }
            trip_ = overcurrent_check(trip_, plant_.motor_current, motor_, dt, trip_cfg_);
            report.peak_current = std::max(report.peak_current, std::abs(plant_.motor_current));
            pending_ = trip_.tripped ? 0.0 : command(dt);
        }
        return report;
    }

    double angle() const { return plant_.angle - bias_; }
    double velocity() const { return plant_.angular_velocity; }
    double time() const { return plant_.time; }
    Setpoint setpoint() const { return trajectory_.at(plant_.time); }
    const Trajectory& trajectory() const { return trajectory_; }
    const PlantState& plant() const { return plant_; }
    const PlantParams& model() const { return model_; }
    const PidGains& gains() const { return gains_; }
    const ServoConfig& config() const { return cfg_; }
    const TripState& trip() const { return trip_; }
    bool tripped() const { return trip_.tripped; }
    Mode mode() const { return mode_; }

private:
    double command(double dt) {
        switch (mode_) {
        case Mode::Off:
            return 0.0;
        case Mode::Torque:
            return std::clamp(open_loop_torque_, -gains_.output_limit, gains_.output_limit);
        case Mode::Position: {
            const double t = plant_.time;
            const Setpoint now = trajectory_.at(t);
            // The command lands one update later; feed forward for that instant.
            const Setpoint next = trajectory_.at(t + dt);
            const double feedback = pid_step(gains_, now.position, angle(), dt, pid_);
            const double feedforward = model_.inertia * next.acceleration +
                                       model_.gravity_torque(next.position) + model_.friction_at(next.velocity);
            return std::clamp(feedback + feedforward, -gains_.output_limit, gains_.output_limit);
        }
        }
        return 0.0;
    }

    PlantParams truth_;
    PlantParams model_;
    MotorSpec motor_;
    PidGains gains_;
    TripConfig trip_cfg_;
    ServoConfig cfg_;
    PlantState plant_;
    PidState pid_;
    TripState trip_;
    Trajectory trajectory_ = Trajectory::hold(0.0);
    Mode mode_ = Mode::Off;
    double pending_ = 0.0;
    double open_loop_torque_ = 0.0;
    double bias_ = 0.0;
};

struct RelayResult {
    double ultimate_gain = 0.0;    // Nm per rad/s
    double ultimate_period = 0.0;  // s
};

/// Relay feedback on the velocity of the clamped mallet (gravity compensated,
/// one-update command delay as in the drive). Throws TuningError if the limit
/// cycle does not settle.
inline RelayResult relay_experiment(const PlantParams& plant, double hold_angle, const ServoConfig& cfg) {
    PlantParams free = plant;
    free.lower_stop = -std::numeric_limits<double>::infinity();
    free.upper_stop = std::numeric_limits<double>::infinity();
    const double dt = cfg.dt();
    const double d = cfg.relay_amplitude;
    const int steps = static_cast<int>(std::lround(cfg.relay_duration / dt));

    PlantState s;
    s.angle = hold_angle;
    double pending = 0.0;
    double relay_sign = 1.0;
    std::vector<int> switches;
    std::vector<double> peaks;  // |ω| extreme between consecutive switches
    double extreme = 0.0;
    for (int k = 0; k < steps; ++k) {
        s = plant_step(s, pending, free, dt).state;
        extreme = std::max(extreme, std::abs(s.angular_velocity));
        const double sign = s.angular_velocity > 0 ? -1.0 : (s.angular_velocity < 0 ? 1.0 : relay_sign);
        if (sign != relay_sign) {
            switches.push_back(k);
            peaks.push_back(extreme);
            extreme = 0.0;
            relay_sign = sign;
        }
        pending = relay_sign * d + free.gravity_torque(s.angle);
    }

    constexpr std::size_t kWindow = 8;
    if (switches.size() < kWindow + 2) throw TuningError("auto_tune: relay did not oscillate");
    std::vector<double> periods;
    for (std::size_t i = switches.size() - kWindow; i < switches.size(); ++i)
        periods.push_back((switches[i] - switches[i - 2]) * dt);
    const auto [pmin, pmax] = std::minmax_element(periods.begin(), periods.end());
    if (*pmax > 1.25 * *pmin) throw TuningError("auto_tune: relay oscillation did not converge");
    double period = 0.0;
    for (double p : periods) period += p;
    period /= static_cast<double>(periods.size());
    double amplitude = 0.0;
    for (std::size_t i = peaks.size() - kWindow; i < peaks.size(); ++i) amplitude += peaks[i];
    amplitude /= kWindow;
    if (!(amplitude > 0 && std::isfinite(amplitude))) throw TuningError("auto_tune: no measurable oscillation");
    return {4.0 * d / (std::numbers::pi * amplitude), period};
}

/// Position-loop gains from the velocity-loop ultimate point.
inline PidGains gains_from_relay(const RelayResult& relay, const MotorSpec& motor, const ServoConfig& cfg) {
    const double wu = 2.0 * std::numbers::pi / relay.ultimate_period;
    const double rho = cfg.tuning_ratio;
    PidGains g;
    g.kp = relay.ultimate_gain * wu / (rho * rho);
    g.kd = 2.0 * cfg.tuning_damping * relay.ultimate_gain / rho;
    g.ki = g.kp * wu / (10.0 * rho);
    g.integral_limit = cfg.integral_limit;
    g.output_limit = motor.peak_torque();
    return g;
}

inline PidGains auto_tune(const PlantParams& plant, const MotorSpec& motor, double hold_angle,
                          const ServoConfig& cfg) {
    if (!(std::isfinite(plant.inertia) && plant.inertia > 0 && std::isfinite(plant.gravity_moment) &&
          std::isfinite(plant.friction)))
        throw TuningError("auto_tune: plant parameters must be finite with positive inertia");
    return gains_from_relay(relay_experiment(plant, hold_angle, cfg), motor, cfg);
}

inline PidGains auto_tune(const MalletGeometry& geom, const MotorSpec& motor, const StrikeConfig& strike,
                          const ServoConfig& cfg) {
    return auto_tune(PlantParams::from(geom, motor, strike), motor, strike.contact_angle, cfg);
}

}  // namespace rbm
