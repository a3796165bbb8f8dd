#pragma once

// Per-striker activation state machine: homing against the upper hard stop,
// arming to the stroke's ready angle, the constant-time drop, contact
// detection, mid-stroke velocity monitoring and the lift back to rest.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "rbm/error.hpp"
#include "rbm/motion_profiler.hpp"
#include "rbm/servo.hpp"
#include "rbm/tick_scheduler.hpp"

namespace rbm {

enum class StrikerStatus { Unhomed, Homing, Idle, Striking, Lifting, Faulted };

inline std::string_view to_string(StrikerStatus s) {
    switch (s) {
    case StrikerStatus::Unhomed: return "unhomed";
    case StrikerStatus::Homing: return "homing";
    case StrikerStatus::Idle: return "idle";
    case StrikerStatus::Striking: return "striking";
    case StrikerStatus::Lifting: return "lifting";
    case StrikerStatus::Faulted: return "faulted";
    }
    return "?";
}

enum class EventKind { Homed, Dispatch, Contact, Compensated, Idle, Late, Dropped, Fault };

inline std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::Homed: return "homed";
    case EventKind::Dispatch: return "dispatch";
    case EventKind::Contact: return "contact";
    case EventKind::Compensated: return "compensated";
    case EventKind::Idle: return "idle";
    case EventKind::Late: return "late";
    case EventKind::Dropped: return "dropped";
    case EventKind::Fault: return "fault";
    }
    return "?";
}

struct StrikerEvent {
    Tick tick = 0;
    int striker = 0;
    EventKind kind = EventKind::Idle;
    double impact_speed = 0.0;  // rad/s, contact events only
    int velocity = 0;           // MIDI velocity of the stroke involved, if any

    bool operator==(const StrikerEvent&) const = default;
};

struct ControllerConfig {
    int strikers = 8;
    double contact_velocity_fraction = 0.2;  // |θ̇| below this share of a·t counts as contact
    double compensation_threshold = 0.02;    // relative speed error at the mid-stroke check
    bool compensation = true;
    int settle_ticks = 3;                    // hold after arming before a drop may start
    std::size_t queue_capacity = 4096;

    void validate() const {
        if (strikers < 1) throw ConfigError("controller: need at least one striker");
        if (!(contact_velocity_fraction > 0 && contact_velocity_fraction < 1))
            throw ConfigError("controller: contact velocity fraction must be in (0, 1)");
        if (!(compensation_threshold > 0)) throw ConfigError("controller: compensation threshold must be positive");
        if (settle_ticks < 0 || queue_capacity == 0) throw ConfigError("controller: bad settle ticks or queue capacity");
    }
};

class Striker {
public:
    Striker(int index, ServoAxis servo, ProfilerConfig profiler, ControllerConfig cfg)
        : index_(index), servo_(std::move(servo)), profiler_(profiler), cfg_(cfg) {}

    int index() const { return index_; }
    StrikerStatus status() const { return status_; }
    const ServoAxis& servo() const { return servo_; }
    const ProfilerConfig& profiler() const { return profiler_; }
    double hold_target() const { return hold_target_; }

    void begin_homing() {
        if (status_ != StrikerStatus::Unhomed && status_ != StrikerStatus::Idle)
            throw OrderingError("home: striker " + std::to_string(index_) + " is " + std::string(to_string(status_)));
        status_ = StrikerStatus::Homing;
        homing_phase_ = HomingPhase::Drive;
        phase_start_ = servo_.time();
        servo_.set_torque(servo_.config().homing_torque);
    }

    /// Moves the Idle hold position to the ready angle of a `velocity` stroke.
    void arm(int velocity) {
        require_status(StrikerStatus::Idle, "arm");
        const double ready = make_strike_profile(velocity, profiler_).start_position;
        if (ready == hold_target_) return;
        servo_.set_trajectory(Trajectory::transfer(hold_target_, ready, profiler_.arm_time, servo_.time()));
        hold_target_ = ready;
        armed_at_ = servo_.time() + profiler_.arm_time + cfg_.settle_ticks * servo_.config().tick_period;
    }

    bool armed_for(int velocity) const {
        return status_ == StrikerStatus::Idle &&
               hold_target_ == make_strike_profile(velocity, profiler_).start_position &&
               servo_.time() >= armed_at_ - 1e-9;
    }

    void strike(int velocity) {
        require_status(StrikerStatus::Idle, "strike");
        if (!armed_for(velocity))
            throw OrderingError("strike: striker " + std::to_string(index_) + " is not armed for velocity " +
                                std::to_string(velocity));
        profile_ = make_strike_profile(velocity, profiler_);
        stroke_velocity_ = velocity;
        // The drive picks the new setpoint up half a bus cycle after the tick that carried it.
        stroke_start_ = servo_.time() + 0.5 * servo_.config().tick_period;
        checkpoint_done_ = false;
        last_speed_ = 0.0;
        servo_.set_trajectory(Trajectory::strike(profile_, stroke_start_));
        status_ = StrikerStatus::Striking;
    }

    /// Faulted → Unhomed; the drive is left unpowered until homed again.
    void reset() {
        require_status(StrikerStatus::Faulted, "reset");
        servo_.reset_trip();
        servo_.power_off();
        status_ = StrikerStatus::Unhomed;
    }

    /// Runs one bus tick starting at `tick`; events are stamped with the tick boundary that ends it.
    void advance(Tick tick, std::vector<StrikerEvent>& out) {
        TickReport report;
        try {
            report = servo_.step_tick();
        } catch (const PlantFault&) {
            fault(tick + 1, out);
            return;
        }
        const Tick now = tick + 1;
        if (servo_.tripped() && status_ != StrikerStatus::Faulted) {
            fault(now, out);
            return;
        }
        switch (status_) {
        case StrikerStatus::Homing: advance_homing(now, out); break;
        case StrikerStatus::Striking: advance_strike(now, report, out); break;
        case StrikerStatus::Lifting:
            if (servo_.trajectory().finished(servo_.time())) {
                status_ = StrikerStatus::Idle;
                hold_target_ = profiler_.default_position;
                armed_at_ = servo_.time();
                servo_.set_trajectory(Trajectory::hold(hold_target_));
                out.push_back({now, index_, EventKind::Idle, 0.0, stroke_velocity_});
            }
            break;
        case StrikerStatus::Unhomed:
        case StrikerStatus::Idle:
        case StrikerStatus::Faulted: break;
        }
    }

private:
    enum class HomingPhase { Drive, Move };

    void require_status(StrikerStatus wanted, const char* what) const {
        if (status_ != wanted)
            throw OrderingError(std::string(what) + ": striker " + std::to_string(index_) + " is " +
                                std::string(to_string(status_)));
    }

    void fault(Tick now, std::vector<StrikerEvent>& out) {
        status_ = StrikerStatus::Faulted;
        servo_.power_off();
        out.push_back({now, index_, EventKind::Fault, 0.0, stroke_velocity_});
    }

    void advance_homing(Tick now, std::vector<StrikerEvent>& out) {
        const ServoConfig& sc = servo_.config();
        const double elapsed = servo_.time() - phase_start_;
        if (homing_phase_ == HomingPhase::Drive) {
            if (elapsed >= sc.homing_min_time && std::abs(servo_.velocity()) < sc.homing_settle_velocity) {
                const double stop = profiler_.contact_position + sc.upper_stop_offset;
                servo_.zero_encoder(stop);
                servo_.set_trajectory(
                    Trajectory::transfer(stop, profiler_.default_position, sc.homing_move_time, servo_.time()));
                homing_phase_ = HomingPhase::Move;
                phase_start_ = servo_.time();
            } else if (elapsed > sc.homing_timeout) {
                fault(now, out);
            }
            return;
        }
        if (servo_.trajectory().finished(servo_.time()) &&
            std::abs(servo_.angle() - profiler_.default_position) <= sc.encoder_resolution) {
            status_ = StrikerStatus::Idle;
            hold_target_ = profiler_.default_position;
            armed_at_ = servo_.time();
            servo_.set_trajectory(Trajectory::hold(hold_target_));
            out.push_back({now, index_, EventKind::Homed, 0.0, 0});
        } else if (elapsed > sc.homing_timeout) {
            fault(now, out);
        }
    }

    void advance_strike(Tick now, const TickReport& report, std::vector<StrikerEvent>& out) {
        const double t = servo_.time();
        const double elapsed = t - stroke_start_;
        const double speed = -servo_.velocity();  // downward positive
        const double expected = profile_.acceleration * std::min(elapsed, profile_.travel_time);

        const bool at_key = servo_.angle() <= profiler_.contact_position + 1e-9;
        const bool stalled = checkpoint_done_ && speed < cfg_.contact_velocity_fraction * expected;
        if (report.hit_key || at_key || stalled) {
            const double impact = report.hit_key ? report.impact_speed : std::max(0.0, last_speed_);
            out.push_back({now, index_, EventKind::Contact, impact, stroke_velocity_});
            status_ = StrikerStatus::Lifting;
            servo_.set_trajectory(Trajectory::lift(make_lift_profile(profiler_), t));
            return;
        }
        last_speed_ = speed;

        if (!checkpoint_done_ && elapsed >= profile_.travel_time / 2 - 1e-9) {
            checkpoint_done_ = true;
            if (cfg_.compensation && std::abs(speed - expected) > cfg_.compensation_threshold * expected) {
                // Re-plan so the remaining height is covered in the remaining time.
                const double remaining = profile_.travel_time - elapsed;
                const double height = servo_.angle() - profiler_.contact_position;
                const double accel = 2.0 * (height - speed * remaining) / (remaining * remaining);
                servo_.set_trajectory(Trajectory::ballistic(servo_.angle(), -speed, -accel, t));
                out.push_back({now, index_, EventKind::Compensated, 0.0, stroke_velocity_});
            }
        }
        if (elapsed > 3.0 * profile_.travel_time) fault(now, out);
    }

    int index_;
    ServoAxis servo_;
    ProfilerConfig profiler_;
    ControllerConfig cfg_;
    StrikerStatus status_ = StrikerStatus::Unhomed;
    HomingPhase homing_phase_ = HomingPhase::Drive;
    double phase_start_ = 0.0;
    double hold_target_ = 0.0;
    double armed_at_ = 0.0;
    MotionProfile profile_;
    int stroke_velocity_ = 0;
    double stroke_start_ = 0.0;
    bool checkpoint_done_ = false;
    double last_speed_ = 0.0;
};

}  // namespace rbm
