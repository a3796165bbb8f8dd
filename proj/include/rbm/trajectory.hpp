#pragma once

// Position setpoint generators sampled by the servo at its internal rate.

#include <cmath>

#include "rbm/motion_profiler.hpp"

namespace rbm {

struct Setpoint {
    double position = 0.0;
    double velocity = 0.0;
    double acceleration = 0.0;
};

class Trajectory {
public:
    enum class Kind { Hold, Ballistic, Transfer };

    static Trajectory hold(double angle) {
        Trajectory t;
        t.kind_ = Kind::Hold;
        t.from_ = t.to_ = angle;
        return t;
    }

    /// x(τ) = from + v0·τ + ½·a·τ² for τ ≥ 0, unbounded in time.
    static Trajectory ballistic(double from, double v0, double a, double t0) {
        Trajectory t;
        t.kind_ = Kind::Ballistic;
        t.from_ = from;
        t.v0_ = v0;
        t.accel_ = a;
        t.t0_ = t0;
        return t;
    }

    /// Rest-to-rest move: constant acceleration for half of `duration`, then braking.
    static Trajectory transfer(double from, double to, double duration, double t0) {
        Trajectory t;
        t.kind_ = Kind::Transfer;
        t.from_ = from;
        t.to_ = to;
        t.duration_ = duration;
        t.accel_ = 4.0 * (to - from) / (duration * duration);
        t.t0_ = t0;
        return t;
    }

    /// The downward drop of a strike profile, started at `t0`.
    static Trajectory strike(const MotionProfile& p, double t0) {
        return ballistic(p.start_position, 0.0, -p.acceleration, t0);
    }

    static Trajectory lift(const MotionProfile& p, double t0) {
        return transfer(p.start_position, p.target_position, p.travel_time, t0);
    }

    Kind kind() const { return kind_; }
    double start_time() const { return t0_; }
    double duration() const { return duration_; }
    double end_position() const { return to_; }

    bool finished(double t) const { return kind_ != Kind::Transfer || t - t0_ >= duration_ - 1e-9; }

    Setpoint at(double t) const {
        const double tau = t - t0_;
        switch (kind_) {
        case Kind::Hold:
            return {from_, 0.0, 0.0};
        case Kind::Ballistic:
            if (tau <= 0) return {from_, v0_, 0.0};
            return {from_ + v0_ * tau + 0.5 * accel_ * tau * tau, v0_ + accel_ * tau, accel_};
        case Kind::Transfer: {
            if (tau <= 0) return {from_, 0.0, 0.0};
            if (tau >= duration_) return {to_, 0.0, 0.0};
            const double half = duration_ / 2.0;
            if (tau < half) return {from_ + 0.5 * accel_ * tau * tau, accel_ * tau, accel_};
            const double rem = duration_ - tau;
            return {to_ - 0.5 * accel_ * rem * rem, accel_ * rem, -accel_};
        }
        }
        return {from_, 0.0, 0.0};
    }

private:
    Kind kind_ = Kind::Hold;
    double from_ = 0.0;
    double to_ = 0.0;
    double v0_ = 0.0;
    double accel_ = 0.0;
    double duration_ = 0.0;
    double t0_ = 0.0;
};

}  // namespace rbm
