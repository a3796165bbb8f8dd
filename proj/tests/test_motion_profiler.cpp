#include <gtest/gtest.h>

#include <random>

#include "rbm/motion_profiler.hpp"
#include "rbm/trajectory.hpp"
#include "test_support.hpp"

using namespace rbm;

namespace {

ProfilerConfig simple() {
    ProfilerConfig c;
    c.min_acceleration = 10.0;
    c.max_acceleration = 136.0;
    c.travel_time = 0.02;
    c.lift_time = 0.02;
    c.contact_position = 1.0;
    c.default_position = 1.0 + 0.5 * 136.0 * 0.02 * 0.02;
    return c;
}

}  // namespace

TEST(MotionProfiler, VelocityMapEndpointsAndMidpoint) {
    const auto c = simple();
    EXPECT_DOUBLE_EQ(velocity_to_acceleration(1, c), 10.0);
    EXPECT_DOUBLE_EQ(velocity_to_acceleration(127, c), 136.0);
    EXPECT_DOUBLE_EQ(velocity_to_acceleration(64, c), 10.0 + 63.0);
}

TEST(MotionProfiler, RejectsOutOfRangeVelocity) {
    EXPECT_THROW(velocity_to_acceleration(0, simple()), std::out_of_range);
    EXPECT_THROW(velocity_to_acceleration(128, simple()), std::out_of_range);
    EXPECT_THROW(make_strike_profile(-3, simple()), std::out_of_range);
}

TEST(MotionProfiler, StrokeHeightIsHalfATSquared) {
    const auto c = simple();
    for (int v : {1, 30, 64, 127}) {
        const auto p = make_strike_profile(v, c);
        const double a = velocity_to_acceleration(v, c);
        EXPECT_DOUBLE_EQ(p.acceleration, a);
        EXPECT_DOUBLE_EQ(p.travel_time, 0.02);
        EXPECT_DOUBLE_EQ(p.target_position, 1.0);
        EXPECT_NEAR(p.stroke(), 0.5 * a * 0.0004, 1e-15);
        EXPECT_NEAR(impact_speed(p), a * 0.02, 1e-15);
    }
}

TEST(MotionProfiler, StrokeIsLinearInAcceleration) {
    auto c = simple();
    c.min_acceleration = 20.0;
    c.max_acceleration = 40.0;  // velocity 1 → 20, velocity 127 → 40: double
    EXPECT_NEAR(make_strike_profile(127, c).stroke(), 2.0 * make_strike_profile(1, c).stroke(), 1e-15);
}

TEST(MotionProfiler, DropTrajectoryReachesContactAtTravelTime) {
    const auto c = simple();
    for (int v : {1, 127}) {
        const auto p = make_strike_profile(v, c);
        const auto traj = Trajectory::strike(p, 0.5);
        EXPECT_NEAR(traj.at(0.5 + p.travel_time).position, c.contact_position, 1e-12);
        EXPECT_NEAR(-traj.at(0.5 + p.travel_time).velocity, impact_speed(p), 1e-12);
        EXPECT_GT(traj.at(0.5 + 0.9 * p.travel_time).position, c.contact_position);
    }
}

TEST(MotionProfiler, LiftReturnsToRestInLiftTime) {
    const auto c = simple();
    const auto traj = Trajectory::lift(make_lift_profile(c), 0.0);
    EXPECT_NEAR(traj.at(c.lift_time).position, c.default_position, 1e-12);
    EXPECT_NEAR(traj.at(c.lift_time / 2).position, 0.5 * (c.contact_position + c.default_position), 1e-12);
    EXPECT_NEAR(traj.at(c.lift_time / 2).velocity, 2.0 * (c.default_position - c.contact_position) / c.lift_time,
                1e-12);
    EXPECT_TRUE(traj.finished(c.lift_time));
    EXPECT_FALSE(traj.finished(0.9 * c.lift_time));
}

TEST(MotionProfiler, CycleRateArithmetic) {
    ProfilerConfig c = simple();
    c.travel_time = 0.015;
    c.lift_time = 0.0154;
    EXPECT_NEAR(cycle_rate(c), 32.894736842105, 1e-9);
}

TEST(MotionProfiler, ConfigValidation) {
    auto c = simple();
    c.default_position = 1.0 + 0.5 * c.max_stroke();  // not enough headroom for the loudest stroke
    EXPECT_THROW(c.validate(), ConfigError);
    c = simple();
    c.min_acceleration = c.max_acceleration;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_NO_THROW(test::reference_config().profiler.validate());
}

TEST(MotionProfiler, ReferenceLoudestStrokeUsesMeasuredTorque) {
    const auto& c = test::reference_config();
    const double J = mallet_inertia(c.mallet) + c.motor.rotor_inertia;
    EXPECT_NEAR(c.profiler.max_acceleration, c.measured_torque / J, 1e-9);
    EXPECT_NEAR(c.profiler.default_position - c.profiler.contact_position, c.profiler.max_stroke(), 1e-12);
}
