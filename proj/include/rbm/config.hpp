#pragma once

// The single key = value configuration file: one section per module.
// Unknown sections and keys are rejected so a typo cannot silently fall back
// to a default.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rbm/acoustics.hpp"
#include "rbm/error.hpp"
#include "rbm/keymap.hpp"
#include "rbm/linear_axis.hpp"
#include "rbm/mallet_dynamics.hpp"
#include "rbm/motion_profiler.hpp"
#include "rbm/overcurrent.hpp"
#include "rbm/servo.hpp"
#include "rbm/solenoid.hpp"
#include "rbm/striker.hpp"

namespace rbm {

struct KeymapLayout {
    int low_pitch = 36;
    int high_pitch = 84;
    double key_width = 0.055;  // m
    std::vector<int> zones{8, 7, 7, 7};
};

struct ExperimentConfig {
    int pitch = 36;                    // C2
    double bpm = 60.0;
    int strokes_per_velocity = 6;
    double lead_in = 1.0;              // s of room noise before the first stroke
    double alignment_window = 0.5;     // s after contact searched for the reading
    int solenoid_fit_max_velocity = 80;
    double speed_start_rate = 1.0;     // Hz
    double speed_rate_step = 0.1;      // Hz
    double speed_max_rate = 40.0;      // Hz, give up above this
    double speed_trial_time = 3.0;     // s
    int speed_velocity = 127;

    void validate() const {
        if (!(bpm > 0 && strokes_per_velocity > 0 && lead_in >= 0 && alignment_window > 0))
            throw ConfigError("experiment: dynamic sweep parameters must be positive");
        if (!(speed_start_rate > 0 && speed_rate_step > 0 && speed_max_rate >= speed_start_rate &&
              speed_trial_time > 0))
            throw ConfigError("experiment: speed sweep parameters must be positive");
        require_midi_velocity(speed_velocity);
        require_midi_velocity(solenoid_fit_max_velocity);
    }
};

struct GatewayConfig {
    int port = 9000;
    std::size_t inbox_capacity = 1024;

    void validate() const {
        if (port < 0 || port > 65535) throw ConfigError("gateway: port outside 0..65535");
        if (inbox_capacity == 0) throw ConfigError("gateway: inbox capacity must be positive");
    }
};

struct SystemConfig {
    MalletGeometry mallet;
    MotorSpec motor;
    StrikeConfig strike;
    Envelope envelope;
    double measured_torque = 0.3125;  // Nm at the mallet
    double plant_inertia_scale = 1.0; // true inertia / modelled inertia
    ProfilerConfig profiler;
    ServoConfig servo;
    TripConfig trip;
    ControllerConfig controller;
    SolenoidSpec solenoid;
    AcousticConfig acoustics;
    AxisLimits axis;
    KeymapLayout keymap;
    ExperimentConfig experiment;
    GatewayConfig gateway;

    void validate() const {
        mallet.validate();
        motor.validate();
        strike.validate();
        profiler.validate();
        servo.validate();
        controller.validate();
        solenoid.validate();
        acoustics.validate();
        axis.validate();
        experiment.validate();
        gateway.validate();
        if (!(measured_torque > 0 && plant_inertia_scale > 0))
            throw ConfigError("mallet: measured torque and inertia scale must be positive");
        if (!(trip.i2t_limit > 0 && trip.cooldown_time > 0)) throw ConfigError("trip: limits must be positive");
        if (std::abs(profiler.contact_position - strike.contact_angle) > 1e-12)
            throw ConfigError("profiler: contact position must equal the strike contact angle");
    }

    KeyMap make_keymap() const {
        return make_zoned_keymap(keymap.low_pitch, keymap.high_pitch, keymap.key_width, keymap.zones, axis.travel);
    }
};

namespace detail {

using boost::property_tree::ptree;

class SectionReader {
public:
    SectionReader(const ptree& root, const std::string& name) : name_(name) {
        if (auto child = root.get_child_optional(name)) node_ = *child;
    }

    void finish() const {
        for (const auto& [key, value] : node_)
            if (!used_.count(key)) throw ConfigError("config: unknown key " + name_ + "." + key);
    }

    template <class T>
    void get(const std::string& key, T& out) {
        used_.insert(key);
        auto v = node_.get_optional<std::string>(key);
        if (!v) return;
        std::istringstream in(*v);
        T parsed{};
        if constexpr (std::is_same_v<T, bool>) {
            std::string word;
            in >> word;
            if (word == "true" || word == "1") parsed = true;
            else if (word == "false" || word == "0") parsed = false;
            else bad(key, *v);
        } else {
            if (!(in >> parsed)) bad(key, *v);
        }
        std::string rest;
        if (in >> rest) bad(key, *v);
        out = parsed;
    }

    void get_list(const std::string& key, std::vector<int>& out) {
        used_.insert(key);
        auto v = node_.get_optional<std::string>(key);
        if (!v) return;
        std::vector<int> parsed;
        std::string item;
        std::istringstream in(*v);
        while (std::getline(in, item, ',')) {
            std::istringstream one(item);
            int x = 0;
            std::string rest;
            if (!(one >> x) || (one >> rest)) bad(key, *v);
            parsed.push_back(x);
        }
        out = parsed;
    }

private:
    [[noreturn]] void bad(const std::string& key, const std::string& value) const {
        throw ConfigError("config: cannot read " + name_ + "." + key + " = '" + value + "'");
    }

    std::string name_;
    ptree node_;
    std::set<std::string> used_;
};

}  // namespace detail

inline SystemConfig parse_config(std::istream& in) {
    detail::ptree root;
    try {
        boost::property_tree::ini_parser::read_ini(in, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    static const std::set<std::string> known{"mallet", "motor",      "strike", "profiler", "servo",
                                             "trip",   "controller", "solenoid", "acoustics", "axis",
                                             "keymap", "experiment", "gateway"};
    for (const auto& [section, node] : root) {
        if (!known.count(section)) throw ConfigError("config: unknown section [" + section + "]");
        if (!node.data().empty()) throw ConfigError("config: key outside any section: " + section);
    }

    SystemConfig c;
    {
        detail::SectionReader s(root, "mallet");
        s.get("ball_radius", c.mallet.ball_radius);
        s.get("ball_mass", c.mallet.ball_mass);
        s.get("rod_length", c.mallet.rod_length);
        s.get("rod_mass", c.mallet.rod_mass);
        s.get("measured_torque", c.measured_torque);
        s.get("plant_inertia_scale", c.plant_inertia_scale);
        s.finish();
    }
    {
        detail::SectionReader s(root, "motor");
        s.get("torque_constant", c.motor.torque_constant);
        s.get("no_load_current", c.motor.no_load_current);
        s.get("nominal_torque", c.motor.nominal_torque);
        s.get("max_current", c.motor.max_current);
        s.get("rotor_inertia", c.motor.rotor_inertia);
        s.get("diameter", c.motor.diameter);
        s.get("depth", c.motor.depth);
        s.get("envelope_diameter", c.envelope.max_diameter);
        s.get("envelope_depth", c.envelope.max_depth);
        s.finish();
    }
    {
        detail::SectionReader s(root, "strike");
        s.get("contact_angle", c.strike.contact_angle);
        s.get("gravity", c.strike.gravity);
        s.finish();
    }
    c.profiler.contact_position = c.strike.contact_angle;
    {
        detail::SectionReader s(root, "profiler");
        s.get("min_acceleration", c.profiler.min_acceleration);
        s.get("max_acceleration", c.profiler.max_acceleration);
        s.get("travel_time", c.profiler.travel_time);
        s.get("lift_time", c.profiler.lift_time);
        s.get("arm_time", c.profiler.arm_time);
        s.get("default_position", c.profiler.default_position);
        s.finish();
    }
    {
        detail::SectionReader s(root, "servo");
        s.get("tick_period", c.servo.tick_period);
        s.get("substeps", c.servo.substeps);
        s.get("upper_stop_offset", c.servo.upper_stop_offset);
        s.get("encoder_resolution", c.servo.encoder_resolution);
        s.get("encoder_offset", c.servo.encoder_offset);
        s.get("integral_limit", c.servo.integral_limit);
        s.get("homing_torque", c.servo.homing_torque);
        s.get("homing_timeout", c.servo.homing_timeout);
        s.get("homing_move_time", c.servo.homing_move_time);
        s.get("homing_settle_velocity", c.servo.homing_settle_velocity);
        s.get("homing_min_time", c.servo.homing_min_time);
        s.get("relay_amplitude", c.servo.relay_amplitude);
        s.get("relay_duration", c.servo.relay_duration);
        s.get("tuning_ratio", c.servo.tuning_ratio);
        s.get("tuning_damping", c.servo.tuning_damping);
        s.finish();
    }
    {
        detail::SectionReader s(root, "trip");
        s.get("i2t_limit", c.trip.i2t_limit);
        s.get("cooldown_time", c.trip.cooldown_time);
        s.finish();
    }
    {
        detail::SectionReader s(root, "controller");
        s.get("strikers", c.controller.strikers);
        s.get("contact_velocity_fraction", c.controller.contact_velocity_fraction);
        s.get("compensation_threshold", c.controller.compensation_threshold);
        s.get("compensation", c.controller.compensation);
        s.get("settle_ticks", c.controller.settle_ticks);
        s.get("queue_capacity", c.controller.queue_capacity);
        s.finish();
    }
    {
        detail::SectionReader s(root, "solenoid");
        s.get("max_force_torque", c.solenoid.max_force_torque);
        s.get("saturation_velocity", c.solenoid.saturation_velocity);
        s.get("noise_sigma", c.solenoid.noise_sigma);
        s.get("min_spl_floor", c.solenoid.min_spl_floor);
        s.get("stroke_time", c.solenoid.stroke_time);
        s.get("return_time", c.solenoid.return_time);
        s.finish();
    }
    {
        detail::SectionReader s(root, "acoustics");
        s.get("reference_intensity", c.acoustics.reference_intensity);
        s.get("room_noise_db", c.acoustics.room_noise_db);
        s.get("coupling_k", c.acoustics.coupling_k);
        s.get("decay_time", c.acoustics.decay_time);
        s.get("meter_time_constant", c.acoustics.meter_time_constant);
        s.get("sample_period", c.acoustics.sample_period);
        s.get("render_step", c.acoustics.render_step);
        s.get("resolution_db", c.acoustics.resolution_db);
        s.finish();
    }
    {
        detail::SectionReader s(root, "axis");
        s.get("max_velocity", c.axis.max_velocity);
        s.get("max_acceleration", c.axis.max_acceleration);
        s.get("travel", c.axis.travel);
        s.finish();
    }
    {
        detail::SectionReader s(root, "keymap");
        s.get("low_pitch", c.keymap.low_pitch);
        s.get("high_pitch", c.keymap.high_pitch);
        s.get("key_width", c.keymap.key_width);
        s.get_list("zones", c.keymap.zones);
        s.finish();
    }
    {
        detail::SectionReader s(root, "experiment");
        s.get("pitch", c.experiment.pitch);
        s.get("bpm", c.experiment.bpm);
        s.get("strokes_per_velocity", c.experiment.strokes_per_velocity);
        s.get("lead_in", c.experiment.lead_in);
        s.get("alignment_window", c.experiment.alignment_window);
        s.get("solenoid_fit_max_velocity", c.experiment.solenoid_fit_max_velocity);
        s.get("speed_start_rate", c.experiment.speed_start_rate);
        s.get("speed_rate_step", c.experiment.speed_rate_step);
        s.get("speed_max_rate", c.experiment.speed_max_rate);
        s.get("speed_trial_time", c.experiment.speed_trial_time);
        s.get("speed_velocity", c.experiment.speed_velocity);
        s.finish();
    }
    {
        detail::SectionReader s(root, "gateway");
        s.get("port", c.gateway.port);
        s.get("inbox_capacity", c.gateway.inbox_capacity);
        s.finish();
    }
    c.validate();
    return c;
}

inline SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    return parse_config(in);
}

}  // namespace rbm
