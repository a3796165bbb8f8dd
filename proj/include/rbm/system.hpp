#pragma once

// Assembles drives, strikers and the comparison solenoid from a configuration.

#include <vector>

#include "rbm/acoustics.hpp"
#include "rbm/config.hpp"
#include "rbm/note_router.hpp"
#include "rbm/striker_controller.hpp"

namespace rbm {

/// Gain from one impact's peak intensity to the meter reading (above room
/// noise) picked by the stroke alignment, averaged over the first `strokes`
/// impacts of a train repeating every `period` seconds from `lead_in`, contact
/// landing `phase` after each note time. The train starts from silence, as
/// the quietest group of the dynamic sweep does.
inline double alignment_gain(const AcousticConfig& acoustics, double lead_in, double period, double phase,
                             double window, int strokes) {
    AcousticConfig cfg = acoustics;
    cfg.resolution_db = 0.0;
    cfg.coupling_k = 1.0;
    std::vector<std::pair<double, double>> impacts;
    for (int i = 0; i < strokes; ++i) impacts.push_back({lead_in + phase + i * period, 1.0});
    const auto readings = simulate_readings(impacts, 0.0, impacts.back().first + window + period, cfg);
    double sum = 0.0;
    for (const auto& [t, speed] : impacts) {
        const auto r = max_reading_after(readings, t, window);
        if (!r) throw ConfigError("acoustics: no reading inside the alignment window");
        sum += spl_to_intensity(r->spl, cfg) - cfg.noise_intensity();
    }
    return sum / strokes;
}

struct System {
    SystemConfig config;
    KeyMap keymap;
    PlantParams model;  // what the drives believe
    PlantParams truth;  // what the simulated mallet does
    PidGains gains;
    SolenoidModel solenoid;

    ServoAxis make_servo() const {
        PlantState rest;
        rest.angle = config.profiler.contact_position;  // unpowered mallet lies on the key
        return ServoAxis(truth, model, config.motor, gains, config.trip, config.servo, rest);
    }

    std::vector<Striker> make_strikers() const {
        std::vector<Striker> out;
        for (int i = 0; i < config.controller.strikers; ++i)
            out.emplace_back(i, make_servo(), config.profiler, config.controller);
        return out;
    }

    StrikerController make_controller() const {
        return StrikerController(make_strikers(), config.profiler, config.controller, config.servo.tick_period);
    }

    /// Controller with every striker homed; throws PlantFault if one fails to home.
    StrikerController make_homed_controller() const {
        StrikerController c = make_controller();
        c.home_all();
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c.striker(static_cast<int>(i)).status() != StrikerStatus::Idle)
                throw PlantFault("homing failed on striker " + std::to_string(i));
        return c;
    }

    NoteRouter make_router() const { return NoteRouter(keymap, config.axis, config.servo.tick_period); }
};

inline System build_system(const SystemConfig& cfg) {
    cfg.validate();
    System sys;
    sys.config = cfg;
    sys.keymap = cfg.make_keymap();
    sys.model = PlantParams::from(cfg.mallet, cfg.motor, cfg.strike);
    sys.truth = sys.model;
    sys.truth.inertia *= cfg.plant_inertia_scale;
    sys.truth.lower_stop = cfg.profiler.contact_position;
    sys.truth.upper_stop = cfg.profiler.contact_position + cfg.servo.upper_stop_offset;
    sys.gains = auto_tune(sys.model, cfg.motor, cfg.strike.contact_angle, cfg.servo);

    sys.solenoid.spec = cfg.solenoid;
    sys.solenoid.max_speed =
        SolenoidModel::full_drive_speed(cfg.solenoid, sys.model.inertia, cfg.profiler.max_stroke());
    const double period = 60.0 / cfg.experiment.bpm;
    const double gain = alignment_gain(cfg.acoustics, cfg.experiment.lead_in, period, cfg.solenoid.stroke_time,
                                       cfg.experiment.alignment_window, cfg.experiment.strokes_per_velocity);
    const double floor_intensity =
        spl_to_intensity(cfg.solenoid.min_spl_floor, cfg.acoustics) - cfg.acoustics.noise_intensity();
    if (!(floor_intensity > 0)) throw ConfigError("solenoid: floor level must lie above room noise");
    sys.solenoid.floor_speed = floor_intensity / (gain * cfg.acoustics.coupling_k);
    if (!(sys.solenoid.floor_speed < sys.solenoid.max_speed))
        throw ConfigError("solenoid: floor level is louder than full drive");
    return sys;
}

}  // namespace rbm
