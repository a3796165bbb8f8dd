#pragma once

// The objective experiments: the dynamic-range sweep (single C2 note at
// 60 bpm, six strokes per velocity 1..127), the repetition-rate sweep, the
// intensity line fit and their CSV / plot-data files.

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rbm/system.hpp"

namespace rbm {

enum class Actuator { Bldc, Solenoid };

inline std::string_view to_string(Actuator a) { return a == Actuator::Bldc ? "bldc" : "solenoid"; }

inline Actuator parse_actuator(std::string_view s) {
    if (s == "bldc") return Actuator::Bldc;
    if (s == "solenoid") return Actuator::Solenoid;
    throw ConfigError("unknown actuator '" + std::string(s) + "'");
}

struct SweepRecord {
    int velocity = 0;
    int stroke_index = 0;
    double spl_db = 0.0;
    double intensity = 0.0;  // W/m²
    Tick contact_tick = 0;   // ticks after the sweep start

    bool operator==(const SweepRecord&) const = default;
};

namespace detail {

inline Tick to_ticks(double seconds, double tick_period) {
    return static_cast<Tick>(std::llround(seconds / tick_period));
}

struct Contact {
    Tick tick = 0;
    double impact_speed = 0.0;
};

/// Contacts of the BLDC striker serving `pitch` for notes at the given ticks (relative to the sweep start).
inline std::vector<Contact> bldc_contacts(const System& sys, const std::vector<NoteEvent>& notes, Tick run_ticks) {
    StrikerController ctl = sys.make_homed_controller();
    NoteRouter router = sys.make_router();
    const Tick start = ctl.current_tick();
    for (NoteEvent n : notes) {
        n.tick += start;
        const RoutedNote routed = router.route(n, start);
        if (ctl.scheduler().schedule(routed.request) != ScheduleOutcome::Accepted)
            throw Error("sweep: note at tick " + std::to_string(n.tick - start) + " was not accepted");
    }
    std::vector<Contact> out;
    for (Tick k = 0; k < run_ticks; ++k)
        for (const auto& e : ctl.tick()) {
            if (e.kind == EventKind::Contact) out.push_back({e.tick - start, e.impact_speed});
            if (e.kind == EventKind::Fault) throw PlantFault("sweep: striker faulted at tick " + std::to_string(e.tick));
        }
    return out;
}

}  // namespace detail

/// One stroke per 60/bpm seconds, `strokes_per_velocity` at each velocity 1..127.
/// The BLDC sweep is deterministic and ignores `seed`.
inline std::vector<SweepRecord> run_dynamic_sweep(const System& sys, Actuator actuator, std::uint64_t seed) {
    const SystemConfig& cfg = sys.config;
    const ExperimentConfig& ex = cfg.experiment;
    const double tick = cfg.servo.tick_period;
    if (!sys.keymap.entries.count(ex.pitch))
        throw ConfigError("sweep: experiment pitch " + std::to_string(ex.pitch) + " is not on the keymap");

    const double period = 60.0 / ex.bpm;
    const int strokes = kMaxMidiVelocity * ex.strokes_per_velocity;
    std::vector<NoteEvent> notes;
    for (int i = 0; i < strokes; ++i)
        notes.push_back({ex.pitch, 1 + i / ex.strokes_per_velocity, detail::to_ticks(ex.lead_in + i * period, tick)});
    const double end = ex.lead_in + strokes * period + ex.alignment_window;

    std::vector<detail::Contact> contacts;
    if (actuator == Actuator::Bldc) {
        contacts = detail::bldc_contacts(sys, notes, detail::to_ticks(end, tick));
    } else {
        std::mt19937_64 rng(seed);
        const Tick stroke = detail::to_ticks(cfg.solenoid.stroke_time, tick);
        for (const auto& n : notes) contacts.push_back({n.tick + stroke, solenoid_step(sys.solenoid, n.velocity, rng)});
    }
    if (contacts.size() != notes.size())
        throw Error("sweep: " + std::to_string(contacts.size()) + " contacts for " + std::to_string(notes.size()) +
                    " strokes");

    std::vector<std::pair<double, double>> impacts;
    for (const auto& c : contacts) impacts.push_back({c.tick * tick, c.impact_speed});
    const auto readings = simulate_readings(impacts, 0.0, end, cfg.acoustics);

    std::vector<SweepRecord> out;
    std::size_t r = 0;
    for (int i = 0; i < strokes; ++i) {
        const double t = impacts[static_cast<std::size_t>(i)].first;
        while (r < readings.size() && readings[r].time <= t) ++r;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = r; j < readings.size() && readings[j].time <= t + ex.alignment_window + 1e-9; ++j)
            best = std::max(best, readings[j].spl);
        if (!std::isfinite(best)) throw Error("sweep: no meter reading after stroke " + std::to_string(i));
        out.push_back({notes[static_cast<std::size_t>(i)].velocity, i % ex.strokes_per_velocity, best,
                       spl_to_intensity(best, cfg.acoustics), contacts[static_cast<std::size_t>(i)].tick});
    }
    return out;
}

enum class FailureMode { None, PowerCutoff, FailOfHit };

inline std::string_view to_string(FailureMode m) {
    switch (m) {
    case FailureMode::None: return "none";
    case FailureMode::PowerCutoff: return "power_cutoff";
    case FailureMode::FailOfHit: return "fail_of_hit";
    }
    return "?";
}

struct SpeedTrial {
    double rate = 0.0;  // Hz
    int notes = 0;
    int contacts = 0;
    bool tripped = false;
    double peak_i2t = 0.0;  // A²·s, BLDC only
};

struct SpeedResult {
    double max_rate = 0.0;  // last rate at which every note landed, 0 if none
    FailureMode mode = FailureMode::None;
    std::vector<SpeedTrial> trials;
};

/// Note ticks of one trial at `rate`, relative to the trial start.
inline std::vector<Tick> trial_ticks(double rate, double trial_time, double tick_period) {
    std::vector<Tick> out;
    for (int k = 0; k / rate < trial_time - 1e-9; ++k) out.push_back(detail::to_ticks(k / rate, tick_period));
    return out;
}

inline SpeedTrial run_speed_trial(const System& sys, Actuator actuator, double rate,
                                  const StrikerController& homed) {
    const SystemConfig& cfg = sys.config;
    const ExperimentConfig& ex = cfg.experiment;
    const double tick = cfg.servo.tick_period;
    const auto ticks = trial_ticks(rate, ex.speed_trial_time, tick);
    SpeedTrial trial;
    trial.rate = rate;
    trial.notes = static_cast<int>(ticks.size());

    if (actuator == Actuator::Solenoid) {
        // Open loop: a fire command arriving before the plunger has returned hits nothing.
        const Tick cycle = static_cast<Tick>(std::ceil(cfg.solenoid.cycle_time() / tick - 1e-9));
        Tick ready = 0;
        for (Tick t : ticks) {
            if (t < ready) continue;
            ++trial.contacts;
            ready = t + cycle;
        }
        return trial;
    }

    StrikerController ctl = homed;
    const int striker = map_pitch(sys.keymap, ex.pitch).striker;
    const Tick lead = 20;
    const Tick start = ctl.current_tick() + lead;
    for (Tick t : ticks) ctl.scheduler().schedule({striker, ex.pitch, ex.speed_velocity, start + t});
    const Tick run = lead + ticks.back() + 3 * StrikerController::stroke_window(cfg.profiler, tick);
    for (Tick k = 0; k < run; ++k) {
        for (const auto& e : ctl.tick()) {
            if (e.kind == EventKind::Contact) ++trial.contacts;
            if (e.kind == EventKind::Fault) trial.tripped = true;
        }
        trial.peak_i2t = std::max(trial.peak_i2t, ctl.striker(striker).servo().trip().accumulator);
        if (trial.tripped) break;
    }
    return trial;
}

/// Raises the repetition rate step by step until a trial fails.
inline SpeedResult run_speed_sweep(const System& sys, Actuator actuator, std::uint64_t /*seed*/) {
    const ExperimentConfig& ex = sys.config.experiment;
    const StrikerController homed = sys.make_homed_controller();
    SpeedResult result;
    const int steps = static_cast<int>(std::floor((ex.speed_max_rate - ex.speed_start_rate) / ex.speed_rate_step + 1e-9));
    for (int k = 0; k <= steps; ++k) {
        const double rate = ex.speed_start_rate + k * ex.speed_rate_step;
        SpeedTrial trial = run_speed_trial(sys, actuator, rate, homed);
        result.trials.push_back(trial);
        if (trial.tripped || trial.contacts < trial.notes) {
            result.mode = trial.tripped ? FailureMode::PowerCutoff : FailureMode::FailOfHit;
            return result;
        }
        result.max_rate = rate;
    }
    return result;
}

struct FitResult {
    double slope = 0.0;          // W/m² per velocity step
    double intercept = 0.0;      // W/m²
    double residual_norm = 0.0;  // W/m²
};

/// Mean of `field` per velocity, ascending.
template <class Field>
std::map<int, double> per_velocity_mean(const std::vector<SweepRecord>& records, Field field) {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& r : records) {
        auto& [sum, n] = acc[r.velocity];
        sum += field(r);
        ++n;
    }
    std::map<int, double> out;
    for (const auto& [v, sn] : acc) out[v] = sn.first / sn.second;
    return out;
}

inline std::map<int, double> mean_spl(const std::vector<SweepRecord>& records) {
    return per_velocity_mean(records, [](const SweepRecord& r) { return r.spl_db; });
}

inline std::map<int, double> mean_intensity(const std::vector<SweepRecord>& records) {
    return per_velocity_mean(records, [](const SweepRecord& r) { return r.intensity; });
}

/// Least-squares line through (x, y).
inline FitResult fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0)) throw std::invalid_argument("fit: x values are all equal");
    FitResult f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss += r * r;
    }
    f.residual_norm = std::sqrt(ss);
    return f;
}

/// Line of mean intensity against velocity, optionally restricted to velocities in [min_velocity, max_velocity].
inline FitResult fit_intensity_line(const std::vector<SweepRecord>& records, int max_velocity = kMaxMidiVelocity,
                                    int min_velocity = kMinMidiVelocity) {
    std::vector<double> x, y;
    for (const auto& [v, i] : mean_intensity(records)) {
        if (v < min_velocity || v > max_velocity) continue;
        x.push_back(v);
        y.push_back(i);
    }
    if (x.size() < 2) throw std::invalid_argument("fit: need at least two distinct velocities");
    return fit_line(x, y);
}

constexpr std::string_view kSweepCsvHeader = "velocity,stroke_index,spl_db,intensity_w_m2,contact_tick";

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
    os << kSweepCsvHeader << '\n';
    char line[128];
    for (const auto& r : records) {
        std::snprintf(line, sizeof line, "%d,%d,%.1f,%.5e,%lld\n", r.velocity, r.stroke_index, r.spl_db, r.intensity,
                      static_cast<long long>(r.contact_tick));
        os << line;
    }
}

inline std::vector<SweepRecord> read_sweep_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kSweepCsvHeader) throw Error("sweep csv: missing or wrong header");
    std::vector<SweepRecord> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        SweepRecord r;
        long long tick = 0;
        char tail = 0;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lld%c", &r.velocity, &r.stroke_index, &r.spl_db, &r.intensity,
                        &tick, &tail) != 5)
            throw Error("sweep csv: cannot read line " + std::to_string(lineno));
        r.contact_tick = tick;
        out.push_back(r);
    }
    return out;
}

/// Two-column gnuplot data: velocity and the per-velocity mean.
inline void write_plot_data(std::ostream& os, const std::map<int, double>& series, std::string_view label) {
    os << "# velocity " << label << '\n';
    char line[64];
    for (const auto& [v, y] : series) {
        std::snprintf(line, sizeof line, "%d %.6g\n", v, y);
        os << line;
    }
}

}  // namespace rbm
