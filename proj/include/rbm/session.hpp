#pragma once

// A live performance: routed notes go into the tick loop, contacts are
// rendered to sound and read by the meter. Used by offline playback and by
// the UDP service; ticks are counted from the end of homing.

#include <vector>

#include "rbm/system.hpp"

namespace rbm {

struct SessionStats {
    std::size_t notes = 0;
    std::size_t unrouted = 0;
    std::size_t late_arrivals = 0;
    std::size_t refused = 0;
    std::size_t contacts = 0;
};

class Session {
public:
    explicit Session(const System& sys)
        : cfg_(sys.config),
          ctl_(sys.make_homed_controller()),
          router_(sys.make_router()),
          renderer_(sys.config.acoustics),
          meter_(sys.config.acoustics, 0.0),
          origin_(ctl_.current_tick()) {}

    /// Ticks elapsed since the session started.
    Tick now() const { return ctl_.current_tick() - origin_; }
    double time() const { return static_cast<double>(now()) * cfg_.servo.tick_period; }
    const SessionStats& stats() const { return stats_; }
    const StrikerController& controller() const { return ctl_; }

    /// `note.tick` is in session ticks. Returns the routing, or nothing if the note was refused.
    std::optional<RoutedNote> submit(NoteEvent note) {
        ++stats_.notes;
        note.tick += origin_;
        RoutedNote routed;
        try {
            routed = router_.route(note, ctl_.current_tick());
        } catch (const RoutingError&) {
            ++stats_.unrouted;
            return std::nullopt;
        }
        if (routed.late()) ++stats_.late_arrivals;
        if (ctl_.scheduler().schedule(routed.request) != ScheduleOutcome::Accepted) {
            ++stats_.refused;
            return std::nullopt;
        }
        routed.request.tick -= origin_;
        routed.requested_tick -= origin_;
        return routed;
    }

    /// One bus tick; events are stamped in session ticks.
    std::vector<StrikerEvent> tick() {
        auto events = ctl_.tick();
        const double t1 = time();
        for (auto& e : events) {
            e.tick -= origin_;
            if (e.kind == EventKind::Contact) {
                ++stats_.contacts;
                renderer_.add_impact(static_cast<double>(e.tick) * cfg_.servo.tick_period, e.impact_speed);
            }
        }
        // The meter runs on its own render step; catch it up to the bus.
        while (meter_.time() < t1 - 1e-12) {
            const double from = meter_.time();
            const double to = std::min(t1, from + cfg_.acoustics.render_step);
            if (auto r = meter_.push(renderer_.render(from, to))) readings_.push_back(*r);
        }
        return events;
    }

    bool busy() const { return ctl_.busy(); }

    std::vector<SplReading> take_readings() {
        std::vector<SplReading> out;
        out.swap(readings_);
        return out;
    }

private:
    SystemConfig cfg_;
    StrikerController ctl_;
    NoteRouter router_;
    ImpactRenderer renderer_;
    SplMeter meter_;
    Tick origin_;
    SessionStats stats_;
    std::vector<SplReading> readings_;
};

inline void write_reading(std::ostream& os, const SplReading& r) {
    char line[64];
    std::snprintf(line, sizeof line, "%.3f,%.1f\n", r.time, r.spl);
    os << line;
}

}  // namespace rbm
