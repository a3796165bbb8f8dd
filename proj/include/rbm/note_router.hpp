#pragma once

// Pitch routing: picks the arm and striker for each note and plans the arm's
// slide along its rail. A note the arm cannot reach in time is struck as soon
// as the arm arrives and reported late.

#include <cmath>
#include <vector>

#include "rbm/keymap.hpp"
#include "rbm/linear_axis.hpp"
#include "rbm/note_gateway.hpp"
#include "rbm/tick_scheduler.hpp"

namespace rbm {

struct RoutedNote {
    StrikeRequest request;
    Tick requested_tick = 0;
    double axis_position = 0.0;
    bool late() const { return request.tick > requested_tick; }
};

class NoteRouter {
public:
    NoteRouter(KeyMap keymap, AxisLimits limits, double tick_period)
        : keymap_(std::move(keymap)), limits_(limits), tick_period_(tick_period), arms_(kArms) {
        limits_.validate();
        keymap_.validate();
    }

    const KeyMap& keymap() const { return keymap_; }
    const AxisLimits& limits() const { return limits_; }
    std::size_t unrouted() const { return unrouted_; }
    std::size_t late() const { return late_; }

    /// Ticks needed for a rest-to-rest slide of `distance`.
    Tick slide_ticks(double distance) const {
        return static_cast<Tick>(std::ceil(trapezoid_time(distance, limits_) / tick_period_ - 1e-9));
    }

    /// Throws RoutingError for unmapped pitches (after counting them).
    RoutedNote route(const NoteEvent& note, Tick now) {
        const KeyEntry* entry = nullptr;
        try {
            entry = &map_pitch(keymap_, note.pitch);
        } catch (const RoutingError&) {
            ++unrouted_;
            throw;
        }
        Arm& arm = arms_[static_cast<std::size_t>(entry->arm())];
        const Tick depart = std::max(now, arm.free_at);
        const Tick arrival = depart + slide_ticks(entry->axis_position - arm.position);
        RoutedNote out;
        out.requested_tick = note.tick;
        out.axis_position = entry->axis_position;
        out.request = {entry->striker, note.pitch, note.velocity, std::max(note.tick, arrival)};
        if (out.late()) ++late_;
        arm.position = entry->axis_position;
        arm.free_at = out.request.tick;
        return out;
    }

private:
    struct Arm {
        double position = 0.0;
        Tick free_at = 0;
    };

    KeyMap keymap_;
    AxisLimits limits_;
    double tick_period_;
    std::vector<Arm> arms_;
    std::size_t unrouted_ = 0;
    std::size_t late_ = 0;
};

}  // namespace rbm
