#pragma once

// The tick loop: sole owner of every striker. Each tick it arms strikers for
// notes coming up, dispatches the notes that are due, then advances every
// drive by one bus cycle.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <vector>

#include "rbm/bounded_queue.hpp"
#include "rbm/striker.hpp"
#include "rbm/tick_scheduler.hpp"

namespace rbm {

class StrikerController {
public:
    StrikerController(std::vector<Striker> strikers, const ProfilerConfig& profiler, const ControllerConfig& cfg,
                      double tick_period)
        : strikers_(std::move(strikers)),
          pending_(strikers_.size()),
          cfg_(cfg),
          tick_period_(tick_period),
          scheduler_(tick_period, stroke_window(profiler, tick_period), cfg.queue_capacity),
          arm_lead_(static_cast<Tick>(std::ceil(profiler.arm_time / tick_period - 1e-9)) + cfg.settle_ticks) {}

    static Tick stroke_window(const ProfilerConfig& p, double tick_period) {
        return static_cast<Tick>(std::ceil((p.travel_time + p.lift_time) / tick_period - 1e-9));
    }

    TickScheduler& scheduler() { return scheduler_; }
    const TickScheduler& scheduler() const { return scheduler_; }
    Tick current_tick() const { return scheduler_.current_tick(); }
    double tick_period() const { return tick_period_; }
    std::size_t size() const { return strikers_.size(); }
    Striker& striker(int i) { return strikers_.at(static_cast<std::size_t>(i)); }
    const Striker& striker(int i) const { return strikers_.at(static_cast<std::size_t>(i)); }
    std::size_t dropped() const { return dropped_ + scheduler_.dropped_conflicts(); }

    /// Moves everything waiting in `inbox` into the scheduler; returns how many were refused.
    std::size_t drain(BoundedQueue<StrikeRequest>& inbox) {
        std::size_t refused = 0;
        while (auto req = inbox.try_pop())
            if (scheduler_.schedule(*req) != ScheduleOutcome::Accepted) ++refused;
        return refused;
    }

    std::vector<StrikerEvent> tick() {
        const Tick now = scheduler_.current_tick();
        std::vector<StrikerEvent> events;
        for (std::size_t i = 0; i < strikers_.size(); ++i) {
            Striker& s = strikers_[i];
            auto& pending = pending_[i];
            if (!pending) {
                const bool can_take = s.status() == StrikerStatus::Idle;
                pending = scheduler_.claim(static_cast<int>(i), can_take ? now + arm_lead_ : now);
                if (pending && can_take) s.arm(pending->velocity);
            }
            if (!pending || pending->tick > now) continue;
            switch (s.status()) {
            case StrikerStatus::Idle:
                if (s.armed_for(pending->velocity)) {
                    s.strike(pending->velocity);
                    events.push_back({now, s.index(), EventKind::Dispatch, 0.0, pending->velocity});
                    if (now > pending->tick)
                        events.push_back({now, s.index(), EventKind::Late, 0.0, pending->velocity});
                    pending.reset();
                } else if (s.hold_target() != make_strike_profile(pending->velocity, s.profiler()).start_position) {
                    s.arm(pending->velocity);
                }
                break;
            case StrikerStatus::Unhomed:
            case StrikerStatus::Faulted:
                events.push_back({now, s.index(), EventKind::Dropped, 0.0, pending->velocity});
                ++dropped_;
                pending.reset();
                break;
            default:
                break;  // still busy; dispatched late once it is back to Idle
            }
        }
        for (auto& s : strikers_) s.advance(now, events);
        scheduler_.advance();
        return events;
    }

    /// Homes every striker that is not already homing, ticking until none remains in Homing.
    std::vector<StrikerEvent> home_all() {
        for (auto& s : strikers_)
            if (s.status() == StrikerStatus::Unhomed || s.status() == StrikerStatus::Idle) s.begin_homing();
        std::vector<StrikerEvent> events;
        auto homing = [&] {
            for (const auto& s : strikers_)
                if (s.status() == StrikerStatus::Homing) return true;
            return false;
        };
        while (homing()) {
            auto ev = tick();
            events.insert(events.end(), ev.begin(), ev.end());
        }
        return events;
    }

    bool busy() const {
        if (!scheduler_.empty()) return true;
        for (std::size_t i = 0; i < strikers_.size(); ++i) {
            if (pending_[i]) return true;
            const auto st = strikers_[i].status();
            if (st == StrikerStatus::Striking || st == StrikerStatus::Lifting || st == StrikerStatus::Homing)
                return true;
        }
        return false;
    }

    /// Ticks until nothing is queued or moving; gives up after `limit` ticks.
    std::vector<StrikerEvent> run_until_idle(Tick limit) {
        std::vector<StrikerEvent> events;
        for (Tick k = 0; k < limit && busy(); ++k) {
            auto ev = tick();
            events.insert(events.end(), ev.begin(), ev.end());
        }
        return events;
    }

private:
    std::vector<Striker> strikers_;
    std::vector<std::optional<StrikeRequest>> pending_;
    ControllerConfig cfg_;
    double tick_period_;
    TickScheduler scheduler_;
    Tick arm_lead_;
    std::size_t dropped_ = 0;
};

/// One line per event: `tick,striker,kind,impact_speed`.
inline void write_event(std::ostream& os, const StrikerEvent& e) {
    char speed[32];
    std::snprintf(speed, sizeof speed, "%.6e", e.impact_speed);
    os << e.tick << ',' << e.striker << ',' << to_string(e.kind) << ',' << speed << '\n';
}

}  // namespace rbm
