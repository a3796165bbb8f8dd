#pragma once

// Note queue keyed by bus tick. Notes are released only on tick boundaries
// and a striker can hold at most one note per stroke window.

#include <cstddef>
#include <cstdint>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace rbm {

using Tick = std::int64_t;

struct StrikeRequest {
    int striker = 0;
    int pitch = 0;
    int velocity = 0;
    Tick tick = 0;

    bool operator==(const StrikeRequest&) const = default;
};

enum class ScheduleOutcome { Accepted, PastTick, Backpressure, Conflict };

class TickScheduler {
public:
    TickScheduler(double tick_period, Tick stroke_window, std::size_t capacity)
        : tick_period_(tick_period), stroke_window_(stroke_window), capacity_(capacity) {}

    ScheduleOutcome schedule(const StrikeRequest& req) {
        if (req.tick < current_tick_) {
            ++rejected_past_;
            return ScheduleOutcome::PastTick;
        }
        if (queue_.size() >= capacity_) {
            ++rejected_full_;
            return ScheduleOutcome::Backpressure;
        }
        auto& booked = booked_[req.striker];
        auto next = booked.lower_bound(req.tick);
        const bool clash_next = next != booked.end() && *next - req.tick < stroke_window_;
        const bool clash_prev = next != booked.begin() && req.tick - *std::prev(next) < stroke_window_;
        if (clash_next || clash_prev) {
            ++dropped_conflict_;
            return ScheduleOutcome::Conflict;
        }
        booked.insert(req.tick);
        queue_.emplace(req.tick, req);
        return ScheduleOutcome::Accepted;
    }

    /// Earliest queued request for `striker` due at or before `horizon`, removed from the queue.
    std::optional<StrikeRequest> claim(int striker, Tick horizon) {
        for (auto it = queue_.begin(); it != queue_.end() && it->first <= horizon; ++it) {
            if (it->second.striker == striker) {
                StrikeRequest req = it->second;
                queue_.erase(it);
                return req;
            }
        }
        return std::nullopt;
    }

    /// Everything due at or before `tick`, in tick order.
    std::vector<StrikeRequest> take_due(Tick tick) {
        std::vector<StrikeRequest> out;
        auto end = queue_.upper_bound(tick);
        for (auto it = queue_.begin(); it != end; ++it) out.push_back(it->second);
        queue_.erase(queue_.begin(), end);
        return out;
    }

    void advance() {
        ++current_tick_;
        for (auto& [striker, booked] : booked_)
            booked.erase(booked.begin(), booked.lower_bound(current_tick_ - stroke_window_));
    }

    Tick current_tick() const { return current_tick_; }
    double tick_period() const { return tick_period_; }
    Tick stroke_window() const { return stroke_window_; }
    std::size_t pending() const { return queue_.size(); }
    bool empty() const { return queue_.empty(); }
    std::size_t dropped_conflicts() const { return dropped_conflict_; }
    std::size_t rejected_past() const { return rejected_past_; }
    std::size_t rejected_full() const { return rejected_full_; }

private:
    double tick_period_;
    Tick stroke_window_;
    std::size_t capacity_;
    Tick current_tick_ = 0;
    std::multimap<Tick, StrikeRequest> queue_;
    std::map<int, std::set<Tick>> booked_;
    std::size_t dropped_conflict_ = 0;
    std::size_t rejected_past_ = 0;
    std::size_t rejected_full_ = 0;
};

}  // namespace rbm
