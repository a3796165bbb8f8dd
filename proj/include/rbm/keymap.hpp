#pragma once

// Hand-measured table from MIDI pitch to a linear-axis position and striker.
// Strikers 0..3 are the lower mallet of each arm (natural keys), 4..7 the
// upper mallet (accidentals); arm = striker % 4.

#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "rbm/error.hpp"

namespace rbm {

constexpr int kArms = 4;

enum class KeyColor { White, Black };

inline bool is_black_key(int pitch) {
    switch (pitch % 12) {
    case 1: case 3: case 6: case 8: case 10: return true;
    default: return false;
    }
}

struct KeyEntry {
    double axis_position = 0.0;  // m along the arm's rail
    int striker = 0;
    KeyColor color = KeyColor::White;

    int arm() const { return striker % kArms; }
    bool operator==(const KeyEntry&) const = default;
};

struct KeyMap {
    std::map<int, KeyEntry> entries;
    double axis_travel = 0.0;  // m

    void validate() const {
        for (const auto& [pitch, e] : entries) {
            const std::string where = "keymap: pitch " + std::to_string(pitch);
            if (pitch < 0 || pitch > 127) throw ConfigError(where + " outside 0..127");
            if (e.striker < 0 || e.striker >= 2 * kArms) throw ConfigError(where + " has no such striker");
            if (e.axis_position < 0 || e.axis_position > axis_travel)
                throw ConfigError(where + " lies outside the axis travel");
            const bool upper = e.striker >= kArms;
            if (upper != (e.color == KeyColor::Black))
                throw ConfigError(where + ": accidentals belong to the upper strikers, naturals to the lower");
        }
    }
};

/// Layout of the reference instrument: the natural keys from `low` to `high`
/// are split into consecutive zones, one per arm, and an accidental sits half
/// a key width above the natural below it on the same arm.
inline KeyMap make_zoned_keymap(int low, int high, double key_width, const std::vector<int>& zone_sizes,
                                double axis_travel) {
    if (zone_sizes.size() != static_cast<std::size_t>(kArms)) throw ConfigError("keymap: need one zone per arm");
    if (low > high || is_black_key(low)) throw ConfigError("keymap: range must start on a natural key");
    int whites = 0;
    for (int p = low; p <= high; ++p) whites += is_black_key(p) ? 0 : 1;
    if (std::accumulate(zone_sizes.begin(), zone_sizes.end(), 0) != whites)
        throw ConfigError("keymap: zone sizes do not cover the natural keys");

    KeyMap map;
    map.axis_travel = axis_travel;
    int arm = 0;
    int in_zone = -1;
    for (int p = low; p <= high; ++p) {
        if (!is_black_key(p)) {
            if (++in_zone == zone_sizes[static_cast<std::size_t>(arm)]) {
                ++arm;
                in_zone = 0;
            }
            map.entries[p] = {in_zone * key_width, arm, KeyColor::White};
        } else {
            map.entries[p] = {(in_zone + 0.5) * key_width, arm + kArms, KeyColor::Black};
        }
    }
    map.validate();
    return map;
}

inline const KeyEntry& map_pitch(const KeyMap& map, int pitch) {
    auto it = map.entries.find(pitch);
    if (it == map.entries.end()) throw RoutingError("no key mapped for pitch " + std::to_string(pitch));
    return it->second;
}

}  // namespace rbm
