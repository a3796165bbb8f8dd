#pragma once

// Ingress: MIDI channel messages, the RBMP datagram format and the text
// note-list format all decode to NoteEvents.
//
// RBMP datagram (big-endian where multi-byte):
//   "RBMP"  magic, 4 bytes
//   u8      version (1)
//   u8      record count
//   count × { u8 pitch, u8 velocity, u16 tick offset from the next tick }
//
// A datagram whose first byte has the high bit set is read as raw MIDI instead.

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rbm/error.hpp"
#include "rbm/tick_scheduler.hpp"

namespace rbm {

struct NoteEvent {
    int pitch = 0;
    int velocity = 0;
    Tick tick = 0;

    bool operator==(const NoteEvent&) const = default;
};

struct MidiNote {
    int pitch = 0;
    int velocity = 0;

    bool operator==(const MidiNote&) const = default;
};

namespace detail {
inline int midi_data_length(std::uint8_t status) {
    switch (status & 0xF0) {
    case 0x80: case 0x90: case 0xA0: case 0xB0: case 0xE0: return 2;
    case 0xC0: case 0xD0: return 1;
    default: break;
    }
    switch (status) {
    case 0xF1: case 0xF3: return 1;
    case 0xF2: return 2;
    default: return 0;
    }
}
}  // namespace detail

/// Note-ons with velocity ≥ 1 become notes; note-offs, velocity-0 note-ons and
/// every other message are consumed and ignored.
inline std::vector<MidiNote> parse_midi(std::span<const std::uint8_t> bytes) {
    std::vector<MidiNote> notes;
    std::size_t i = 0;
    while (i < bytes.size()) {
        const std::uint8_t status = bytes[i];
        if (status < 0x80) throw ParseError("midi: data byte where a status byte was expected", i);
        if (status == 0xF0) {  // sysex runs to its terminator
            std::size_t j = i + 1;
            while (j < bytes.size() && bytes[j] != 0xF7) {
                if (bytes[j] >= 0x80) throw ParseError("midi: status byte inside sysex", j);
                ++j;
            }
            if (j == bytes.size()) throw ParseError("midi: unterminated sysex", i);
            i = j + 1;
            continue;
        }
        const int len = detail::midi_data_length(status);
        if (i + static_cast<std::size_t>(len) >= bytes.size()) throw ParseError("midi: truncated message", i);
        for (int k = 1; k <= len; ++k)
            if (bytes[i + k] >= 0x80) throw ParseError("midi: data byte has the high bit set", i + k);
        if ((status & 0xF0) == 0x90 && bytes[i + 2] > 0) notes.push_back({bytes[i + 1], bytes[i + 2]});
        i += 1 + static_cast<std::size_t>(len);
    }
    return notes;
}

constexpr std::uint8_t kDatagramVersion = 1;
constexpr std::size_t kDatagramHeaderSize = 6;
constexpr std::size_t kDatagramRecordSize = 4;
constexpr std::size_t kMaxDatagramRecords = 64;

inline bool has_rbmp_magic(std::span<const std::uint8_t> d) {
    return d.size() >= 4 && d[0] == 'R' && d[1] == 'B' && d[2] == 'M' && d[3] == 'P';
}

/// Decodes one datagram; events are stamped `next_tick + offset`.
inline std::vector<NoteEvent> parse_datagram(std::span<const std::uint8_t> d, Tick next_tick) {
    if (!d.empty() && d[0] >= 0x80) {
        std::vector<NoteEvent> out;
        for (const MidiNote& n : parse_midi(d)) out.push_back({n.pitch, n.velocity, next_tick});
        return out;
    }
    if (!has_rbmp_magic(d)) throw ParseError("datagram: bad magic", 0);
    if (d.size() < kDatagramHeaderSize) throw ParseError("datagram: truncated header", d.size());
    if (d[4] != kDatagramVersion) throw ParseError("datagram: unsupported version", 4);
    const std::size_t count = d[5];
    if (count > kMaxDatagramRecords) throw ParseError("datagram: too many records", 5);
    const std::size_t expected = kDatagramHeaderSize + count * kDatagramRecordSize;
    if (d.size() > expected) throw ParseError("datagram: oversize", expected);
    if (d.size() < expected) throw ParseError("datagram: truncated record", d.size());

    std::vector<NoteEvent> out;
    out.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
        const std::size_t at = kDatagramHeaderSize + r * kDatagramRecordSize;
        const int pitch = d[at];
        const int velocity = d[at + 1];
        const int offset = (d[at + 2] << 8) | d[at + 3];
        if (pitch > 127) throw ParseError("datagram: pitch out of range", at);
        if (velocity > 127) throw ParseError("datagram: velocity out of range", at + 1);
        if (velocity == 0) continue;
        out.push_back({pitch, velocity, next_tick + offset});
    }
    return out;
}

/// Text note list: one `tick pitch velocity` per line, `#` starts a comment.
/// Velocity-0 lines are note-offs and are skipped.
inline std::vector<NoteEvent> parse_note_list(std::istream& in) {
    std::vector<NoteEvent> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        long long tick = 0;
        int pitch = 0;
        int velocity = 0;
        if (!(fields >> tick)) {
            bool blank = true;
            for (char c : line) blank = blank && std::isspace(static_cast<unsigned char>(c));
            if (blank) continue;
            throw Error("note list: line " + std::to_string(lineno) + " is not `tick pitch velocity`");
        }
        std::string rest;
        if (!(fields >> pitch >> velocity) || (fields >> rest))
            throw Error("note list: line " + std::to_string(lineno) + " is not `tick pitch velocity`");
        if (tick < 0 || pitch < 0 || pitch > 127 || velocity < 0 || velocity > 127)
            throw Error("note list: value out of range on line " + std::to_string(lineno));
        if (velocity == 0) continue;
        out.push_back({pitch, velocity, tick});
    }
    return out;
}

}  // namespace rbm
