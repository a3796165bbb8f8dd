#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "rbm/keymap.hpp"
#include "rbm/linear_axis.hpp"
#include "rbm/note_gateway.hpp"
#include "rbm/note_router.hpp"
#include "test_support.hpp"

using namespace rbm;

namespace {

using Bytes = std::vector<std::uint8_t>;

// Test-only encoder for the datagram format.
Bytes encode(const std::vector<NoteEvent>& events, Tick base) {
    Bytes d{'R', 'B', 'M', 'P', 1, static_cast<std::uint8_t>(events.size())};
    for (const auto& e : events) {
        const auto off = static_cast<std::uint16_t>(e.tick - base);
        d.push_back(static_cast<std::uint8_t>(e.pitch));
        d.push_back(static_cast<std::uint8_t>(e.velocity));
        d.push_back(static_cast<std::uint8_t>(off >> 8));
        d.push_back(static_cast<std::uint8_t>(off & 0xFF));
    }
    return d;
}

std::size_t parse_error_offset(const Bytes& b) {
    try {
        parse_midi(b);
    } catch (const ParseError& e) {
        return e.offset();
    }
    ADD_FAILURE() << "expected a parse error";
    return 0;
}

}  // namespace

TEST(Midi, NoteOnExamples) {
    EXPECT_EQ(parse_midi(Bytes{0x90, 0x3C, 0x40}), (std::vector<MidiNote>{{60, 64}}));
    EXPECT_EQ(parse_midi(Bytes{0x90, 0x24, 0x7F}), (std::vector<MidiNote>{{36, 127}}));
    EXPECT_TRUE(parse_midi(Bytes{0x90, 0x3C, 0x00}).empty());
    EXPECT_TRUE(parse_midi(Bytes{0x80, 0x3C, 0x40}).empty());
    EXPECT_EQ(parse_midi(Bytes{0x9F, 0x3C, 0x01}), (std::vector<MidiNote>{{60, 1}}));  // any channel
}

TEST(Midi, OtherMessagesAreSkipped) {
    const Bytes b{0xB0, 0x07, 0x64,              // control change
                  0xC0, 0x05,                    // program change
                  0xF0, 0x7E, 0x01, 0xF7,        // sysex
                  0xF8,                          // clock
                  0xE0, 0x00, 0x40,              // pitch bend
                  0x91, 0x30, 0x50};
    EXPECT_EQ(parse_midi(b), (std::vector<MidiNote>{{48, 80}}));
}

TEST(Midi, ErrorsCarryByteOffsets) {
    EXPECT_EQ(parse_error_offset({0x90, 0x3C}), 0u);
    EXPECT_EQ(parse_error_offset({0x90, 0x3C, 0x40, 0x90}), 3u);
    EXPECT_EQ(parse_error_offset({0x90, 0x3C, 0x80}), 2u);
    EXPECT_EQ(parse_error_offset({0x90, 0x3C, 0x40, 0x3C, 0x40}), 3u);  // running status
    EXPECT_EQ(parse_error_offset({0xF0, 0x01, 0x02}), 0u);
}

TEST(Datagram, Examples) {
    EXPECT_EQ(parse_datagram(encode({{36, 100, 7}}, 7), 7), (std::vector<NoteEvent>{{36, 100, 7}}));
    const std::vector<NoteEvent> chord{{36, 90, 12}, {50, 90, 12}, {62, 90, 12}, {74, 90, 12}};
    EXPECT_EQ(parse_datagram(encode(chord, 2), 2), chord);
    EXPECT_TRUE(parse_datagram(encode({}, 0), 0).empty());
    // Offset is big-endian.
    const Bytes d{'R', 'B', 'M', 'P', 1, 1, 60, 64, 0x01, 0x02};
    EXPECT_EQ(parse_datagram(d, 1000)[0].tick, 1000 + 258);
}

TEST(Datagram, RawMidiMode) {
    EXPECT_EQ(parse_datagram(Bytes{0x90, 0x24, 0x7F, 0x90, 0x26, 0x10}, 55),
              (std::vector<NoteEvent>{{36, 127, 55}, {38, 16, 55}}));
}

TEST(Datagram, VelocityZeroNeverLeaves) {
    EXPECT_TRUE(parse_datagram(encode({{36, 0, 0}}, 0), 0).empty());
}

TEST(Datagram, MalformedIsRejected) {
    Bytes d = encode({{36, 100, 0}}, 0);
    Bytes bad_magic = d;
    bad_magic[1] = 'X';
    EXPECT_THROW(parse_datagram(bad_magic, 0), ParseError);
    Bytes bad_version = d;
    bad_version[4] = 2;
    EXPECT_THROW(parse_datagram(bad_version, 0), ParseError);
    Bytes oversize = d;
    oversize.push_back(0);
    EXPECT_THROW(parse_datagram(oversize, 0), ParseError);
    Bytes truncated(d.begin(), d.end() - 1);
    EXPECT_THROW(parse_datagram(truncated, 0), ParseError);
    Bytes high_pitch = d;
    high_pitch[6] = 0x80;
    EXPECT_THROW(parse_datagram(high_pitch, 0), ParseError);
    EXPECT_THROW(parse_datagram(Bytes{'R', 'B'}, 0), ParseError);
    EXPECT_THROW(parse_datagram(Bytes{}, 0), ParseError);
    std::vector<NoteEvent> many(kMaxDatagramRecords + 1, NoteEvent{36, 1, 0});
    EXPECT_THROW(parse_datagram(encode(many, 0), 0), ParseError);
}

TEST(Datagram, RandomRoundTrip) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pitch(0, 127), vel(1, 127), count(0, kMaxDatagramRecords), off(0, 65535);
    for (int i = 0; i < 2000; ++i) {
        const Tick base = off(rng) * 17;
        std::vector<NoteEvent> events(static_cast<std::size_t>(count(rng)));
        for (auto& e : events) e = {pitch(rng), vel(rng), base + off(rng)};
        ASSERT_EQ(parse_datagram(encode(events, base), base), events);
    }
}

TEST(Midi, RandomRoundTrip) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> pitch(0, 127), vel(1, 127), n(0, 40), chan(0, 15), junk(0, 3);
    for (int i = 0; i < 2000; ++i) {
        std::vector<MidiNote> notes(static_cast<std::size_t>(n(rng)));
        Bytes b;
        for (auto& m : notes) {
            m = {pitch(rng), vel(rng)};
            if (junk(rng) == 0) b.insert(b.end(), {static_cast<std::uint8_t>(0x80 | chan(rng)), 10, 10});
            b.insert(b.end(), {static_cast<std::uint8_t>(0x90 | chan(rng)), static_cast<std::uint8_t>(m.pitch),
                               static_cast<std::uint8_t>(m.velocity)});
        }
        ASSERT_EQ(parse_midi(b), notes);
    }
}

TEST(NoteList, ParsesTicksCommentsAndBlankLines) {
    std::istringstream in("# a chord and a single note\n0 36 100\n0 38 100  # trailing comment\n\n  \n250 40 0\n"
                          "500 41 127\n");
    EXPECT_EQ(parse_note_list(in), (std::vector<NoteEvent>{{36, 100, 0}, {38, 100, 0}, {41, 127, 500}}));
}

TEST(NoteList, RejectsMalformedLines) {
    for (const char* text : {"0 36\n", "0 36 100 5\n", "x 36 100\n", "0 128 100\n", "-1 36 100\n", "0 36 200\n"}) {
        std::istringstream in(text);
        EXPECT_THROW(parse_note_list(in), Error) << text;
    }
}

TEST(KeyMap, ReferenceLayout) {
    const KeyMap& km = test::reference_system().keymap;
    const KeyEntry& c2 = map_pitch(km, 36);
    EXPECT_EQ(c2.color, KeyColor::White);
    EXPECT_LT(c2.striker, kArms);
    EXPECT_DOUBLE_EQ(c2.axis_position, 0.0);
    const KeyEntry& cs2 = map_pitch(km, 37);
    EXPECT_EQ(cs2.color, KeyColor::Black);
    EXPECT_GE(cs2.striker, kArms);
    EXPECT_EQ(cs2.arm(), c2.arm());
    EXPECT_THROW(map_pitch(km, 127), RoutingError);
    EXPECT_THROW(map_pitch(km, 35), RoutingError);
    EXPECT_EQ(km.entries.size(), 49u);
}

TEST(KeyMap, PositionIsAffineInKeyIndexWithinAnArm) {
    const KeyMap& km = test::reference_system().keymap;
    const double width = test::reference_config().keymap.key_width;
    std::map<int, std::vector<double>> whites;  // arm → positions in pitch order
    for (const auto& [p, e] : km.entries)
        if (e.color == KeyColor::White) whites[e.arm()].push_back(e.axis_position);
    ASSERT_EQ(whites.size(), 4u);
    for (const auto& [arm, pos] : whites)
        for (std::size_t i = 0; i < pos.size(); ++i) EXPECT_NEAR(pos[i], i * width, 1e-12) << "arm " << arm;
}

TEST(KeyMap, ValidationCatchesBadEntries) {
    KeyMap km;
    km.axis_travel = 0.4;
    km.entries[37] = {0.1, 1, KeyColor::Black};  // accidental on a lower striker
    EXPECT_THROW(km.validate(), ConfigError);
    km.entries[37] = {0.5, 5, KeyColor::Black};  // beyond travel
    EXPECT_THROW(km.validate(), ConfigError);
    km.entries[37] = {0.1, 5, KeyColor::Black};
    EXPECT_NO_THROW(km.validate());
    EXPECT_THROW(make_zoned_keymap(36, 84, 0.055, {8, 7, 7, 6}, 0.45), ConfigError);
}

TEST(LinearAxis, TrapezoidClosedForm) {
    const AxisLimits lim{1.0, 8.0, 0.5};
    EXPECT_EQ(trapezoid_time(0.0, lim), 0.0);
    EXPECT_NEAR(trapezoid_time(0.1, lim), 2.0 * std::sqrt(0.1 / 8.0), 1e-15);        // never reaches 1 m/s
    EXPECT_NEAR(trapezoid_time(0.4, lim), 0.4 / 1.0 + 1.0 / 8.0, 1e-15);             // cruises
    EXPECT_NEAR(trapezoid_time(0.125, lim), 2.0 * std::sqrt(0.125 / 8.0), 1e-15);    // exactly touches v_max
}

TEST(LinearAxis, SampledMotionRespectsLimitsAndArrives) {
    const AxisLimits lim{1.0, 8.0, 0.5};
    const double dt = 0.001;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, lim.travel);
    LinearAxisState s;
    for (int move = 0; move < 200; ++move) {
        const double target = u(rng);
        const double expected = trapezoid_time(target - s.position, lim);
        int steps = 0;
        while (!(s.position == target && s.velocity == 0.0)) {
            const LinearAxisState next = axis_step(s, target, lim, dt);
            ASSERT_LE(std::abs(next.velocity), lim.max_velocity + 1e-12);
            if (!(next.position == target && next.velocity == 0.0)) {
                ASSERT_LE(std::abs(next.velocity - s.velocity), lim.max_acceleration * dt + 1e-12);
            }
            ASSERT_GE(next.position, 0.0);
            ASSERT_LE(next.position, lim.travel);
            s = next;
            ASSERT_LT(++steps, 10000);
        }
        EXPECT_NEAR(steps * dt, expected, 0.004) << "move " << move;
    }
    EXPECT_THROW(axis_step(s, 0.6, lim, dt), RoutingError);
}

TEST(NoteRouter, LateArrivalStrikesWhenTheArmArrives) {
    const auto& c = test::reference_config();
    NoteRouter r = test::reference_system().make_router();
    // D3..C4 arm: move the arm to its far end, then ask for a near key 10 ms ahead.
    const RoutedNote far = r.route({60, 64, 0}, 0);  // C4
    const double slide = far.axis_position;
    const Tick far_arrival = static_cast<Tick>(std::ceil(trapezoid_time(slide, c.axis) / 0.001 - 1e-9));
    EXPECT_EQ(far.request.tick, far_arrival);
    EXPECT_TRUE(far.late());
    const RoutedNote back = r.route({50, 64, far.request.tick + 10}, far.request.tick);  // D3
    EXPECT_TRUE(back.late());
    EXPECT_EQ(back.requested_tick, far.request.tick + 10);
    EXPECT_EQ(back.request.tick, far.request.tick + far_arrival);
    EXPECT_EQ(r.late(), 2u);
    // Same key again with time to spare is on time.
    const RoutedNote again = r.route({50, 64, back.request.tick + 40}, back.request.tick);
    EXPECT_FALSE(again.late());
    EXPECT_THROW(r.route({127, 64, 0}, 0), RoutingError);
    EXPECT_EQ(r.unrouted(), 1u);
}

TEST(NoteRouter, TwoHundredMillisecondSlideTenMillisecondsAheadIsLate) {
    AxisLimits lim{0.5, 2.0, 2.0};
    KeyMap km;
    km.axis_travel = 2.0;
    km.entries[36] = {0.0, 0, KeyColor::White};
    // 2·sqrt(d/a) = 0.2 s → d = 0.02 m
    km.entries[38] = {0.02, 0, KeyColor::White};
    NoteRouter r(km, lim, 0.001);
    r.route({36, 64, 0}, 0);
    const RoutedNote n = r.route({38, 64, 10}, 0);
    EXPECT_TRUE(n.late());
    EXPECT_EQ(n.request.tick, 200);
}
