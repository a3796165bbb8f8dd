#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <future>
#include <sstream>

#include "rbm/udp_service.hpp"
#include "test_support.hpp"

using namespace rbm;

namespace {

void send_to(int port, const std::vector<std::uint8_t>& bytes) {
    const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    ASSERT_GE(fd, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    const auto n = ::sendto(fd, bytes.data(), bytes.size(), 0, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    ::close(fd);
    ASSERT_EQ(n, static_cast<long>(bytes.size()));
}

std::vector<std::string> lines_with(const std::string& text, const std::string& needle) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (line.find(needle) != std::string::npos) out.push_back(line);
    return out;
}

}  // namespace

TEST(Session, ChordAcrossArmsContactsOnOneTick) {
    Session s(test::reference_system());
    for (int pitch : {36, 50, 62, 74}) ASSERT_TRUE(s.submit({pitch, 90, 100}));
    std::vector<StrikerEvent> contacts;
    for (int k = 0; k < 300; ++k)
        for (const auto& e : s.tick())
            if (e.kind == EventKind::Contact) contacts.push_back(e);
    ASSERT_EQ(contacts.size(), 4u);
    for (const auto& c : contacts) EXPECT_EQ(c.tick, contacts.front().tick);
    EXPECT_EQ(s.stats().contacts, 4u);
    EXPECT_FALSE(s.submit({127, 90, 400}));
    EXPECT_EQ(s.stats().unrouted, 1u);
}

TEST(Session, MeterKeepsPaceWithTheBus) {
    Session s(test::reference_system());
    for (int k = 0; k < 2000; ++k) s.tick();
    const auto r = s.take_readings();
    ASSERT_EQ(r.size(), 4u);
    EXPECT_NEAR(r.back().time, 2.0, 1e-9);
    EXPECT_NEAR(r.back().spl, 55.0, 0.1);
}

TEST(UdpService, ChordDatagramOverLoopback) {
    UdpService service(test::reference_system(), 0, true);
    ASSERT_GT(service.port(), 0);
    std::ostringstream events, spl;
    std::atomic<bool> stop{false};
    auto running = std::async(std::launch::async, [&] { return service.run(events, spl, stop, 1200); });

    const std::vector<std::uint8_t> chord{'R', 'B', 'M', 'P', 1, 4, 36, 90, 0, 100, 50, 90, 0, 100,
                                          62, 90, 0, 100, 74, 90, 0, 100};
    send_to(service.port(), chord);
    send_to(service.port(), {'R', 'B', 'M', 'P', 9, 0});  // unsupported version
    send_to(service.port(), {0x90, 0x3C});                // truncated MIDI
    const ServiceStats st = running.get();

    EXPECT_EQ(st.datagrams, 3u);
    EXPECT_EQ(st.malformed, 2u);
    EXPECT_EQ(st.inbox_full, 0u);
    EXPECT_EQ(st.session.notes, 4u);
    EXPECT_EQ(st.session.contacts, 4u);
    const auto contacts = lines_with(events.str(), ",contact,");
    ASSERT_EQ(contacts.size(), 4u);
    const auto tick_of = [](const std::string& line) { return line.substr(0, line.find(',')); };
    for (const auto& c : contacts) EXPECT_EQ(tick_of(c), tick_of(contacts.front()));
    EXPECT_EQ(lines_with(spl.str(), ",").size(), 2u);  // readings at 0.5 s and 1.0 s, flushed on exit
}

TEST(UdpService, StopFlagEndsTheLoop) {
    UdpService service(test::reference_system(), 0, true);
    std::ostringstream events, spl;
    std::atomic<bool> stop{true};
    const ServiceStats st = service.run(events, spl, stop);
    EXPECT_EQ(st.datagrams, 0u);
    EXPECT_TRUE(events.str().empty());
}

TEST(UdpService, PortInUseIsReported) {
    UdpSocket first(0, true);
    EXPECT_THROW(UdpSocket(first.port(), true), Error);
}
