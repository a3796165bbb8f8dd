#pragma once

// Live mode: a receiver thread turns UDP datagrams into note events and hands
// them to the tick loop through a bounded queue; the tick loop owns the
// session and runs paced to the wall clock.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ostream>
#include <thread>

#include "rbm/bounded_queue.hpp"
#include "rbm/note_gateway.hpp"
#include "rbm/session.hpp"

namespace rbm {

struct ServiceStats {
    std::size_t datagrams = 0;
    std::size_t malformed = 0;
    std::size_t inbox_full = 0;
    SessionStats session;
};

class UdpSocket {
public:
    /// Binds to 127.0.0.1 when `loopback_only`, else every interface. Port 0 picks a free port.
    explicit UdpSocket(int port, bool loopback_only = false) {
        fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
        if (fd_ < 0) throw Error(std::string("udp: socket: ") + std::strerror(errno));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<std::uint16_t>(port));
        addr.sin_addr.s_addr = htonl(loopback_only ? INADDR_LOOPBACK : INADDR_ANY);
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
            const int err = errno;
            ::close(fd_);
            throw Error("udp: cannot bind port " + std::to_string(port) + ": " + std::strerror(err));
        }
        timeval tv{0, 20000};
        ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
        socklen_t len = sizeof addr;
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
    }
    UdpSocket(const UdpSocket&) = delete;
    UdpSocket& operator=(const UdpSocket&) = delete;
    ~UdpSocket() { ::close(fd_); }

    int port() const { return port_; }

    /// Blocks up to the receive timeout; returns the byte count, or -1 if nothing arrived.
    long receive(std::uint8_t* buf, std::size_t cap) {
        const long n = ::recv(fd_, buf, cap, 0);
        return n < 0 ? -1 : n;
    }

private:
    int fd_ = -1;
    int port_ = 0;
};

class UdpService {
public:
    UdpService(const System& sys, int port, bool loopback_only = false)
        : sys_(sys), socket_(port, loopback_only), inbox_(sys.config.gateway.inbox_capacity) {}

    int port() const { return socket_.port(); }

    /// Runs until `stop` is set or `max_ticks` ticks have elapsed (negative: no limit).
    /// Event lines go to `events`, meter readings to `spl`; both are flushed before returning.
    ServiceStats run(std::ostream& events, std::ostream& spl, const std::atomic<bool>& stop, Tick max_ticks = -1) {
        Session session(sys_);
        std::atomic<Tick> next_tick{session.now() + 1};
        std::atomic<bool> done{false};
        std::atomic<std::size_t> datagrams{0}, malformed{0}, full{0};

        std::thread receiver([&] {
            std::vector<std::uint8_t> buf(65536);
            while (!done.load()) {
                const long n = socket_.receive(buf.data(), buf.size());
                if (n < 0) continue;
                ++datagrams;
                std::vector<NoteEvent> notes;
                try {
                    notes = parse_datagram(std::span(buf.data(), static_cast<std::size_t>(n)), next_tick.load());
                } catch (const ParseError&) {
                    ++malformed;
                    continue;
                }
                for (const auto& note : notes)
                    if (!inbox_.try_push(note)) ++full;
            }
        });

        const auto period = std::chrono::duration<double>(sys_.config.servo.tick_period);
        auto deadline = std::chrono::steady_clock::now();
        while (!stop.load() && (max_ticks < 0 || session.now() < max_ticks)) {
            while (auto note = inbox_.try_pop()) session.submit(*note);
            for (const auto& e : session.tick()) write_event(events, e);
            for (const auto& r : session.take_readings()) write_reading(spl, r);
            next_tick.store(session.now() + 1);
            deadline += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
            std::this_thread::sleep_until(deadline);
        }
        done.store(true);
        receiver.join();
        events.flush();
        spl.flush();

        ServiceStats stats;
        stats.datagrams = datagrams.load();
        stats.malformed = malformed.load();
        stats.inbox_full = full.load();
        stats.session = session.stats();
        return stats;
    }

private:
    const System& sys_;
    UdpSocket socket_;
    BoundedQueue<NoteEvent> inbox_;
};

}  // namespace rbm
