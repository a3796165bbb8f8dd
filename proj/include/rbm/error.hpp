#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rbm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed MIDI or datagram bytes. `offset` is the byte index where parsing stopped.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class RoutingError : public Error {
public:
    using Error::Error;
};

/// Command issued in a state that does not accept it (e.g. strike while unhomed).
class OrderingError : public Error {
public:
    using Error::Error;
};

class PlantFault : public Error {
public:
    using Error::Error;
};

class TuningError : public Error {
public:
    using Error::Error;
};

}  // namespace rbm
