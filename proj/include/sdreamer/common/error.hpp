#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sdreamer {

// Base for every error raised by the library. Subclasses let callers (mainly
// the CLI) map failures onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// Malformed on-disk data. `offset` is the byte (or character) position at
// which the problem was detected, when known.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::string path, std::uint64_t offset)
        : Error(path + " @" + std::to_string(offset) + ": " + what),
          path_(std::move(path)),
          offset_(offset) {}

    const std::string& path() const noexcept { return path_; }
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::string path_;
    std::uint64_t offset_;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class RoutingError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace sdreamer
