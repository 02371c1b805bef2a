// errors.hpp - domain error types shared across the library
#pragma once

#include <stdexcept>
#include <string>

namespace netfence {

// Base class for every error the library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class EmptyInputError : public Error {
public:
    explicit EmptyInputError(const std::string& what = "empty input") : Error(what) {}
};

class ApSetMismatchError : public Error {
public:
    explicit ApSetMismatchError(const std::string& what = "rank vectors cover different AP sets")
        : Error(what) {}
};

class TooFewError : public Error {
public:
    explicit TooFewError(const std::string& what = "need at least 2 ranked APs") : Error(what) {}
};

class MetricMismatchError : public Error {
public:
    explicit MetricMismatchError(const std::string& what = "observation type does not match fence metric")
        : Error(what) {}
};

class NonMonotoneTimeError : public Error {
public:
    explicit NonMonotoneTimeError(const std::string& what = "timestamp older than previous step")
        : Error(what) {}
};

class MalformedMacError : public Error {
public:
    explicit MalformedMacError(const std::string& what = "malformed mac address") : Error(what) {}
};

class StaleEventError : public Error {
public:
    explicit StaleEventError(const std::string& what = "event older than reorder tolerance")
        : Error(what) {}
};

class RssiOutOfRangeError : public Error {
public:
    explicit RssiOutOfRangeError(const std::string& what = "rssi outside [-120, 0] dBm") : Error(what) {}
};

class WeakSaltError : public Error {
public:
    explicit WeakSaltError(const std::string& what = "salt shorter than 16 bytes") : Error(what) {}
};

class EmptyWindowError : public Error {
public:
    explicit EmptyWindowError(const std::string& what = "no samples inside the window") : Error(what) {}
};

class UnknownTopicError : public Error {
public:
    explicit UnknownTopicError(const std::string& what = "unknown topic") : Error(what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace netfence
