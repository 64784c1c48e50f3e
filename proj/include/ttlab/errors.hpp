#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ttlab {

// Base of every error raised by the library. Callers that only care about
// "something went wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed caller input: wrong shapes, bad labels, mismatched lengths.
class InputError : public Error {
public:
    using Error::Error;
};

// NaN/Inf surfaced in an activation, loss or gradient.
class NumericFault : public Error {
public:
    using Error::Error;
};

// Invalid architecture, dataset or attack specification.
class SpecError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

// Experiment-protocol violations (empty eval set, too few eligible clips).
class ProtocolError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Corrupt or truncated container file. Carries the byte offset at which
// decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

// Model divergence during training; records the epoch that blew up.
class TrainingFault : public NumericFault {
public:
    TrainingFault(const std::string& what, std::size_t epoch)
        : NumericFault(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

}  // namespace ttlab
