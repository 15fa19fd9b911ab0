#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rae {

// Base class for all errors raised by the toolkit. The CLI maps subclasses
// onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor/image shape disagreement.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Out-of-range argument (class index, negative epsilon, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed file or bit stream. Carries the byte offset where parsing failed
// when one is known (-1 otherwise).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg, std::int64_t offset = -1)
        : Error(offset >= 0 ? msg + " (offset " + std::to_string(offset) + ")" : msg),
          offset_(offset) {}

    std::int64_t offset() const { return offset_; }

private:
    std::int64_t offset_;
};

// Payload does not fit into the cover under the requested backend/settings.
class CapacityError : public Error {
public:
    CapacityError(std::uint64_t required_bits, std::uint64_t available_bits)
        : Error("payload exceeds capacity: required " + std::to_string(required_bits) +
                " bits, available " + std::to_string(available_bits) + " bits"),
          required_(required_bits),
          available_(available_bits) {}

    std::uint64_t required_bits() const { return required_; }
    std::uint64_t available_bits() const { return available_; }

private:
    std::uint64_t required_;
    std::uint64_t available_;
};

// Attack produced no adversarial example.
class AttackFailedError : public Error {
public:
    using Error::Error;
};

// Gradient vanished at the current iterate; gradient-following attacks cannot
// make progress from such a point.
class DegenerateGradientError : public AttackFailedError {
public:
    using AttackFailedError::AttackFailedError;
};

// Loss became non-finite during training.
class TrainingError : public Error {
public:
    using Error::Error;
};

// Image fails the structural checks of an RDH-marked image.
class NotMarkedImageError : public FormatError {
public:
    using FormatError::FormatError;
};

// Extracted payload fails its checksum or internal consistency checks.
class CorruptedPayloadError : public FormatError {
public:
    using FormatError::FormatError;
};

}  // namespace rae
