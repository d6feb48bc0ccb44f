#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace prbox {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PRBOX_DEFINE_ERROR(Name)                  \
    class Name : public Error {                   \
    public:                                       \
        using Error::Error;                       \
    }

PRBOX_DEFINE_ERROR(DimensionMismatch);
PRBOX_DEFINE_ERROR(NotNormalized);
PRBOX_DEFINE_ERROR(NegativeProbability);
PRBOX_DEFINE_ERROR(SignalingAmbiguity);
PRBOX_DEFINE_ERROR(WrongShape);
PRBOX_DEFINE_ERROR(ShapeMismatch);
PRBOX_DEFINE_ERROR(MissingAssignment);
PRBOX_DEFINE_ERROR(UnownedInputBit);
PRBOX_DEFINE_ERROR(NotAVertex);
PRBOX_DEFINE_ERROR(Infeasible);
PRBOX_DEFINE_ERROR(ProtocolInvalid);
PRBOX_DEFINE_ERROR(ParseError);

#undef PRBOX_DEFINE_ERROR

/// Raised when an exhaustive computation would exceed its configured cap.
class TooLarge : public Error {
public:
    TooLarge(const std::string& what, std::uint64_t count, std::uint64_t cap)
        : Error(what + ": count " + std::to_string(count) + " exceeds cap " +
                std::to_string(cap)),
          count_(count), cap_(cap) {}

    std::uint64_t count() const noexcept { return count_; }
    std::uint64_t cap() const noexcept { return cap_; }

private:
    std::uint64_t count_;
    std::uint64_t cap_;
};

} // namespace prbox
