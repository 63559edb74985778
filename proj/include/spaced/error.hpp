#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spaced {

enum class ErrorCode {
    InvalidArgument,
    UnknownItem,
    DegenerateRate,
    OutOfOrderEvent,
    UnsortedInput,
    SingularPoint,
    UndefinedConstants,
    EmptyDataset,
    Diverged,
    EmptyPool,
    InsufficientReviews,
    ZeroInterval,
    InvalidBins,
    UndefinedAuc,
    UndefinedCorrelation,
    EmptyHoldout,
    InvalidConfig,
    MalformedInput,
    Io,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::UnknownItem: return "UNKNOWN_ITEM";
    case ErrorCode::DegenerateRate: return "DEGENERATE_RATE";
    case ErrorCode::OutOfOrderEvent: return "OUT_OF_ORDER_EVENT";
    case ErrorCode::UnsortedInput: return "UNSORTED_INPUT";
    case ErrorCode::SingularPoint: return "SINGULAR_POINT";
    case ErrorCode::UndefinedConstants: return "UNDEFINED_CONSTANTS";
    case ErrorCode::EmptyDataset: return "EMPTY_DATASET";
    case ErrorCode::Diverged: return "DIVERGED";
    case ErrorCode::EmptyPool: return "EMPTY_POOL";
    case ErrorCode::InsufficientReviews: return "INSUFFICIENT_REVIEWS";
    case ErrorCode::ZeroInterval: return "ZERO_INTERVAL";
    case ErrorCode::InvalidBins: return "INVALID_BINS";
    case ErrorCode::UndefinedAuc: return "UNDEFINED_AUC";
    case ErrorCode::UndefinedCorrelation: return "UNDEFINED_CORRELATION";
    case ErrorCode::EmptyHoldout: return "EMPTY_HOLDOUT";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::MalformedInput: return "MALFORMED_INPUT";
    case ErrorCode::Io: return "IO_ERROR";
    }
    return "UNKNOWN";
}

// All library failures are reported through this type; `code()` is stable,
// the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    // Errors caused by bad user input (as opposed to internal failures).
    bool is_validation() const noexcept {
        return code_ != ErrorCode::Diverged;
    }

private:
    ErrorCode code_;
};

} // namespace spaced
