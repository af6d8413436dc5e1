#pragma once

#include <stdexcept>
#include <string>

namespace graphnls {

enum class ErrorCode {
    BadParams,
    UnknownName,
    EmptyCore,
    ZeroMass,
    POutOfRange,
    InvalidProblem,
    NegativeLambdaRequested,
    NoCommensurableCycle,
    GeometryMismatch,
    NoReturn,
    BisectionFailure,
    HalfGraphNonConvergence,
    ConsistencyViolation,
    ParseError,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::BadParams: return "BadParams";
        case ErrorCode::UnknownName: return "UnknownName";
        case ErrorCode::EmptyCore: return "EmptyCore";
        case ErrorCode::ZeroMass: return "ZeroMass";
        case ErrorCode::POutOfRange: return "POutOfRange";
        case ErrorCode::InvalidProblem: return "InvalidProblem";
        case ErrorCode::NegativeLambdaRequested: return "NegativeLambdaRequested";
        case ErrorCode::NoCommensurableCycle: return "NoCommensurableCycle";
        case ErrorCode::GeometryMismatch: return "GeometryMismatch";
        case ErrorCode::NoReturn: return "NoReturn";
        case ErrorCode::BisectionFailure: return "BisectionFailure";
        case ErrorCode::HalfGraphNonConvergence: return "HalfGraphNonConvergence";
        case ErrorCode::ConsistencyViolation: return "ConsistencyViolation";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

/// Exception carrying a machine-readable code plus a human-readable message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace graphnls
