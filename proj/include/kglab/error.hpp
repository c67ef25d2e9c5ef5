#pragma once

#include <stdexcept>
#include <string>

namespace kglab {

enum class ErrorCode {
    invalid_argument,
    invalid_interval,
    out_of_band,
    wraparound,
    excluded_endpoint,
    divergence,
    interval_too_large,
    insufficient_points,
    coverage_gap,
    io
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace kglab
