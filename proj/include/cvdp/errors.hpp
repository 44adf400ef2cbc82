#pragma once

#include <stdexcept>
#include <string>

namespace cvdp {

// Failure classes map one-to-one onto CLI exit codes (config=2, numerics=3, io=4).

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class NumericsFailure {
    InvalidParams,
    NonIdentical,
    NoSolution,
    StepSizeUnderflow,
    Blowup,
    TooShort,
    NewtonDivergence,
    StepUnderflow,
    MeshAdaptationFailure,
    NotASaddle,
};

const char* to_string(NumericsFailure f);

class NumericsError : public std::runtime_error {
public:
    NumericsError(NumericsFailure kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    NumericsFailure kind() const noexcept { return kind_; }

private:
    NumericsFailure kind_;
};

}  // namespace cvdp
