#pragma once

#include <stdexcept>
#include <string>

namespace dispcascade {

// Bad local dimension (e.g. lowering_op on dim < 2).
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Operators from different Hilbert spaces combined, or an embedding that
// does not fit its slot.
struct SpaceMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Channel/cavity parameters outside their domain (nonpositive radicand,
// alpha = 0 where a cavity is requested, ...).
struct ChannelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Newton refinement failed to converge (dispersion too strong).
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Step control drove the step below its floor; carries the time of failure.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double t_fail)
        : std::runtime_error(what), t_fail_(t_fail) {}
    double time_of_failure() const noexcept { return t_fail_; }

private:
    double t_fail_;
};

// Config-file schema violation; carries the offending key path.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& what, std::string key_path)
        : std::invalid_argument(what + " (at key '" + key_path + "')"),
          key_path_(std::move(key_path)) {}
    const std::string& key_path() const noexcept { return key_path_; }

private:
    std::string key_path_;
};

} // namespace dispcascade
