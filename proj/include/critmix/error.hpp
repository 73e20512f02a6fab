#ifndef CRITMIX_ERROR_HPP
#define CRITMIX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace critmix {

enum class ErrorKind {
    Domain,
    Validation,
    Regime,
    Budget,
    Boundary,
    EmptyCell,
    UndefinedPoint,
    InsufficientSignal,
    NonConvergence,
    Io
};

/// Exception carrying a machine-readable code such as "probs_not_normalized".
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }

    /// Process exit status for the command-line front end.
    int exit_code() const noexcept;

private:
    ErrorKind kind_;
    std::string code_;
};

} // namespace critmix

#endif
