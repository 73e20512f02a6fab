#include "critmix/error.hpp"

namespace critmix {

Error::Error(ErrorKind kind, std::string code, const std::string& message)
    : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code))
{
}

int Error::exit_code() const noexcept
{
    switch (kind_) {
    case ErrorKind::Regime:
        return 2;
    default:
        return 1;
    }
}

} // namespace critmix
