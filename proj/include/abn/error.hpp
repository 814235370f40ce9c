#pragma once

#include <stdexcept>
#include <string>

namespace abn {

/// Error raised by every module. `kind()` is a stable, machine-parsable
/// class name (e.g. "UnknownName", "CyclicInput") that the CLI prints
/// ahead of the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

}  // namespace abn
