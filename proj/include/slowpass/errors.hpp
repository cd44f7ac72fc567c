#pragma once

#include <stdexcept>
#include <string>

namespace slowpass {

// Every numeric failure carries a short machine-readable kind
// (e.g. "StepUnderflow", "OutOfLayer") next to the human message.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

}  // namespace slowpass
