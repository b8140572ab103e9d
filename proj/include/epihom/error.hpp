#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace epihom {

/// Error with a stable machine-readable code (kebab-case slug) plus a
/// human-readable detail message. The slug is what tests and the CLI
/// dispatch on; the message is free-form context.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace epihom
