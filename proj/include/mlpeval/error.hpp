#pragma once

#include <stdexcept>
#include <string>

namespace mlpeval {

/// Invalid argument or violated precondition in a library call.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed raw dataset or recipe text.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace mlpeval
