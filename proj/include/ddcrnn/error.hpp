#pragma once

#include <stdexcept>
#include <string>

namespace ddcrnn {

// Bad inputs: violated preconditions, malformed files, mismatched shapes.
// The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed text input; carries the 1-based line number.
class ParseError : public ValidationError {
public:
    ParseError(int line, const std::string& what)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

// Numeric failure at runtime (non-finite loss, singular solve). Exit code 1.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ddcrnn
