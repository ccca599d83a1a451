#pragma once

#include <stdexcept>
#include <string>

namespace engage {

/// Root of every error the library throws. `exit_code()` follows the CLI
/// convention: 1 input/parse, 2 internal consistency, 3 degenerate analytics.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

class InputError : public Error {
public:
    using Error::Error;
};

// Malformed document; the message carries source, line and field. Line 0
// means the location is given by the field path alone (tree documents).
class ParseError : public InputError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& field,
               const std::string& what)
        : InputError(source + (line ? ":" + std::to_string(line) : std::string()) + ": " +
                     (field.empty() ? "" : "field '" + field + "': ") + what),
          source_(source), line_(line), field_(field) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::string source_;
    std::size_t line_;
    std::string field_;
};

class SchemaError : public InputError {
public:
    using InputError::InputError;
};

class RangeError : public InputError {
public:
    using InputError::InputError;
};

class DuplicateKeyError : public InputError {
public:
    using InputError::InputError;
};

class MappingError : public InputError {
public:
    using InputError::InputError;
};

class SpecError : public InputError {
public:
    using InputError::InputError;
};

// A Table 1 N/A cell was reached: a classifier bug, never valid data.
class ConsistencyError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class DegenerateError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

}  // namespace engage
