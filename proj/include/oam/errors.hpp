#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oam {

/// Argument outside the mathematical domain of an operation
/// (index out of range, non-positive distance, unresolvable mode, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A sample whose phase is undefined (zero-magnitude entry), a constant
/// feature column, or a classification problem with a single class.
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t offset = 0)
        : std::runtime_error(what + " (line " + std::to_string(line) +
                             (offset ? ", offset " + std::to_string(offset) : std::string{}) + ")"),
          line_(line), offset_(offset) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t line_;
    std::size_t offset_;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Error raised by an experiment stage; the message is prefixed with the stage name.
class StageError : public std::runtime_error {
public:
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error("[" + stage + "] " + what), stage_(stage) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace oam
