#pragma once

#include <stdexcept>
#include <string>

namespace sforge {

// Input violates an operation's precondition. `witness` carries a JSON
// rendering of the offending object when there is one.
class PreconditionError : public std::invalid_argument {
public:
    explicit PreconditionError(const std::string& what, std::string witness = {})
        : std::invalid_argument(what), witness_(std::move(witness)) {}
    const std::string& witness() const { return witness_; }

private:
    std::string witness_;
};

// Instance too large to materialize or search.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

// A guaranteed property failed to hold: a bug or a false claim.
class InvariantViolation : public std::logic_error {
public:
    explicit InvariantViolation(const std::string& what, std::string witness = {})
        : std::logic_error(what), witness_(std::move(witness)) {}
    const std::string& witness() const { return witness_; }

private:
    std::string witness_;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sforge
