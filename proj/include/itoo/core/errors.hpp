#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace itoo {

/// A precondition stated by an operation's contract was not met.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Data is well-formed but disagrees with the configured schema (dimensions, counts).
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input; carries the 1-based line (text formats) or byte offset (binary formats).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::uint64_t location)
        : std::runtime_error(what + " (at " + std::to_string(location) + ")"), location_(location) {}

    std::uint64_t location() const noexcept { return location_; }

private:
    std::uint64_t location_;
};

/// A referenced user, OOTD or item does not exist.
class NotFoundError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// A user has no usable view/like history.
class ColdStartError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Index build refused some input vectors.
class BuildError : public std::runtime_error {
public:
    BuildError(const std::string& what, std::vector<std::uint64_t> rejected_ids)
        : std::runtime_error(what), rejected_ids_(std::move(rejected_ids)) {}

    const std::vector<std::uint64_t>& rejected_ids() const noexcept { return rejected_ids_; }

private:
    std::vector<std::uint64_t> rejected_ids_;
};

}  // namespace itoo
