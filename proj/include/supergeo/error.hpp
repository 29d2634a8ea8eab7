#pragma once

#include <stdexcept>
#include <string>

namespace supergeo {

// Lexical or syntactic failure in an expression or model file.
// `where` is a human-readable location ("column 12", "file.model:3").
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::string where)
        : std::runtime_error(where.empty() ? message : message + " (" + where + ")"),
          where_(std::move(where)) {}

    const std::string& where() const { return where_; }

private:
    std::string where_;
};

// Semantic failure: parity violations, singular pivots, domain errors
// of transcendental functions, mismatched coordinate systems.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& message) : std::runtime_error(message) {}
};

// A numeric flow left its admissible domain (coefficient bound exceeded
// or non-finite values). Carries the last time with a valid state.
class BlowupError : public std::runtime_error {
public:
    BlowupError(const std::string& message, double last_valid_time)
        : std::runtime_error(message), last_valid_time_(last_valid_time) {}

    double last_valid_time() const { return last_valid_time_; }

private:
    double last_valid_time_;
};

} // namespace supergeo
