#pragma once

#include <stdexcept>
#include <string>

namespace attnswitch {

/// Malformed input document (bad JSON, wrong types). The message carries the
/// JSON pointer path or byte offset of the problem.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a domain rule.
class SemanticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller broke a precondition (illegal action, negative sigma, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace attnswitch
