#pragma once

#include <stdexcept>
#include <string>

namespace qudqn {

// Invalid user-supplied configuration (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Unknown node, edge or other id.
class LookupError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// A node sequence that is not a simple path in the topology.
class PathError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A caller broke an operation's precondition, e.g. acting on a masked action.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// File could not be read or written (maps to CLI exit code 3).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qudqn
