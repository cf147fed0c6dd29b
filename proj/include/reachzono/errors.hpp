#ifndef REACHZONO_ERRORS_HPP_
#define REACHZONO_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace reachzono
{

/// Operand shapes do not agree (vector lengths, matrix widths, index ranges).
class DimensionError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// A precondition on a value was violated (empty list, negative radius, ...).
class InvalidArgument : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// The linear-program solver could not reach a verdict. Callers must read
/// this as "cannot certify", never as feasibility or infeasibility.
class SolverFailure : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A propagation exceeded the global zonotope ceiling.
class ResourceError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed model or dataset input.
class ParseError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace reachzono

#endif
