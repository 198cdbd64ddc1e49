#pragma once

#include <stdexcept>
#include <string>

namespace dipolar {

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or malformed input (bad kappa, empty samples, ...).
class InvalidArgument : public Error
{
  public:
    using Error::Error;
};

/// Input outside the domain where an operation is defined
/// (branch point, stencil leaving the strip, non-finite values).
class DomainError : public Error
{
  public:
    using Error::Error;
};

/// Kappa regime for which no formula is available.
class RegimeError : public Error
{
  public:
    using Error::Error;
};

/// A simulation could not reach a decision within its budget.
class HorizonError : public Error
{
  public:
    using Error::Error;
};

/// A caller-supplied function violates its documented contract.
class ContractError : public Error
{
  public:
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what)
{
    if (!cond) {
        throw InvalidArgument(what);
    }
}

} // namespace detail

} // namespace dipolar
