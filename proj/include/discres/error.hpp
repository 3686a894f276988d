#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace discres {

//! Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! A parameter lies outside its admissible domain (negative mean, mixture
//! weights summing above one, probability outside (0,1), ...).
class DomainError : public Error
{
public:
  using Error::Error;
};

//! The conditional distribution puts all of its mass on a single point, so
//! the interior grid is empty.
class DegenerateDistributionError : public Error
{
public:
  using Error::Error;
};

//! The design matrix of a parameter block is rank deficient.
class SingularDesignError : public Error
{
public:
  using Error::Error;
};

//! Coefficients diverge (complete or quasi-complete separation).
class SeparationError : public Error
{
public:
  using Error::Error;
};

//! A method is not defined for the requested family.
class UnsupportedFamilyError : public Error
{
public:
  using Error::Error;
};

//! A fitted quantity is degenerate (e.g. zero variance in a Pearson residual).
class DegenerateFitError : public Error
{
public:
  using Error::Error;
};

//! Bandwidth selection found no mesh value with a defined objective.
class SelectionError : public Error
{
public:
  using Error::Error;
};

//! No defined curve point inside the requested integration range.
class UndefinedDistanceError : public Error
{
public:
  using Error::Error;
};

//! Malformed input data. Carries 1-based line and column when known (0 when
//! not applicable).
class FormatError : public Error
{
public:
  FormatError(const std::string& what, std::size_t line = 0, std::size_t column = 0);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

//! Input/output failure (unreadable or unwritable file).
class IoError : public Error
{
public:
  using Error::Error;
};

//! Invalid command-line usage.
class UsageError : public Error
{
public:
  using Error::Error;
};

} // namespace discres
