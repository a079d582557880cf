#pragma once

#include <stdexcept>
#include <string>

namespace mitodet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV rows, JSON documents, config lines).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A value that parsed fine but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition (dimension mismatch, unknown id, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or codec failure while reading or writing artifacts.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Failure while assembling a dataset from slide records.
class IngestError : public Error {
 public:
  using Error::Error;
};

}  // namespace mitodet
