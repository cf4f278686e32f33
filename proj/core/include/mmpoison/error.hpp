#pragma once

#include <stdexcept>
#include <string>

namespace mmpoison {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (shape mismatch, empty input, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment, pipeline or attack configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A backend was asked for something it does not support (e.g. gradients).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class DuplicateIdError : public Error {
 public:
  using Error::Error;
};

/// Malformed on-disk data: manifest lines, image headers, JSONL records.
class FormatError : public Error {
 public:
  using Error::Error;
};

class MissingFileError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public Error {
 public:
  using Error::Error;
};

/// Referential problems in datasets or reports (unknown / dangling ids).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Dataset violates the requested schema (e.g. |C_i| != 1 for mmqa_like).
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

/// An external model adapter returned something we could not parse.
class ParseError : public Error {
 public:
  using Error::Error;
};

class CraftingError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class DefenseError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmpoison
