#pragma once

#include <stdexcept>
#include <string>

namespace acr {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 6D input whose two 3-vectors are near-zero or parallel.
class DegenerateRotation : public Error {
 public:
  using Error::Error;
};

// Two hand centers closer than the repulsion / interaction formulas can divide by.
class CoincidentCenters : public Error {
 public:
  using Error::Error;
};

// Point sets for which no unique similarity alignment exists.
class DegenerateAlignment : public Error {
 public:
  using Error::Error;
};

class InvalidLabel : public Error {
 public:
  using Error::Error;
};

class InitializationError : public Error {
 public:
  using Error::Error;
};

// Malformed file content (tensor files, scene JSON, rig files, configs).
class FormatError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace acr
