#pragma once

#include <stdexcept>
#include <string>

namespace fracpf {

// Bad arguments or configuration: wrong sizes, nonpositive extents, constraint violations.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failure during a solve: non-finite values, overflow guard, inner loop divergence.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Output could not be written: unwritable directory, failed rename, short write.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fracpf
