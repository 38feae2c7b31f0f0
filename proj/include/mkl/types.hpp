#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace mkl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Bad caller input (dimension mismatches, non-finite data, invalid options).
class invalid_input : public std::invalid_argument {
 public:
  explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical routine failed (eigensolver breakdown, non-bracketing root).
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Too few usable eigenvalues to fit a spectral decay law.
class insufficient_spectrum : public std::runtime_error {
 public:
  explicit insufficient_spectrum(const std::string& what) : std::runtime_error(what) {}
};

/// Objective has no meaningful minimizer (both penalties zero without opt-in).
class ill_posed : public std::invalid_argument {
 public:
  explicit ill_posed(const std::string& what) : std::invalid_argument(what) {}
};

/// Model state contradicts itself (e.g. active block with zero norm).
class inconsistent_model : public std::logic_error {
 public:
  explicit inconsistent_model(const std::string& what) : std::logic_error(what) {}
};

/// A file could not be opened, read, or written.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mkl
