#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace oedipus {

using Index = Eigen::Index;
using Complex = std::complex<double>;

using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
// Row blocks of stacked measurement rows are sliced by group, so keep rows contiguous.
using CRowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Error taxonomy shared by every module. The CLI maps these onto exit codes.

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The requested design cannot be represented by a finite CRB: the restricted
// system lost full column rank (or came within the condition threshold of it).
struct InfeasibleDesign : std::runtime_error {
  explicit InfeasibleDesign(const std::string &what, Index iteration = -1)
      : std::runtime_error(what), iteration_(iteration) {}
  Index iteration() const { return iteration_; }

private:
  Index iteration_;
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Condition number above which a Gram matrix is treated as singular.
inline constexpr double kConditionLimit = 1e12;

} // namespace oedipus
