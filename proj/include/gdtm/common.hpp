#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gdtm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorCode {
  invalid_size,
  invalid_parameter,
  shape,
  index,
  solver,
  numerical,
  config,
  io,
  compat,
};

/// Base for every error raised by the library. The code drives CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Process exit status for an error code: 2 config, 3 numerical, 4 shape/compat.
int exit_code_for(ErrorCode code) noexcept;

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

bool all_finite(const Matrix& m);

}  // namespace gdtm
