#include "gdtm/common.hpp"

namespace gdtm {

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::config:
    case ErrorCode::io:
    case ErrorCode::invalid_parameter:
      return 2;
    case ErrorCode::numerical:
    case ErrorCode::solver:
      return 3;
    case ErrorCode::invalid_size:
    case ErrorCode::shape:
    case ErrorCode::index:
    case ErrorCode::compat:
      return 4;
  }
  return 1;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace gdtm
