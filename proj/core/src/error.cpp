#include "subrank/error.hpp"

namespace subrank {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "config error";
    case ErrorKind::data: return "data error";
    case ErrorKind::undefined_signal: return "undefined signal";
    case ErrorKind::sampling_exhausted: return "sampling exhausted";
    case ErrorKind::divergence: return "training divergence";
    case ErrorKind::undefined_metric: return "undefined metric";
  }
  return "error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data:
    case ErrorKind::undefined_signal:
    case ErrorKind::sampling_exhausted: return 3;
    case ErrorKind::divergence: return 4;
    case ErrorKind::undefined_metric: return 5;
  }
  return 1;
}

}  // namespace subrank
