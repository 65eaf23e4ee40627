#include "optlab/optimizers/common.hpp"

#include <string>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"

namespace optlab::detail {

void require_finite(std::span<const double> values, std::string_view who, std::string_view what) {
  if (!kernels::all_finite(values)) {
    throw PoisonedState(std::string(who) + ": non-finite " + std::string(what));
  }
}

void require_same_size(std::size_t expected, std::size_t got, std::string_view who) {
  if (expected != got) {
    throw ContractViolation(std::string(who) + ": gradient length " + std::to_string(got) +
                            " does not match block length " + std::to_string(expected));
  }
}

void ensure_buffer(std::vector<double>& buf, std::size_t n, std::string_view who) {
  if (buf.empty()) {
    buf.assign(n, 0.0);
  } else if (buf.size() != n) {
    throw ContractViolation(std::string(who) + ": state buffer does not match block shape");
  }
}

}  // namespace optlab::detail
