#include "optlab/optimizers/param_block.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "optlab/error.hpp"
#include "optlab/numerics/kernels.hpp"

namespace optlab {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::matrix: return "matrix";
    case Role::vector: return "vector";
    case Role::scalar: return "scalar";
    case Role::embedding: return "embedding";
    case Role::output_head: return "output_head";
  }
  return "?";
}

void ParamBlock::validate() const {
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  if (!shape.empty() && n != values.size())
    throw ContractViolation("ParamBlock '" + name + "': shape does not match value count");
  if (role == Role::matrix && shape.size() < 2)
    throw ContractViolation("ParamBlock '" + name + "': matrix role needs >= 2 dimensions");
}

ParamBlock make_block(std::string name, std::vector<std::size_t> shape, Role role, double fill) {
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  ParamBlock b{std::move(name), std::move(shape), std::vector<double>(n, fill), role};
  b.validate();
  return b;
}

BlockValues values_of(std::span<const ParamBlock> blocks) {
  BlockValues out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(b.values);
  return out;
}

double global_norm(const Gradients& g) {
  double s = 0.0;
  for (const auto& block : g) s += kernels::sum_squares(block);
  return std::sqrt(s);
}

double param_norm(std::span<const ParamBlock> blocks) {
  double s = 0.0;
  for (const auto& b : blocks) s += kernels::sum_squares(b.values);
  return std::sqrt(s);
}

Matrix as_matrix(std::span<const double> values, std::size_t rows, std::size_t cols) {
  return Matrix::from_span(rows, cols, values);
}

}  // namespace optlab
