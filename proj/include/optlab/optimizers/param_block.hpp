#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "optlab/numerics/matrix.hpp"

namespace optlab {

/// Role tag that decides routing in the hybrid methods (Muon, D-Muon, SOAP, MARS):
/// matrix blocks take the specialised path, everything else runs AdamW.
enum class Role { matrix, vector, scalar, embedding, output_head };

std::string_view to_string(Role r);

struct ParamBlock {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
  Role role = Role::vector;

  std::size_t size() const noexcept { return values.size(); }
  /// Rows of the 2-D view: the first dimension; columns fold the rest.
  std::size_t rows() const noexcept { return shape.empty() ? values.size() : shape.front(); }
  std::size_t cols() const noexcept { return rows() == 0 ? 0 : values.size() / rows(); }
  bool is_matrix() const noexcept { return role == Role::matrix; }

  /// Throws ContractViolation if shape and values disagree or a matrix block has < 2 dims.
  void validate() const;
};

ParamBlock make_block(std::string name, std::vector<std::size_t> shape, Role role, double fill = 0.0);

/// One gradient array per parameter block, same order and lengths.
using Gradients = std::vector<std::vector<double>>;
/// Parameter values detached from their blocks (same layout as Gradients).
using BlockValues = std::vector<std::vector<double>>;

BlockValues values_of(std::span<const ParamBlock> blocks);
double global_norm(const Gradients& g);
double param_norm(std::span<const ParamBlock> blocks);

/// Copy a flat array into a rows x cols matrix and back.
Matrix as_matrix(std::span<const double> values, std::size_t rows, std::size_t cols);

}  // namespace optlab
