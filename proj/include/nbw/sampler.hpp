#pragma once

#include "nbw/dataset.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace nbw {

/// Rows of a dataset read through one permutation per variable group.
///
/// Row i of the view is (x_1[s_1(i)], ..., x_n[s_n(i)], z[s_z(i)]): every
/// group keeps its own marginal while the joint dependence between groups
/// is broken, so the rows behave as draws from the product of the group
/// marginals. Columns outside the layout keep their original order.
class ShuffledView {
 public:
  ShuffledView(const Dataset& source, VariableLayout layout, std::vector<std::vector<std::size_t>> group_perms,
               std::optional<std::vector<std::size_t>> covariate_perm);

  const Dataset& source() const { return *source_; }
  const VariableLayout& layout() const { return layout_; }
  const std::vector<std::vector<std::size_t>>& group_permutations() const { return group_perms_; }
  // Absent when the layout has no covariates.
  const std::optional<std::vector<std::size_t>>& covariate_permutation() const { return covariate_perm_; }

  std::size_t n_rows() const { return source_->n_rows(); }
  Eigen::RowVectorXd row(std::size_t i) const;
  // Full-width N x D matrix of the view.
  Matrix materialize() const;

 private:
  const Dataset* source_;
  VariableLayout layout_;
  std::vector<std::vector<std::size_t>> group_perms_;
  std::optional<std::vector<std::size_t>> covariate_perm_;
};

// Group g uses stream g of `seed`, covariates use stream n_groups.
ShuffledView product_shuffle(const Dataset& data, const VariableLayout& layout, std::uint64_t seed);

// Seeded partition of {0..n-1} into ceil(n / batch_size) batches; every batch
// is full except possibly the last. Deterministic in (seed, epoch).
std::vector<std::vector<std::size_t>> minibatch_indices(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                        std::uint64_t epoch);

// Gather rows of `values` in the given order.
Matrix gather_rows(const Matrix& values, const std::vector<std::size_t>& rows);

}  // namespace nbw
