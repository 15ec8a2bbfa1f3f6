#include "nbw/sampler.hpp"

#include "nbw/errors.hpp"
#include "nbw/rng.hpp"

namespace nbw {

ShuffledView::ShuffledView(const Dataset& source, VariableLayout layout,
                           std::vector<std::vector<std::size_t>> group_perms,
                           std::optional<std::vector<std::size_t>> covariate_perm)
    : source_(&source),
      layout_(std::move(layout)),
      group_perms_(std::move(group_perms)),
      covariate_perm_(std::move(covariate_perm)) {
  if (group_perms_.size() != layout_.groups.size()) throw ConfigError("one permutation per group required");
  if (covariate_perm_.has_value() == layout_.covariates.empty()) {
    throw ConfigError("covariate permutation must be present exactly when covariates exist");
  }
}

Eigen::RowVectorXd ShuffledView::row(std::size_t i) const {
  const auto& v = source_->values();
  Eigen::RowVectorXd out = v.row(static_cast<Eigen::Index>(i));
  for (std::size_t g = 0; g < layout_.groups.size(); ++g) {
    const auto src = static_cast<Eigen::Index>(group_perms_[g][i]);
    for (auto c : layout_.groups[g].columns) out(static_cast<Eigen::Index>(c)) = v(src, static_cast<Eigen::Index>(c));
  }
  if (covariate_perm_) {
    const auto src = static_cast<Eigen::Index>((*covariate_perm_)[i]);
    for (auto c : layout_.covariates) out(static_cast<Eigen::Index>(c)) = v(src, static_cast<Eigen::Index>(c));
  }
  return out;
}

Matrix ShuffledView::materialize() const {
  const auto& v = source_->values();
  Matrix out = v;
  const auto n = static_cast<Eigen::Index>(n_rows());
  auto permute_columns = [&](const std::vector<std::size_t>& perm, const std::vector<std::size_t>& cols) {
    for (auto c : cols) {
      const auto col = static_cast<Eigen::Index>(c);
      for (Eigen::Index i = 0; i < n; ++i) out(i, col) = v(static_cast<Eigen::Index>(perm[i]), col);
    }
  };
  for (std::size_t g = 0; g < layout_.groups.size(); ++g) permute_columns(group_perms_[g], layout_.groups[g].columns);
  if (covariate_perm_) permute_columns(*covariate_perm_, layout_.covariates);
  return out;
}

ShuffledView product_shuffle(const Dataset& data, const VariableLayout& layout, std::uint64_t seed) {
  layout.validate(data.n_cols());
  const auto n = data.n_rows();
  std::vector<std::vector<std::size_t>> perms;
  perms.reserve(layout.groups.size());
  for (std::size_t g = 0; g < layout.groups.size(); ++g) {
    RandomStream rng(seed, g);
    perms.push_back(rng.permutation(n));
  }
  std::optional<std::vector<std::size_t>> cov;
  if (!layout.covariates.empty()) {
    RandomStream rng(seed, layout.groups.size());
    cov = rng.permutation(n);
  }
  return ShuffledView(data, layout, std::move(perms), std::move(cov));
}

std::vector<std::vector<std::size_t>> minibatch_indices(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                        std::uint64_t epoch) {
  if (batch_size == 0 || batch_size > n) {
    throw ConfigError("batch size " + std::to_string(batch_size) + " must be in [1, " + std::to_string(n) + "]");
  }
  RandomStream rng(seed, epoch);
  const auto perm = rng.permutation(n);
  std::vector<std::vector<std::size_t>> batches;
  batches.reserve((n + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < n; start += batch_size) {
    const auto stop = std::min(n, start + batch_size);
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

Matrix gather_rows(const Matrix& values, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace nbw
