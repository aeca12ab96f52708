#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmtensor/tensor.hpp"

namespace mmt {

/// Vector-space regression model over row-major flattened tensors.
struct LinearModel {
  Shape input_shape;
  Eigen::VectorXd weights;
  double intercept = 0.0;
  std::string method;
  std::map<std::string, double> hyperparameters;
  /// Only set for group lasso: "by-roi" or "by-modality".
  std::string grouping;

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double predict(const DenseTensor& x) const;
};

Eigen::VectorXd vectorize(const DenseTensor& x);
DenseTensor devectorize(const Eigen::Ref<const Eigen::VectorXd>& v, const Shape& shape);
/// N x p matrix whose rows are the vectorized tensors.
Eigen::MatrixXd design_matrix(std::span<const DenseTensor> xs);

enum class GroupMode { ByRoi, ByModality };

std::string group_mode_name(GroupMode mode);
GroupMode parse_group_mode(const std::string& name);

/// Feature -> group assignment over vectorized features.
struct GroupSpec {
  std::vector<std::size_t> assignment;
  GroupMode mode = GroupMode::ByRoi;

  std::size_t group_count() const;
  /// by-roi groups on the index of mode 0; by-modality on the index of the
  /// last mode, which must have length 3.
  static GroupSpec from_shape(const Shape& shape, GroupMode mode);
  static bool supports(const Shape& shape, GroupMode mode);
};

struct LinearFitOptions {
  /// Scale columns to unit variance before the penalized fit; reported
  /// weights are mapped back to the original feature scale.
  bool standardize = true;
  /// Stop when no coordinate moves the gradient by more than this.
  double tol = 1e-13;
  std::size_t max_sweeps = 100000;
};

/// min (1/N)||y - Xw - b||^2 + lambda ||w||_1
LinearModel lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                      const LinearFitOptions& opts = {});

/// min (1/N)||y - Xw - b||^2 + lambda (alpha ||w||_1 + (1 - alpha) ||w||_2^2)
LinearModel enet_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                     double alpha, const LinearFitOptions& opts = {});

/// min (1/N)||y - Xw - b||^2 + lambda_group sum_g sqrt|g| ||w_g||_2 + lambda_l1 ||w||_1
LinearModel glasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GroupSpec& groups,
                       double lambda_group, double lambda_l1, const LinearFitOptions& opts = {});

struct GlassoPenalty {
  double lambda_group = 0.0;
  double lambda_l1 = 0.0;
};

/// glasso_fit at each penalty pair in order, each fit warm-started from the
/// previous solution.
std::vector<LinearModel> glasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const GroupSpec& groups, std::span<const GlassoPenalty> penalties,
                                     const LinearFitOptions& opts = {});

/// Centered SVD of X, reusable across component fractions.
struct PcaBasis {
  Eigen::RowVectorXd column_means;
  double y_mean = 0.0;
  Eigen::MatrixXd v;          // p x r right singular vectors
  Eigen::VectorXd singular;   // r nonzero singular values
  Eigen::VectorXd uty;        // U^T (y - mean)
  std::size_t max_components = 0;  // min(N - 1, p)
};

PcaBasis pca_basis(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
LinearModel pca_lr_from_basis(const PcaBasis& basis, double component_fraction);
/// PCA on centered X keeping ceil(fraction * min(N-1, p)) components, then
/// least squares on the scores folded back to feature weights.
LinearModel pca_lr_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       double component_fraction);

double linear_sparsity(const LinearModel& m, double zero_tol = 1e-10);

/// (2/N) ||X_c^T (y - mean(y))||_inf on the (optionally standardized) design;
/// the smallest lambda that zeroes the lasso.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool standardize);

}  // namespace mmt
