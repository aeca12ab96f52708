#include "mmtensor/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "mmtensor/errors.hpp"
#include "mmtensor/surf.hpp"

namespace mmt {

namespace {

double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

void check_xy(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() == 0 || X.cols() == 0) throw InputError("linear fit needs a non-empty design");
  if (X.rows() != y.size())
    throw InputError("design has " + std::to_string(X.rows()) + " rows but " +
                     std::to_string(y.size()) + " responses");
  if (!X.allFinite() || !y.allFinite()) throw InputError("design and response must be finite");
}

/// Centered (and optionally scaled) copy of the design plus what is needed
/// to map weights back to raw features.
struct Prepared {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::RowVectorXd mean;
  Eigen::VectorXd scale;  // 0 marks a constant column
  double y_mean = 0.0;
};

Prepared prepare(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool standardize) {
  Prepared p;
  const double n = static_cast<double>(X.rows());
  p.mean = X.colwise().mean();
  p.x = X.rowwise() - p.mean;
  p.y_mean = y.mean();
  p.y = y.array() - p.y_mean;
  p.scale = Eigen::VectorXd::Ones(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double sd = std::sqrt(p.x.col(j).squaredNorm() / n);
    const double magnitude = std::max(1.0, p.mean(j) == 0.0 ? 0.0 : std::abs(p.mean(j)));
    if (sd <= 1e-12 * magnitude) {
      p.scale(j) = 0.0;
      p.x.col(j).setZero();
    } else if (standardize) {
      p.scale(j) = sd;
      p.x.col(j) /= sd;
    }
  }
  return p;
}

LinearModel finish(const Prepared& p, const Eigen::VectorXd& w_std, std::string method) {
  LinearModel m;
  m.method = std::move(method);
  m.input_shape = {static_cast<std::size_t>(w_std.size())};
  m.weights = Eigen::VectorXd::Zero(w_std.size());
  for (Eigen::Index j = 0; j < w_std.size(); ++j)
    if (p.scale(j) != 0.0) m.weights(j) = w_std(j) / p.scale(j);
  m.intercept = p.y_mean - p.mean.dot(m.weights);
  return m;
}

/// Cyclic coordinate descent for the elastic net on a centered design,
/// with full sweeps alternating with sweeps over the active set.
Eigen::VectorXd enet_cd(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l1,
                        double l2, const LinearFitOptions& opts) {
  const Eigen::Index p = x.cols();
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd a(p);
  for (Eigen::Index j = 0; j < p; ++j) a(j) = x.col(j).squaredNorm() / n;
  const double scale = std::max(1.0, 2.0 * (x.transpose() * y).cwiseAbs().maxCoeff() / n);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = y;
  std::vector<Eigen::Index> active;

  const auto sweep = [&](const auto& coords) {
    double worst = 0.0;
    for (Eigen::Index j : coords) {
      if (a(j) == 0.0) continue;
      const double rho = x.col(j).dot(r) / n + a(j) * w(j);
      const double next = soft(rho, 0.5 * l1) / (a(j) + l2);
      const double delta = next - w(j);
      if (delta != 0.0) {
        r.noalias() -= delta * x.col(j);
        w(j) = next;
      }
      worst = std::max(worst, 2.0 * (a(j) + l2) * std::abs(delta));
    }
    return worst;
  };

  std::vector<Eigen::Index> all(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;

  for (std::size_t outer = 0; outer < opts.max_sweeps; ++outer) {
    if (sweep(all) <= opts.tol * scale) return w;
    active.clear();
    for (Eigen::Index j = 0; j < p; ++j)
      if (w(j) != 0.0) active.push_back(j);
    for (std::size_t inner = 0; inner < opts.max_sweeps; ++inner)
      if (sweep(active) <= opts.tol * scale) break;
  }
  return w;
}

double power_top_eigenvalue(const Eigen::MatrixXd& xg, double n) {
  // largest eigenvalue of xg^T xg / n
  if (xg.cols() <= 64) {
    const Eigen::MatrixXd gram = xg.transpose() * xg / n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  }
  Eigen::VectorXd v = Eigen::VectorXd::Ones(xg.cols()).normalized();
  double value = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd next = xg.transpose() * (xg * v) / n;
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    next /= norm;
    const bool done = std::abs(norm - value) <= 1e-10 * norm;
    value = norm;
    v = next;
    if (done) break;
  }
  return value * 1.01;
}

}  // namespace

double LinearModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != weights.size())
    throw InputError("linear model expects " + std::to_string(weights.size()) + " features, got " +
                     std::to_string(x.size()));
  return weights.dot(x) + intercept;
}

double LinearModel::predict(const DenseTensor& x) const {
  if (element_count(input_shape) != x.size() ||
      (input_shape.size() > 1 && input_shape != x.shape()))
    throw InputError("linear model expects shape " + shape_to_string(input_shape) + ", got " +
                     shape_to_string(x.shape()));
  const auto v = x.values();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))
             .dot(weights) +
         intercept;
}

Eigen::VectorXd vectorize(const DenseTensor& x) {
  const auto v = x.values();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

DenseTensor devectorize(const Eigen::Ref<const Eigen::VectorXd>& v, const Shape& shape) {
  return DenseTensor(shape, std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::MatrixXd design_matrix(std::span<const DenseTensor> xs) {
  if (xs.empty()) throw InputError("design matrix needs at least one subject");
  const auto p = static_cast<Eigen::Index>(xs.front().size());
  Eigen::MatrixXd X(static_cast<Eigen::Index>(xs.size()), p);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].shape() != xs.front().shape()) throw InputError("design matrix: shape mismatch");
    X.row(static_cast<Eigen::Index>(i)) = vectorize(xs[i]).transpose();
  }
  return X;
}

std::string group_mode_name(GroupMode mode) {
  return mode == GroupMode::ByRoi ? "by-roi" : "by-modality";
}

GroupMode parse_group_mode(const std::string& name) {
  if (name == "by-roi") return GroupMode::ByRoi;
  if (name == "by-modality") return GroupMode::ByModality;
  throw InputError("unknown grouping '" + name + "' (expected by-roi or by-modality)");
}

std::size_t GroupSpec::group_count() const {
  return assignment.empty() ? 0 : *std::max_element(assignment.begin(), assignment.end()) + 1;
}

bool GroupSpec::supports(const Shape& shape, GroupMode mode) {
  if (shape.empty()) return false;
  return mode == GroupMode::ByRoi || (shape.size() >= 2 && shape.back() == 3);
}

GroupSpec GroupSpec::from_shape(const Shape& shape, GroupMode mode) {
  if (!supports(shape, mode))
    throw InputError("grouping " + group_mode_name(mode) + " is not defined for shape " +
                     shape_to_string(shape));
  GroupSpec spec;
  spec.mode = mode;
  const std::size_t total = element_count(shape);
  const std::size_t last = shape.back();
  const std::size_t trailing = total / shape.front();
  spec.assignment.resize(total);
  for (std::size_t e = 0; e < total; ++e)
    spec.assignment[e] = mode == GroupMode::ByRoi ? e / trailing : e % last;
  return spec;
}

LinearModel lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                      const LinearFitOptions& opts) {
  auto m = enet_fit(X, y, lambda, 1.0, opts);
  m.method = "lasso";
  m.hyperparameters = {{"lambda", lambda}};
  return m;
}

LinearModel enet_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                     double alpha, const LinearFitOptions& opts) {
  check_xy(X, y);
  if (!(lambda >= 0.0)) throw InputError("lambda must be nonnegative");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in [0, 1]");
  const auto p = prepare(X, y, opts.standardize);
  const auto w = enet_cd(p.x, p.y, lambda * alpha, lambda * (1.0 - alpha), opts);
  auto m = finish(p, w, "enet");
  m.hyperparameters = {{"lambda", lambda}, {"alpha", alpha}};
  return m;
}

std::vector<LinearModel> glasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const GroupSpec& groups, std::span<const GlassoPenalty> penalties,
                                     const LinearFitOptions& opts) {
  check_xy(X, y);
  if (groups.assignment.size() != static_cast<std::size_t>(X.cols()))
    throw InputError("group assignment covers " + std::to_string(groups.assignment.size()) +
                     " features, design has " + std::to_string(X.cols()));
  for (const auto& pen : penalties)
    if (!(pen.lambda_group >= 0.0 && pen.lambda_l1 >= 0.0))
      throw InputError("group lasso penalties must be nonnegative");

  const auto p = prepare(X, y, opts.standardize);
  const double n = static_cast<double>(X.rows());

  std::vector<std::vector<Eigen::Index>> members(groups.group_count());
  for (std::size_t j = 0; j < groups.assignment.size(); ++j)
    members[groups.assignment[j]].push_back(static_cast<Eigen::Index>(j));
  for (std::size_t g = 0; g < members.size(); ++g)
    if (members[g].empty()) throw InputError("group " + std::to_string(g) + " is empty");

  std::vector<Eigen::MatrixXd> xg(members.size());
  std::vector<Eigen::MatrixXd> gram(members.size());
  std::vector<double> step(members.size());
  for (std::size_t g = 0; g < members.size(); ++g) {
    xg[g] = p.x(Eigen::all, members[g]);
    if (members[g].size() <= 1024) gram[g] = xg[g].transpose() * xg[g] / n;
    const double top = power_top_eigenvalue(xg[g], n);
    step[g] = top > 0.0 ? 1.0 / (2.0 * top) : 0.0;
  }
  // G_g v, from the cached Gram block when there is one
  const auto gram_times = [&](std::size_t g, const Eigen::VectorXd& v) -> Eigen::VectorXd {
    if (gram[g].size() > 0) return gram[g] * v;
    return xg[g].transpose() * (xg[g] * v) / n;
  };

  const double scale = std::max(1.0, 2.0 * (p.x.transpose() * p.y).cwiseAbs().maxCoeff() / n);
  Eigen::VectorXd r = p.y;
  std::vector<Eigen::VectorXd> wg(members.size());
  for (std::size_t g = 0; g < members.size(); ++g) wg[g] = Eigen::VectorXd::Zero(members[g].size());

  std::vector<LinearModel> out;
  for (const auto& [lambda_group, lambda_l1] : penalties) {
    for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      double worst = 0.0;
      for (std::size_t g = 0; g < members.size(); ++g) {
        if (step[g] == 0.0) continue;
        const double group_pen = lambda_group * std::sqrt(static_cast<double>(members[g].size()));
        const Eigen::VectorXd c = xg[g].transpose() * r / n + gram_times(g, wg[g]);
        // zero block is optimal iff the l1-thresholded gradient fits in the group ball
        const Eigen::VectorXd thresholded = (2.0 * c).unaryExpr([&](double v) { return soft(v, lambda_l1); });
        Eigen::VectorXd next;
        if (thresholded.norm() <= group_pen) {
          next = Eigen::VectorXd::Zero(wg[g].size());
        } else {
          // accelerated proximal gradient with gradient-based restart
          const double t = step[g];
          const auto prox = [&](const Eigen::VectorXd& z) {
            Eigen::VectorXd v = z.unaryExpr([&](double a) { return soft(a, t * lambda_l1); });
            const double norm = v.norm();
            v *= norm > 0.0 ? std::max(0.0, 1.0 - t * group_pen / norm) : 0.0;
            return v;
          };
          next = wg[g];
          Eigen::VectorXd look = next;
          double momentum = 1.0;
          for (int it = 0; it < 100000; ++it) {
            const Eigen::VectorXd grad = 2.0 * (gram_times(g, look) - c);
            Eigen::VectorXd v = prox(look - t * grad);
            const double moved = (v - look).cwiseAbs().maxCoeff();
            const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            if ((look - v).dot(v - next) > 0.0) {
              look = v;
              momentum = 1.0;
            } else {
              look = v + ((momentum - 1.0) / m_next) * (v - next);
              momentum = m_next;
            }
            next = std::move(v);
            if (moved / t <= opts.tol * scale) break;
          }
        }
        const double moved = (next - wg[g]).cwiseAbs().maxCoeff();
        if (moved > 0.0) {
          r -= xg[g] * (next - wg[g]);
          wg[g] = next;
        }
        worst = std::max(worst, moved / std::max(step[g], 1e-300));
      }
      if (worst <= opts.tol * scale) break;
    }
    Eigen::VectorXd w(X.cols());
    for (std::size_t g = 0; g < members.size(); ++g) w(members[g]) = wg[g];
    auto m = finish(p, w, "glasso");
    m.hyperparameters = {{"lambda_group", lambda_group}, {"lambda_l1", lambda_l1}};
    m.grouping = group_mode_name(groups.mode);
    out.push_back(std::move(m));
  }
  return out;
}

LinearModel glasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GroupSpec& groups,
                       double lambda_group, double lambda_l1, const LinearFitOptions& opts) {
  const GlassoPenalty pen{lambda_group, lambda_l1};
  return std::move(glasso_path(X, y, groups, std::span<const GlassoPenalty>(&pen, 1), opts).front());
}

PcaBasis pca_basis(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  check_xy(X, y);
  if (X.rows() < 2) throw InputError("PCA+LR needs at least two subjects");
  PcaBasis b;
  b.column_means = X.colwise().mean();
  b.y_mean = y.mean();
  const Eigen::MatrixXd xc = X.rowwise() - b.column_means;
  const Eigen::VectorXd yc = y.array() - b.y_mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  const double cutoff = s.size() ? 1e-10 * s(0) : 0.0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  b.singular = s.head(rank);
  b.v = svd.matrixV().leftCols(rank);
  b.uty = svd.matrixU().leftCols(rank).transpose() * yc;
  b.max_components = static_cast<std::size_t>(std::min<Eigen::Index>(X.rows() - 1, X.cols()));
  return b;
}

LinearModel pca_lr_from_basis(const PcaBasis& basis, double component_fraction) {
  if (!(component_fraction > 0.0 && component_fraction <= 1.0))
    throw InputError("component fraction must lie in (0, 1]");
  const auto wanted = static_cast<std::size_t>(
      std::ceil(component_fraction * static_cast<double>(basis.max_components) - 1e-9));
  const auto q = static_cast<Eigen::Index>(
      std::min<std::size_t>(std::max<std::size_t>(wanted, 1), static_cast<std::size_t>(basis.singular.size())));

  LinearModel m;
  m.method = "pca-lr";
  m.hyperparameters = {{"fraction", component_fraction}, {"components", static_cast<double>(q)}};
  m.input_shape = {static_cast<std::size_t>(basis.column_means.size())};
  const Eigen::VectorXd beta = basis.uty.head(q).cwiseQuotient(basis.singular.head(q));
  m.weights = basis.v.leftCols(q) * beta;
  m.intercept = basis.y_mean - basis.column_means.dot(m.weights);
  return m;
}

LinearModel pca_lr_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       double component_fraction) {
  return pca_lr_from_basis(pca_basis(X, y), component_fraction);
}

double linear_sparsity(const LinearModel& m, double zero_tol) {
  return sparsity_percent(std::span<const double>(m.weights.data(), static_cast<std::size_t>(m.weights.size())),
                          zero_tol);
}

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool standardize) {
  check_xy(X, y);
  const auto p = prepare(X, y, standardize);
  return 2.0 * (p.x.transpose() * p.y).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
}

}  // namespace mmt
