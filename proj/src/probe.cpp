#include "tilestream/probe.hpp"

#include <cmath>
#include <set>

#include "tilestream/errors.hpp"

namespace tilestream::eval {

void LinearProbe::fit(const Matrix& X, std::span<const int> y, int n_classes) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (static_cast<std::size_t>(n) != y.size() || n == 0) {
    throw Error(ErrorCode::ShapeMismatch, "features and labels differ in length");
  }
  std::set<int> present(y.begin(), y.end());
  if (*present.begin() < 0 || *present.rbegin() >= n_classes) {
    throw Error(ErrorCode::InvalidArgument, "label outside [0, n_classes)");
  }
  if (present.size() < 2) {
    throw Error(ErrorCode::DegenerateInput, "training set contains a single class");
  }
  const bool constant =
      ((X.rowwise() - X.row(0)).array().abs() == 0.0).all();
  if (constant) {
    throw Error(ErrorCode::DegenerateInput, "all feature rows are identical");
  }

  Matrix Y = Matrix::Zero(n, n_classes);
  for (Eigen::Index i = 0; i < n; ++i) Y(i, y[static_cast<std::size_t>(i)]) = 1.0;

  weights_ = Matrix::Zero(d, n_classes);
  bias_ = Eigen::RowVectorXd::Zero(n_classes);
  const double inv_n = 1.0 / static_cast<double>(n);
  epochs_run_ = 0;
  final_grad_norm_ = 0.0;
  for (int epoch = 0; epoch < config_.max_epochs; ++epoch) {
    Matrix P = decision_function(X);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = P.row(i).maxCoeff();
      P.row(i) = (P.row(i).array() - m).exp();
      P.row(i) /= P.row(i).sum();
    }
    const Matrix residual = (P - Y) * inv_n;
    const Matrix grad_w = X.transpose() * residual + config_.l2 * weights_;
    const Eigen::RowVectorXd grad_b = residual.colwise().sum();
    final_grad_norm_ = std::sqrt(grad_w.squaredNorm() + grad_b.squaredNorm());
    if (final_grad_norm_ < config_.grad_tol) break;
    weights_ -= config_.lr * grad_w;
    bias_ -= config_.lr * grad_b;
    epochs_run_ = epoch + 1;
  }
}

Matrix LinearProbe::decision_function(const Matrix& X) const {
  if (X.cols() != weights_.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "feature width differs from the trained probe");
  }
  Matrix logits = X * weights_;
  logits.rowwise() += bias_;
  return logits;
}

std::vector<int> LinearProbe::predict(const Matrix& X) const {
  const Matrix logits = decision_function(X);
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::Index arg;
    logits.row(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

LinearProbe train_linear_probe(const LabeledEmbeddings& train, const ProbeConfig& config) {
  train.validate();
  if (train.labels.empty()) throw Error(ErrorCode::EmptyInput, "training set has no labels");
  LinearProbe probe(config);
  probe.fit(train.X, train.labels, train.num_classes());
  return probe;
}

}  // namespace tilestream::eval
