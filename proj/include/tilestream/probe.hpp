#pragma once

#include <memory>
#include <span>
#include <vector>

#include "tilestream/eval.hpp"

namespace tilestream::eval {

/// Anything the k-shot protocol can fit on a few labeled rows and score.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const Matrix& X, std::span<const int> y, int n_classes) = 0;
  virtual std::vector<int> predict(const Matrix& X) const = 0;
};

struct ProbeConfig {
  double lr = 0.1;
  int max_epochs = 3000;
  double l2 = 1e-4;
  double grad_tol = 1e-6;
};

// Multinomial logistic regression with a bias, trained by full-batch gradient
// descent from zero weights until the gradient norm drops below grad_tol or
// max_epochs is reached. Fully deterministic. The bias is not regularized.
class LinearProbe : public Classifier {
 public:
  explicit LinearProbe(ProbeConfig config = {}) : config_(config) {}

  /// Errors: DegenerateInput (one class, or constant features), ShapeMismatch.
  void fit(const Matrix& X, std::span<const int> y, int n_classes) override;
  std::vector<int> predict(const Matrix& X) const override;

  Matrix decision_function(const Matrix& X) const;
  int epochs_run() const { return epochs_run_; }
  double final_grad_norm() const { return final_grad_norm_; }

 private:
  ProbeConfig config_;
  Matrix weights_;  // d x C
  Eigen::RowVectorXd bias_;
  int epochs_run_ = 0;
  double final_grad_norm_ = 0.0;
};

LinearProbe train_linear_probe(const LabeledEmbeddings& train, const ProbeConfig& config = {});

}  // namespace tilestream::eval
