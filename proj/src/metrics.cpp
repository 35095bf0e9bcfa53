#include "tilestream/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tilestream/errors.hpp"

namespace tilestream::eval {

int LabeledEmbeddings::num_classes() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

std::vector<std::size_t> LabeledEmbeddings::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) out.push_back(i);
  }
  return out;
}

LabeledEmbeddings LabeledEmbeddings::subset(std::span<const std::size_t> rows) const {
  LabeledEmbeddings out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  if (targets.rows() > 0) out.targets.resize(static_cast<Eigen::Index>(rows.size()), targets.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(rows[k]);
    const auto o = static_cast<Eigen::Index>(k);
    out.X.row(o) = X.row(r);
    if (!labels.empty()) out.labels.push_back(labels[rows[k]]);
    if (targets.rows() > 0) out.targets.row(o) = targets.row(r);
    if (!patient_ids.empty()) out.patient_ids.push_back(patient_ids[rows[k]]);
    if (!splits.empty()) out.splits.push_back(splits[rows[k]]);
  }
  return out;
}

void LabeledEmbeddings::validate() const {
  const auto n = static_cast<std::size_t>(X.rows());
  auto check = [n](std::size_t size, const char* field) {
    if (size != 0 && size != n) {
      throw Error(ErrorCode::ShapeMismatch, std::string(field) + " has " + std::to_string(size) +
                                                " rows, expected " + std::to_string(n));
    }
  };
  check(labels.size(), "labels");
  check(static_cast<std::size_t>(targets.rows()), "targets");
  check(patient_ids.size(), "patient_ids");
  check(splits.size(), "splits");
  for (int y : labels) {
    if (y < 0) throw Error(ErrorCode::InvalidArgument, "class labels must be >= 0");
  }
}

double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty()) throw Error(ErrorCode::EmptyInput, "balanced_accuracy on empty input");
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorCode::ShapeMismatch, "y_true and y_pred differ in length");
  }
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // label -> (hits, support)
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_pred[i] < 0) {
      throw Error(ErrorCode::InvalidArgument, "class labels must be >= 0");
    }
    auto& [hits, support] = per_class[y_true[i]];
    ++support;
    if (y_pred[i] == y_true[i]) ++hits;
  }
  double sum = 0.0;
  for (const auto& [label, hs] : per_class) {
    sum += static_cast<double>(hs.first) / static_cast<double>(hs.second);
  }
  return sum / static_cast<double>(per_class.size());
}

double dice_no_background(const LabelMask& pred, const LabelMask& truth, int n_classes,
                          int background_label) {
  if (pred.width != truth.width || pred.height != truth.height ||
      pred.labels.size() != truth.labels.size() ||
      pred.labels.size() != static_cast<std::size_t>(pred.width) * pred.height) {
    throw Error(ErrorCode::ShapeMismatch, "masks differ in shape");
  }
  if (n_classes <= 0) throw Error(ErrorCode::InvalidArgument, "n_classes must be > 0");
  std::vector<std::size_t> inter(n_classes, 0), in_pred(n_classes, 0), in_truth(n_classes, 0);
  auto in_range = [n_classes](int c) { return c >= 0 && c < n_classes; };
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    const int p = pred.labels[i];
    const int t = truth.labels[i];
    if (!in_range(p) || !in_range(t)) {
      throw Error(ErrorCode::InvalidArgument, "mask label outside [0, n_classes)");
    }
    ++in_pred[p];
    ++in_truth[t];
    if (p == t) ++inter[p];
  }
  double sum = 0.0;
  int scored = 0;
  for (int c = 0; c < n_classes; ++c) {
    if (c == background_label) continue;
    const std::size_t denom = in_pred[c] + in_truth[c];
    if (denom == 0) continue;
    sum += 2.0 * static_cast<double>(inter[c]) / static_cast<double>(denom);
    ++scored;
  }
  if (scored == 0) throw Error(ErrorCode::EmptyInput, "no foreground class in either mask");
  return sum / scored;
}

double pearson_mean(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "prediction and target shapes differ");
  }
  if (pred.rows() < 2 || pred.cols() < 1) {
    throw Error(ErrorCode::EmptyInput, "pearson_mean needs n >= 2 rows and g >= 1 columns");
  }
  const Eigen::Index n = pred.rows();
  double total = 0.0;
  for (Eigen::Index g = 0; g < pred.cols(); ++g) {
    const double mp = pred.col(g).mean();
    const double mt = target.col(g).mean();
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dp = pred(i, g) - mp;
      const double dt = target(i, g) - mt;
      sxy += dp * dt;
      sxx += dp * dp;
      syy += dt * dt;
    }
    if (syy == 0.0) {
      throw Error(ErrorCode::ZeroVariance, "target column " + std::to_string(g) + " is constant");
    }
    if (sxx > 0.0) total += sxy / std::sqrt(sxx * syy);
  }
  return total / static_cast<double>(pred.cols());
}

}  // namespace tilestream::eval
