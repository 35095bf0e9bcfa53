#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tilestream/embed.hpp"

namespace tilestream::eval {

using embed::Matrix;

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

// Frozen embeddings with classification labels and/or regression targets.
// Empty `labels`, `targets`, `patient_ids` or `splits` mean "not present".
struct LabeledEmbeddings {
  Matrix X;
  std::vector<int> labels;
  Matrix targets;
  std::vector<std::string> patient_ids;
  std::vector<Split> splits;

  Eigen::Index size() const { return X.rows(); }
  /// max(label) + 1, or 0 without labels.
  int num_classes() const;
  /// Row indices tagged with `split`.
  std::vector<std::size_t> indices(Split split) const;
  LabeledEmbeddings subset(std::span<const std::size_t> rows) const;
  /// Errors: ShapeMismatch, InvalidArgument (negative label).
  void validate() const;
};

/// Mean per-class recall over the classes present in y_true.
/// Errors: EmptyInput, ShapeMismatch, InvalidArgument (negative label).
double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred);

struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // row-major
};

// Mean Dice over the non-background classes in [0, n_classes). Classes absent
// from both masks are skipped rather than scored as 1.
// Errors: ShapeMismatch, EmptyInput (no foreground class in either mask).
double dice_no_background(const LabelMask& pred, const LabelMask& truth, int n_classes,
                          int background_label = 0);

// Per-column Pearson correlation over all rows (patients pooled), averaged
// over columns. A constant prediction column scores 0.
// Errors: ShapeMismatch, EmptyInput (n < 2), ZeroVariance (constant target column).
double pearson_mean(const Matrix& pred, const Matrix& target);

}  // namespace tilestream::eval
