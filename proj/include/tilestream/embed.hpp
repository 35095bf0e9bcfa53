#pragma once

#include <Eigen/Core>
#include <vector>

namespace tilestream::embed {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// n x d embeddings, one per row.
struct EmbeddingBatch {
  Matrix data;
  bool normalized = false;

  /// Copies rows and scales each to unit norm.
  static EmbeddingBatch normalized_from(const Matrix& rows);
  Eigen::Index size() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;  // same shape as the batch, ambient coordinates
};

inline constexpr double kDefaultKdeBandwidth = 2.0;

// Kernel-density uniformity regularizer over distinct pairs:
//   loss = log( 2/(n(n-1)) * sum_{i<j} exp(-t * |z_i - z_j|^2) )
// evaluated with a log-sum-exp shift. Rows must be unit vectors; the gradient
// is with respect to the raw rows (no projection onto the sphere).
//
// Errors: DegenerateBatch (n < 2), InvalidArgument (rows not normalized).
LossAndGrad kde_uniformity_loss(const EmbeddingBatch& batch, double t = kDefaultKdeBandwidth);

// Kozachenko-Leonenko nearest-neighbour entropy estimator:
//   loss = -(1/n) * sum_i log(min_{j != i} |z_i - z_j|)
// Errors: DegenerateBatch, DuplicateRows.
double koleo_loss(const EmbeddingBatch& batch);

/// concat(cls, column mean of patch_tokens). Errors: EmptyPatchSet, ShapeMismatch.
Vector cls_mean_embedding(const Vector& cls, const Matrix& patch_tokens);

/// (image_px / patch_px)^2. Errors: NotDivisible, InvalidArgument.
int patch_token_count(int image_px, int patch_px);

struct ViewConfig {
  int local_crop_px = 98;
  int global_crop_px = 224;
  int patch_px = 14;
  int train_tile_px = 256;
  std::vector<double> mpp_choices{2.0, 1.0, 0.5, 0.25};

  void validate() const;
  friend bool operator==(const ViewConfig&, const ViewConfig&) = default;
};

// Doubles tile size and halves every mpp so each physical tile extent is
// unchanged; local and global crops go to 168 and 392. Defined only for the
// standard configuration (throws InvalidArgument otherwise, including on an
// already high-resolution config).
ViewConfig highres_view_config(const ViewConfig& base);

/// Physical extents tile_px * mpp, one per mpp choice.
std::vector<double> tile_extents_um(const ViewConfig& cfg);

struct ScheduleConfig {
  int per_gpu_batch = 12;
  int gpu_count = 32;
  int grad_accum_steps = 2;
  double base_lr = 3.5e-4;
  long iterations = 1'000'000;

  void validate() const;
};

/// Standard pretraining, high-resolution post-training and ablation schedules.
ScheduleConfig pretraining_schedule();
ScheduleConfig highres_schedule();
ScheduleConfig ablation_schedule();

/// per_gpu_batch * gpu_count * grad_accum_steps
long effective_batch(const ScheduleConfig& cfg);

}  // namespace tilestream::embed
