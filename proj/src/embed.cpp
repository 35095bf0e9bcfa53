#include "tilestream/embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tilestream/errors.hpp"

namespace tilestream::embed {

EmbeddingBatch EmbeddingBatch::normalized_from(const Matrix& rows) {
  EmbeddingBatch b{rows, true};
  for (Eigen::Index i = 0; i < b.data.rows(); ++i) {
    const double n = b.data.row(i).norm();
    if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero row");
    b.data.row(i) /= n;
  }
  return b;
}

namespace {

double squared_distance(const Matrix& z, Eigen::Index i, Eigen::Index j) {
  return (z.row(i) - z.row(j)).squaredNorm();
}

}  // namespace

LossAndGrad kde_uniformity_loss(const EmbeddingBatch& batch, double t) {
  const Matrix& z = batch.data;
  const Eigen::Index n = z.rows();
  if (n < 2) throw Error(ErrorCode::DegenerateBatch, "KDE loss needs at least two rows");
  if (!batch.normalized) {
    throw Error(ErrorCode::InvalidArgument, "KDE loss expects unit-normalized rows");
  }
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "KDE bandwidth must be > 0");

  // Exponents -t * d_ij^2 for i < j, in row-major pair order.
  std::vector<double> expo;
  expo.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  double shift = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      expo.push_back(-t * squared_distance(z, i, j));
      shift = std::max(shift, expo.back());
    }
  }

  LossAndGrad out;
  out.grad = Matrix::Zero(n, z.cols());
  double sum = 0.0;
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, ++k) {
      const double w = std::exp(expo[k] - shift);
      sum += w;
      const auto diff = (z.row(i) - z.row(j)).eval();
      out.grad.row(i) += w * diff;
      out.grad.row(j) -= w * diff;
    }
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  out.loss = shift + std::log(sum) - std::log(pairs);
  out.grad *= -2.0 * t / sum;
  return out;
}

double koleo_loss(const EmbeddingBatch& batch) {
  const Matrix& z = batch.data;
  const Eigen::Index n = z.rows();
  if (n < 2) throw Error(ErrorCode::DegenerateBatch, "KoLeo loss needs at least two rows");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) nearest = std::min(nearest, squared_distance(z, i, j));
    }
    if (nearest == 0.0) {
      throw Error(ErrorCode::DuplicateRows,
                  "row " + std::to_string(i) + " has an exact duplicate; log(0) is undefined");
    }
    total += 0.5 * std::log(nearest);
  }
  return -total / static_cast<double>(n);
}

Vector cls_mean_embedding(const Vector& cls, const Matrix& patch_tokens) {
  if (patch_tokens.rows() == 0) throw Error(ErrorCode::EmptyPatchSet, "no patch tokens");
  if (patch_tokens.cols() != cls.size()) {
    throw Error(ErrorCode::ShapeMismatch, "patch token width differs from CLS width");
  }
  Vector out(2 * cls.size());
  out.head(cls.size()) = cls;
  out.tail(cls.size()) = patch_tokens.colwise().mean().transpose();
  return out;
}

int patch_token_count(int image_px, int patch_px) {
  if (image_px <= 0 || patch_px <= 0) {
    throw Error(ErrorCode::InvalidArgument, "image and patch sizes must be positive");
  }
  if (image_px % patch_px != 0) {
    throw Error(ErrorCode::NotDivisible, std::to_string(image_px) + " is not a multiple of " +
                                             std::to_string(patch_px));
  }
  const int side = image_px / patch_px;
  return side * side;
}

void ViewConfig::validate() const {
  if (local_crop_px <= 0 || global_crop_px <= 0 || patch_px <= 0 || train_tile_px <= 0) {
    throw Error(ErrorCode::InvalidArgument, "view sizes must be positive");
  }
  if (global_crop_px % patch_px != 0) {
    throw Error(ErrorCode::NotDivisible, "global crop must be a multiple of the patch size");
  }
  if (mpp_choices.empty()) throw Error(ErrorCode::InvalidArgument, "mpp_choices is empty");
}

ViewConfig highres_view_config(const ViewConfig& base) {
  base.validate();
  if (!(base == ViewConfig{})) {
    throw Error(ErrorCode::InvalidArgument,
                "high-resolution views are defined only from the standard configuration");
  }
  ViewConfig out = base;
  out.local_crop_px = 168;
  out.global_crop_px = 392;
  out.train_tile_px = base.train_tile_px * 2;
  for (double& m : out.mpp_choices) m /= 2.0;
  out.validate();

  auto before = tile_extents_um(base);
  auto after = tile_extents_um(out);
  std::sort(before.begin(), before.end());
  std::sort(after.begin(), after.end());
  if (before != after) throw Error(ErrorCode::InvalidArgument, "physical extents not preserved");
  return out;
}

std::vector<double> tile_extents_um(const ViewConfig& cfg) {
  std::vector<double> out;
  out.reserve(cfg.mpp_choices.size());
  for (double m : cfg.mpp_choices) out.push_back(cfg.train_tile_px * m);
  return out;
}

void ScheduleConfig::validate() const {
  if (per_gpu_batch <= 0 || gpu_count <= 0 || grad_accum_steps <= 0 || iterations <= 0 ||
      !(base_lr > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "schedule fields must be positive");
  }
}

ScheduleConfig pretraining_schedule() { return {12, 32, 2, 3.5e-4, 1'000'000}; }

ScheduleConfig highres_schedule() { return {6, 48, 4, 1e-4, 120'000}; }

// Learning rate is not reported for the ablation runs; the pretraining rate is reused.
ScheduleConfig ablation_schedule() { return {64, 4, 3, 3.5e-4, 500'000}; }

long effective_batch(const ScheduleConfig& cfg) {
  cfg.validate();
  return static_cast<long>(cfg.per_gpu_batch) * cfg.gpu_count * cfg.grad_accum_steps;
}

}  // namespace tilestream::embed
