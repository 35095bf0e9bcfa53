#include "tilestream/stain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/Eigenvalues>

#include "tilestream/errors.hpp"

namespace tilestream::stain {

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int R = r, G = g, B = b;
  const int v = std::max({R, G, B});
  const int mn = std::min({R, G, B});
  const int delta = v - mn;
  if (delta == 0) return {0, 0, v};

  // round(255 * delta / v), half up
  const int s = (510 * delta + v) / (2 * v);

  // Hue in sixths of the circle scaled by delta: num / delta in [0, 6).
  int num;
  if (v == R) {
    num = G - B;
    if (num < 0) num += 6 * delta;
  } else if (v == G) {
    num = 2 * delta + (B - R);
  } else {
    num = 4 * delta + (R - G);
  }
  // half-degrees = 30 * num / delta, rounded half up
  int h = (60 * num + delta) / (2 * delta);
  if (h >= 180) h -= 180;
  return {h, s, v};
}

void HsvRanges::validate() const {
  for (const ChannelRange* r : {&h, &s, &v}) {
    if (r->lo > r->hi) throw Error(ErrorCode::InvalidArgument, "HSV range has lo > hi");
  }
  if (!(min_fraction >= 0.0 && min_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "HSV min_fraction must lie in [0, 1]");
  }
}

HsvVerdict hsv_tile_filter(const RgbImage& tile, const HsvRanges& ranges) {
  if (tile.empty()) throw Error(ErrorCode::InvalidArgument, "HSV filter on an empty tile");
  HsvVerdict verdict;
  verdict.total = tile.pixel_count();
  const std::uint8_t* p = tile.pixels.data();
  for (std::size_t i = 0; i < verdict.total; ++i, p += 3) {
    if (ranges.contains(rgb_to_hsv(p[0], p[1], p[2]))) ++verdict.in_range;
  }
  verdict.in_range_fraction =
      static_cast<double>(verdict.in_range) / static_cast<double>(verdict.total);
  // The tolerance absorbs rounding in min_fraction * total at the boundary.
  verdict.accept = static_cast<double>(verdict.in_range) >=
                   ranges.min_fraction * static_cast<double>(verdict.total) - 1e-9;
  return verdict;
}

// ---------------------------------------------------------------------------

StainMatrix StainMatrix::from_rows(const Eigen::Matrix3d& rows) {
  StainMatrix m;
  m.rows_ = rows;
  for (int i = 0; i < 3; ++i) {
    const double n = m.rows_.row(i).norm();
    if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "stain vector has zero norm");
    m.rows_.row(i) /= n;
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(m.rows_);
  if (!lu.isInvertible()) throw Error(ErrorCode::InvalidArgument, "stain matrix is singular");
  m.inverse_ = lu.inverse();
  return m;
}

StainMatrix StainMatrix::ruifrok_johnston() {
  static const StainMatrix m = [] {
    Eigen::Matrix3d rows;
    rows << 0.651108, 0.701193, 0.290494,  //
        0.070102, 0.991439, 0.110160,      //
        0.269167, 0.568241, 0.777593;
    return from_rows(rows);
  }();
  return m;
}

StainMatrix StainMatrix::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double v;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) throw Error(ErrorCode::ParseError, path.string() + ": bad number");
  }
  if (values.size() != 9) {
    throw Error(ErrorCode::ParseError, path.string() + ": expected 9 values, got " +
                                           std::to_string(values.size()));
  }
  Eigen::Matrix3d rows;
  for (int i = 0; i < 9; ++i) rows(i / 3, i % 3) = values[i];
  return from_rows(rows);
}

double StainMatrix::condition_number() const {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(rows_.transpose() * rows_);
  const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
  return std::sqrt(ev(2) / ev(0));
}

double optical_density(std::uint8_t intensity) {
  return -std::log10((intensity + kOdEpsilon) / 255.0);
}

namespace {

const std::array<double, 256>& od_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) t[i] = optical_density(static_cast<std::uint8_t>(i));
    return t;
  }();
  return table;
}

std::uint8_t od_to_intensity(double od) {
  const double v = 255.0 * std::exp(-od * std::numbers::ln10) - kOdEpsilon;
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

HedImage rgb_to_hed(const RgbImage& tile, const StainMatrix& matrix) {
  const auto& od = od_table();
  const Eigen::Matrix3d& inv = matrix.inverse();
  HedImage out{tile.width, tile.height, std::vector<double>(tile.pixel_count() * 3)};
  const std::uint8_t* p = tile.pixels.data();
  for (std::size_t i = 0; i < tile.pixel_count(); ++i, p += 3) {
    const Eigen::RowVector3d o(od[p[0]], od[p[1]], od[p[2]]);
    const Eigen::RowVector3d hed = o * inv;
    out.data[i * 3] = hed(0);
    out.data[i * 3 + 1] = hed(1);
    out.data[i * 3 + 2] = hed(2);
  }
  return out;
}

RgbImage hed_to_rgb(const HedImage& hed, const StainMatrix& matrix) {
  const Eigen::Matrix3d& m = matrix.rows();
  RgbImage out(hed.width, hed.height);
  std::uint8_t* p = out.pixels.data();
  for (std::size_t i = 0; i < out.pixel_count(); ++i, p += 3) {
    const Eigen::RowVector3d c(hed.data[i * 3], hed.data[i * 3 + 1], hed.data[i * 3 + 2]);
    const Eigen::RowVector3d od = c * m;
    p[0] = od_to_intensity(od(0));
    p[1] = od_to_intensity(od(1));
    p[2] = od_to_intensity(od(2));
  }
  return out;
}

HedParams HedParams::sample(double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "HED sigma must be >= 0");
  HedParams p;
  p.sigma = sigma;
  for (auto& a : p.alpha) a = rng.uniform(1.0 - sigma, 1.0 + sigma);
  for (auto& b : p.beta) b = rng.uniform(-sigma, sigma);
  return p;
}

RgbImage hed_augment(const RgbImage& tile, const HedParams& params, const StainMatrix& matrix) {
  // od' = (od * inv * diag(alpha) + beta) * M = od * A + offset
  const Eigen::Vector3d alpha(params.alpha[0], params.alpha[1], params.alpha[2]);
  const Eigen::RowVector3d beta(params.beta[0], params.beta[1], params.beta[2]);
  const Eigen::Matrix3d A = matrix.inverse() * alpha.asDiagonal() * matrix.rows();
  const Eigen::RowVector3d offset = beta * matrix.rows();

  // od * A is linear per channel, so each input channel's contribution can be
  // tabulated over the 256 intensities.
  const auto& od = od_table();
  std::array<std::array<double, 3>, 256> contrib_r{}, contrib_g{}, contrib_b{};
  for (int i = 0; i < 256; ++i) {
    for (int c = 0; c < 3; ++c) {
      contrib_r[i][c] = od[i] * A(0, c);
      contrib_g[i][c] = od[i] * A(1, c);
      contrib_b[i][c] = od[i] * A(2, c);
    }
  }

  RgbImage out(tile.width, tile.height);
  const std::uint8_t* in = tile.pixels.data();
  std::uint8_t* o = out.pixels.data();
  for (std::size_t i = 0; i < tile.pixel_count(); ++i, in += 3, o += 3) {
    const auto& r = contrib_r[in[0]];
    const auto& g = contrib_g[in[1]];
    const auto& b = contrib_b[in[2]];
    for (int c = 0; c < 3; ++c) o[c] = od_to_intensity(r[c] + g[c] + b[c] + offset(c));
  }
  return out;
}

TileImage hed_augment(const TileImage& tile, const HedParams& params, const StainMatrix& matrix) {
  return TileImage(hed_augment(static_cast<const RgbImage&>(tile), params, matrix), tile.mpp,
                   tile.origin_l0, tile.slide_id);
}

}  // namespace tilestream::stain
