#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "tilestream/eval.hpp"
#include "tilestream/kshot.hpp"
#include "tilestream/probe.hpp"

using namespace tilestream;
using namespace tilestream::eval;
using fixtures::error_code;

namespace {

std::vector<int> random_labels(std::size_t n, int classes, Rng& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(classes)));
  return y;
}

Matrix random_matrix(Eigen::Index n, Eigen::Index d, Rng& rng) {
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

// Two Gaussian-ish clusters far apart along the first axis.
LabeledEmbeddings separable(std::size_t per_class, int classes, std::uint64_t seed) {
  Rng rng(seed);
  LabeledEmbeddings data;
  const std::size_t n = per_class * static_cast<std::size_t>(classes);
  data.X.resize(static_cast<Eigen::Index>(n), 8);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(classes));
    for (Eigen::Index k = 0; k < 8; ++k) data.X(static_cast<Eigen::Index>(i), k) = rng.uniform(-0.5, 0.5);
    data.X(static_cast<Eigen::Index>(i), c % 8) += 4.0;
    data.labels.push_back(c);
    data.splits.push_back(i < n / 2 ? Split::Train : Split::Test);
  }
  return data;
}

class MajorityClass : public Classifier {
 public:
  void fit(const Matrix&, std::span<const int> y, int n_classes) override {
    std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
    for (int v : y) ++counts[static_cast<std::size_t>(v)];
    label_ = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }
  std::vector<int> predict(const Matrix& X) const override {
    return std::vector<int>(static_cast<std::size_t>(X.rows()), label_);
  }

 private:
  int label_ = 0;
};

}  // namespace

TEST_CASE("balanced accuracy examples") {
  CHECK(balanced_accuracy(std::vector{0, 0, 1, 1}, std::vector{0, 1, 1, 1}) == 0.75);
  CHECK(balanced_accuracy(std::vector{0, 1, 2}, std::vector{0, 1, 2}) == 1.0);
  CHECK(balanced_accuracy(std::vector{0, 0, 0, 1}, std::vector{0, 0, 0, 0}) == 0.5);
  CHECK(error_code([] { balanced_accuracy(std::vector<int>{}, std::vector<int>{}); }) ==
        ErrorCode::EmptyInput);
  CHECK(error_code([] { balanced_accuracy(std::vector{0}, std::vector{0, 1}); }) ==
        ErrorCode::ShapeMismatch);
}

TEST_CASE("balanced accuracy matches the oracle and ignores relabeling") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int classes = 2 + static_cast<int>(rng.uniform_index(5));
    const auto n = 1 + rng.uniform_index(40);
    const auto t = random_labels(n, classes, rng);
    const auto p = random_labels(n, classes, rng);
    REQUIRE(std::abs(balanced_accuracy(t, p) - oracles::balanced_accuracy(t, p)) <= 1e-12);

    std::vector<int> perm(static_cast<std::size_t>(classes));
    for (int c = 0; c < classes; ++c) perm[static_cast<std::size_t>(c)] = (c * 3 + 1) % classes;
    if (std::gcd(3, classes) != 1) continue;
    std::vector<int> t2, p2;
    for (int v : t) t2.push_back(perm[static_cast<std::size_t>(v)]);
    for (int v : p) p2.push_back(perm[static_cast<std::size_t>(v)]);
    REQUIRE(std::abs(balanced_accuracy(t2, p2) - balanced_accuracy(t, p)) <= 1e-12);
  }
}

TEST_CASE("dice examples") {
  const LabelMask truth{2, 2, {1, 1, 0, 0}};
  const LabelMask pred{2, 2, {1, 0, 0, 0}};
  CHECK(dice_no_background(pred, truth, 2) == 2.0 / 3.0);

  const LabelMask multi{3, 2, {1, 2, 3, 0, 1, 2}};
  CHECK(dice_no_background(multi, multi, 4) == 1.0);

  const LabelMask background{2, 2, {0, 0, 0, 0}};
  CHECK(dice_no_background(background, truth, 2) == 0.0);
  CHECK(error_code([&] { dice_no_background(background, background, 2); }) == ErrorCode::EmptyInput);
  CHECK(error_code([&] { dice_no_background(LabelMask{1, 2, {0, 1}}, truth, 2); }) ==
        ErrorCode::ShapeMismatch);

  // Class 2 absent from both masks is skipped, not counted as a perfect score.
  CHECK(dice_no_background(pred, truth, 3) == 2.0 / 3.0);
}

TEST_CASE("dice matches the oracle and is symmetric") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int classes = 2 + static_cast<int>(rng.uniform_index(4));
    const int w = 1 + static_cast<int>(rng.uniform_index(8));
    const int h = 1 + static_cast<int>(rng.uniform_index(8));
    LabelMask a{w, h, random_labels(static_cast<std::size_t>(w * h), classes, rng)};
    LabelMask b{w, h, random_labels(static_cast<std::size_t>(w * h), classes, rng)};
    a.labels[0] = 1;
    const double got = dice_no_background(a, b, classes);
    REQUIRE(std::abs(got - oracles::dice_no_background(a.labels, b.labels, classes, 0)) <= 1e-12);
    REQUIRE(std::abs(got - dice_no_background(b, a, classes)) <= 1e-12);
  }
}

TEST_CASE("pearson examples") {
  Matrix t(3, 1), p(3, 1);
  t << 1, 2, 3;
  p << 2, 4, 6;
  CHECK(pearson_mean(p, t) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson_mean(t, t) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson_mean(-t, t) == doctest::Approx(-1.0).epsilon(1e-15));

  Matrix flat(3, 1);
  flat << 5, 5, 5;
  CHECK(error_code([&] { pearson_mean(p, flat); }) == ErrorCode::ZeroVariance);
  CHECK(pearson_mean(flat, t) == 0.0);
  CHECK(error_code([&] { pearson_mean(Matrix(1, 1), Matrix(1, 1)); }) == ErrorCode::EmptyInput);
  CHECK(error_code([&] { pearson_mean(Matrix(3, 2), t); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("pearson matches the oracle and ignores positive affine maps") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 2 + static_cast<Eigen::Index>(rng.uniform_index(30));
    const auto g = 1 + static_cast<Eigen::Index>(rng.uniform_index(6));
    const Matrix t = random_matrix(n, g, rng);
    const Matrix p = random_matrix(n, g, rng);
    const double got = pearson_mean(p, t);
    REQUIRE(std::abs(got - oracles::pearson_mean(p, t)) <= 1e-12);

    Matrix q = p;
    for (Eigen::Index c = 0; c < g; ++c) {
      q.col(c) = p.col(c) * rng.uniform(0.1, 10.0) + Eigen::VectorXd::Constant(n, rng.uniform(-5, 5));
    }
    REQUIRE(std::abs(pearson_mean(q, t) - got) <= 1e-9);
  }
}

TEST_CASE("k-shot splits") {
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) y.push_back(i % 2);
  KShotSpec spec;
  spec.seed = 5;
  const auto s = build_kshot_split(y, spec, 0);
  CHECK(s.size() == 20);
  std::map<int, int> per_class;
  for (auto i : s) ++per_class[y[i]];
  CHECK(per_class[0] == 10);
  CHECK(per_class[1] == 10);
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 20);
  CHECK(build_kshot_split(y, spec, 0) == s);
  CHECK(build_kshot_split(y, spec, 1) != s);

  std::vector<int> small(15, 0);
  for (int i = 0; i < 5; ++i) small.push_back(1);
  CHECK(error_code([&] { build_kshot_split(small, spec, 0); }) ==
        ErrorCode::InsufficientClassExamples);
  spec.k = 0;
  CHECK(error_code([&] { build_kshot_split(y, spec, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("k-shot split draw order") {
  // Classes ascending; partial Fisher-Yates per class; picks sorted.
  std::vector<int> y{1, 0, 1, 0, 1, 0, 1, 0};
  KShotSpec spec;
  spec.k = 2;
  spec.seed = 77;
  Rng rng(derive_seed(77, 3));
  std::vector<std::size_t> want;
  for (int c : {0, 1}) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == c) pool.push_back(i);
    }
    for (std::size_t i = 0; i < 2; ++i) std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
    std::sort(pool.begin(), pool.begin() + 2);
    want.insert(want.end(), pool.begin(), pool.begin() + 2);
  }
  CHECK(build_kshot_split(y, spec, 3) == want);
}

TEST_CASE("linear probe") {
  Matrix X(6, 2);
  X << -2, -1, -1.5, -2, -1, -1.2, 1, 1.5, 2, 1, 1.3, 2;
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  LinearProbe probe;
  probe.fit(X, y, 2);
  CHECK(probe.predict(X) == y);
  CHECK(probe.epochs_run() > 0);

  Matrix dup(6, 4);
  dup << X, X;
  LinearProbe wide;
  wide.fit(dup, y, 2);
  CHECK(wide.predict(dup) == probe.predict(X));
  Rng rng(4);
  const Matrix probe_points = random_matrix(50, 2, rng) * 3.0;
  Matrix probe_dup(50, 4);
  probe_dup << probe_points, probe_points;
  CHECK(wide.predict(probe_dup) == probe.predict(probe_points));
  CHECK(wide.decision_function(probe_dup).allFinite());

  LinearProbe again;
  again.fit(X, y, 2);
  CHECK((again.decision_function(X) - probe.decision_function(X)).cwiseAbs().maxCoeff() == 0.0);

  CHECK(error_code([&] { LinearProbe().fit(X, std::vector<int>(6, 1), 2); }) ==
        ErrorCode::DegenerateInput);
  CHECK(error_code([&] { LinearProbe().fit(Matrix::Ones(6, 2), y, 2); }) ==
        ErrorCode::DegenerateInput);
  CHECK(error_code([&] { LinearProbe().fit(X, std::vector<int>{0, 1}, 2); }) ==
        ErrorCode::ShapeMismatch);
  CHECK(error_code([&] { probe.predict(Matrix(2, 3)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("probe stops early once the gradient vanishes") {
  ProbeConfig cfg;
  cfg.grad_tol = 1e-2;
  Matrix X(4, 1);
  X << -1, -2, 1, 2;
  LinearProbe p(cfg);
  p.fit(X, std::vector<int>{0, 0, 1, 1}, 2);
  CHECK(p.epochs_run() < cfg.max_epochs);
  CHECK(p.final_grad_norm() < 1e-2);
}

TEST_CASE("k-shot protocol") {
  const auto data = separable(40, 2, 9);
  KShotSpec spec;
  spec.seed = 11;
  spec.runs = 20;
  const auto a = kshot_protocol(data, spec);
  const auto b = kshot_protocol(data, spec);
  CHECK(a.mean == b.mean);
  CHECK(a.std_of_mean == b.std_of_mean);
  CHECK(a.scores.size() == 20);
  CHECK(a.mean > 0.95);
  CHECK_FALSE(a.single_run);

  spec.runs = 1;
  const auto one = kshot_protocol(data, spec);
  CHECK(one.single_run);
  CHECK(one.std_of_mean == 0.0);

  spec.runs = 10;
  const auto three = separable(40, 3, 10);
  const auto majority =
      kshot_protocol(three, spec, [] { return std::make_unique<MajorityClass>(); });
  CHECK(std::abs(majority.mean - 1.0 / 3.0) <= 3 * majority.std_of_mean + 1e-12);

  LabeledEmbeddings no_test = data;
  for (auto& s : no_test.splits) s = Split::Train;
  CHECK(error_code([&] { kshot_protocol(no_test, spec); }) == ErrorCode::EmptyInput);
}

TEST_CASE("protocol mean is stable when runs double") {
  // Overlapping clusters so individual runs disagree.
  Rng rng(12);
  LabeledEmbeddings data;
  data.X.resize(200, 4);
  for (Eigen::Index i = 0; i < 200; ++i) {
    const int c = static_cast<int>(i % 2);
    for (Eigen::Index k = 0; k < 4; ++k) data.X(i, k) = rng.uniform(-1, 1);
    data.X(i, 0) += c ? 0.6 : -0.6;
    data.labels.push_back(c);
    data.splits.push_back(i < 100 ? Split::Train : Split::Test);
  }
  KShotSpec spec;
  spec.seed = 1;
  spec.runs = 50;
  const auto r50 = kshot_protocol(data, spec);
  spec.runs = 100;
  const auto r100 = kshot_protocol(data, spec);
  CAPTURE(r50.mean);
  CAPTURE(r100.mean);
  CHECK(r50.std_of_mean > 0.0);
  CHECK(std::abs(r100.mean - r50.mean) < 2 * r50.std_of_mean);
}

TEST_CASE("labeled embeddings helpers") {
  auto data = separable(3, 2, 1);
  CHECK(data.num_classes() == 2);
  CHECK(data.indices(Split::Train).size() == 3);
  const std::vector<std::size_t> rows{4, 1};
  const auto sub = data.subset(rows);
  CHECK(sub.size() == 2);
  CHECK(sub.labels == std::vector<int>{data.labels[4], data.labels[1]});
  CHECK(sub.X.row(0) == data.X.row(4));
  data.labels.pop_back();
  CHECK(error_code([&] { data.validate(); }) == ErrorCode::ShapeMismatch);
}
