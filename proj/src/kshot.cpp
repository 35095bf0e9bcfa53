#include "tilestream/kshot.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tilestream/errors.hpp"
#include "tilestream/rng.hpp"

namespace tilestream::eval {

void KShotSpec::validate() const {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (runs < 1) throw Error(ErrorCode::InvalidArgument, "runs must be >= 1");
}

std::vector<std::size_t> build_kshot_split(std::span<const int> y, const KShotSpec& spec,
                                           int run_index) {
  spec.validate();
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);

  Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(run_index)));
  std::vector<std::size_t> out;
  out.reserve(by_class.size() * static_cast<std::size_t>(spec.k));
  for (auto& [label, pool] : by_class) {
    if (pool.size() < static_cast<std::size_t>(spec.k)) {
      throw Error(ErrorCode::InsufficientClassExamples,
                  "class " + std::to_string(label) + " has " + std::to_string(pool.size()) +
                      " examples, need " + std::to_string(spec.k));
    }
    // Partial Fisher-Yates: the first k slots become the sample.
    for (std::size_t i = 0; i < static_cast<std::size_t>(spec.k); ++i) {
      const std::size_t j = i + rng.uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    std::vector<std::size_t> picks(pool.begin(), pool.begin() + spec.k);
    std::sort(picks.begin(), picks.end());
    out.insert(out.end(), picks.begin(), picks.end());
  }
  return out;
}

KShotResult kshot_protocol(const LabeledEmbeddings& data, const KShotSpec& spec,
                           const ClassifierFactory& factory) {
  spec.validate();
  data.validate();
  if (data.labels.empty()) throw Error(ErrorCode::EmptyInput, "k-shot protocol needs labels");
  const auto train_rows = data.indices(Split::Train);
  const auto test_rows = data.indices(Split::Test);
  if (train_rows.empty() || test_rows.empty()) {
    throw Error(ErrorCode::EmptyInput, "k-shot protocol needs Train and Test rows");
  }
  std::vector<int> train_labels;
  for (std::size_t r : train_rows) train_labels.push_back(data.labels[r]);
  const LabeledEmbeddings test = data.subset(test_rows);
  const int n_classes = data.num_classes();

  KShotResult result;
  result.runs = spec.runs;
  result.single_run = spec.runs == 1;
  for (int run = 0; run < spec.runs; ++run) {
    const auto picks = build_kshot_split(train_labels, spec, run);
    std::vector<std::size_t> rows;
    rows.reserve(picks.size());
    for (std::size_t p : picks) rows.push_back(train_rows[p]);
    const LabeledEmbeddings train = data.subset(rows);

    std::unique_ptr<Classifier> clf =
        factory ? factory() : std::make_unique<LinearProbe>();
    clf->fit(train.X, train.labels, n_classes);
    result.scores.push_back(balanced_accuracy(test.labels, clf->predict(test.X)));
  }

  double sum = 0.0;
  for (double s : result.scores) sum += s;
  result.mean = sum / spec.runs;
  if (spec.runs > 1) {
    double ss = 0.0;
    for (double s : result.scores) ss += (s - result.mean) * (s - result.mean);
    result.std_of_mean = std::sqrt(ss / (spec.runs - 1)) / std::sqrt(static_cast<double>(spec.runs));
  }
  return result;
}

}  // namespace tilestream::eval
