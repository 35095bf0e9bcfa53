#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "tilestream/eval.hpp"
#include "tilestream/probe.hpp"

namespace tilestream::eval {

struct KShotSpec {
  int k = 10;
  int runs = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

// k indices per class, drawn without replacement with a generator seeded by
// derive_seed(spec.seed, run_index). Classes are visited in ascending order;
// each class's picks are returned sorted.
// Errors: InsufficientClassExamples.
std::vector<std::size_t> build_kshot_split(std::span<const int> y, const KShotSpec& spec,
                                           int run_index);

struct KShotResult {
  double mean = 0.0;
  double std_of_mean = 0.0;  // sample std / sqrt(runs); 0 for a single run
  int runs = 0;
  bool single_run = false;
  std::vector<double> scores;
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

// For each run: k-shot split of the Train rows, fit, balanced accuracy on the
// Test rows. The default classifier is LinearProbe with default settings.
KShotResult kshot_protocol(const LabeledEmbeddings& data, const KShotSpec& spec,
                           const ClassifierFactory& factory = {});

}  // namespace tilestream::eval
