#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tilestream/eval.hpp"
#include "tilestream/kshot.hpp"

namespace tilestream::eval {

// Binary embedding file, all integers little-endian:
//   "MDNTEMB1" | u64 n | u64 d | u64 g | u32 flags
//   X: n*d float32 row-major
//   labels: n int32               (flags & kHasLabels)
//   targets: n*g float32          (g > 0)
//   patient ids: n x (u32 len, bytes)  (flags & kHasPatients)
//   splits: n uint8 (0 train, 1 val, 2 test)  (flags & kHasSplits)
inline constexpr char kEmbeddingMagic[8] = {'M', 'D', 'N', 'T', 'E', 'M', 'B', '1'};
inline constexpr std::uint32_t kHasLabels = 1u << 0;
inline constexpr std::uint32_t kHasPatients = 1u << 1;
inline constexpr std::uint32_t kHasSplits = 1u << 2;

void write_embeddings(const std::filesystem::path& path, const LabeledEmbeddings& data);
/// Errors: FileNotFound, ParseError (bad magic, truncated file).
LabeledEmbeddings read_embeddings(const std::filesystem::path& path);

// CSV with a header row. Recognized columns: "label", "patient_id", "split"
// (train/val/test), "f<i>" feature columns and "t<i>" target columns, ordered
// by index. No quoting.
LabeledEmbeddings read_embeddings_csv(const std::filesystem::path& path);

struct TaskReport {
  std::string task;
  std::string metric;
  KShotResult result;
};

/// {"<task>": {"metric", "mean", "std_of_mean", "runs", "single_run"}}
void write_report(const std::filesystem::path& path, const std::vector<TaskReport>& reports);

}  // namespace tilestream::eval
