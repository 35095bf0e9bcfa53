#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tilestream/errors.hpp"

namespace tilestream {

struct ManifestEntry {
  std::filesystem::path path;  // resolved against the manifest's directory
  std::string dataset;
  std::optional<double> mpp;  // level-0 spacing override
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::map<std::string, std::size_t> counts_by_dataset() const;
};

class ManifestParseError : public Error {
 public:
  ManifestParseError(int line, const std::string& message)
      : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + message), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// JSON lines, one object per slide: {"path": str, "dataset": str, "mpp": float?}.
// Blank lines are skipped. Every entry is opened once to validate it.
//
// Errors: FileNotFound, ManifestParseError (ParseError with line number),
// ValidationError (duplicate path, unopenable slide, missing spacing).
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace tilestream
