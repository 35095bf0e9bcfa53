#include "tilestream/manifest.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "tilestream/slide.hpp"

namespace tilestream {

namespace fs = std::filesystem;

std::map<std::string, std::size_t> DatasetManifest::counts_by_dataset() const {
  std::map<std::string, std::size_t> out;
  for (const auto& e : entries) ++out[e.dataset];
  return out;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  const fs::path base = path.parent_path();

  DatasetManifest manifest;
  std::set<fs::path> seen;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ManifestParseError(line, e.what());
    }
    if (!obj.is_object() || !obj.contains("path") || !obj["path"].is_string() ||
        !obj.contains("dataset") || !obj["dataset"].is_string()) {
      throw ManifestParseError(line, "expected {\"path\": str, \"dataset\": str, \"mpp\"?: number}");
    }
    ManifestEntry entry;
    entry.path = obj["path"].get<std::string>();
    if (entry.path.is_relative()) entry.path = base / entry.path;
    entry.dataset = obj["dataset"].get<std::string>();
    if (obj.contains("mpp") && !obj["mpp"].is_null()) {
      if (!obj["mpp"].is_number()) throw ManifestParseError(line, "\"mpp\" must be a number");
      entry.mpp = obj["mpp"].get<double>();
    }

    const fs::path key = fs::weakly_canonical(entry.path);
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::ValidationError,
                  "line " + std::to_string(line) + ": duplicate path " + entry.path.string());
    }
    try {
      open_slide(entry.path, entry.dataset, entry.mpp);
    } catch (const Error& e) {
      throw Error(ErrorCode::ValidationError,
                  "line " + std::to_string(line) + ": " + entry.path.string() + ": " + e.what());
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

}  // namespace tilestream
