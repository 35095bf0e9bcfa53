#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tilestream/errors.hpp"
#include "tilestream/image.hpp"
#include "tilestream/rng.hpp"
#include "tilestream/synthetic.hpp"

namespace fixtures {

namespace fs = std::filesystem;

/// Fresh, empty directory under the build tree.
fs::path scratch_dir(const std::string& name);

/// Synthetic slide generated once per spec and reused across test binaries.
fs::path cached_slide(const tilestream::SyntheticSlideSpec& spec);

/// One-level slide package wrapping the given pixels.
fs::path slide_from_image(const fs::path& dir, const std::string& stem,
                          const tilestream::RgbImage& image, double mpp,
                          int pyramid_levels = 1);

/// Copies every file of a slide package into dir; returns the new sidecar.
fs::path copy_slide_package(const fs::path& sidecar, const fs::path& dir);

/// JSON-lines manifest with one {"path", "dataset"} object per entry.
fs::path write_manifest(const fs::path& path,
                        const std::vector<std::pair<fs::path, std::string>>& entries);

tilestream::RgbImage random_image(int w, int h, tilestream::Rng& rng);

/// Pixels drawn around typical H&E colors.
tilestream::RgbImage random_he_image(int w, int h, tilestream::Rng& rng);

tilestream::RgbImage solid_image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Code of the tilestream::Error thrown by f, or empty if it returns normally.
template <typename F>
std::optional<tilestream::ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const tilestream::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::vector<std::uint8_t> file_bytes(const fs::path& path);

}  // namespace fixtures
