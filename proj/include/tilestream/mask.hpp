#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace tilestream {

/// Dense boolean grid, one byte per cell in memory.
struct BitMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> cells;

  BitMask() = default;
  BitMask(int w, int h, bool value = false)
      : width(w), height(h), cells(static_cast<std::size_t>(w) * h, value ? 1 : 0) {}

  bool get(int x, int y) const { return cells[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { cells[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const;
  double fraction() const;

  friend bool operator==(const BitMask&, const BitMask&) = default;
};

// On-disk layout: packed rows, row-major, ceil(width/8) bytes per row,
// most significant bit first. No header; dimensions live in the sidecar.
std::vector<std::uint8_t> pack_rows(const BitMask& mask);
BitMask unpack_rows(const std::vector<std::uint8_t>& bytes, int width, int height);

void write_packed_mask(const std::filesystem::path& path, const BitMask& mask);
BitMask read_packed_mask(const std::filesystem::path& path, int width, int height);

}  // namespace tilestream
