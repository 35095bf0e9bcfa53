#include "tilestream/mask.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "tilestream/errors.hpp"

namespace tilestream {

namespace fs = std::filesystem;

std::size_t BitMask::count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

double BitMask::fraction() const {
  return cells.empty() ? 0.0 : static_cast<double>(count()) / static_cast<double>(cells.size());
}

std::vector<std::uint8_t> pack_rows(const BitMask& mask) {
  const std::size_t stride = (static_cast<std::size_t>(mask.width) + 7) / 8;
  std::vector<std::uint8_t> out(stride * mask.height, 0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.get(x, y)) out[y * stride + x / 8] |= static_cast<std::uint8_t>(0x80u >> (x % 8));
    }
  }
  return out;
}

BitMask unpack_rows(const std::vector<std::uint8_t>& bytes, int width, int height) {
  const std::size_t stride = (static_cast<std::size_t>(width) + 7) / 8;
  if (bytes.size() != stride * height) {
    throw Error(ErrorCode::DecodeError, "packed mask size does not match dimensions");
  }
  BitMask mask(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      mask.set(x, y, (bytes[y * stride + x / 8] >> (7 - x % 8)) & 1u);
    }
  }
  return mask;
}

void write_packed_mask(const fs::path& path, const BitMask& mask) {
  const auto bytes = pack_rows(mask);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size()))) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
}

BitMask read_packed_mask(const fs::path& path, int width, int height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return unpack_rows(bytes, width, height);
}

}  // namespace tilestream
