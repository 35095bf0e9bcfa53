#pragma once

#include <filesystem>

#include "tilestream/image.hpp"

namespace tilestream::png {

/// True if the file starts with the PNG signature.
bool has_signature(const std::filesystem::path& path);

/// Decodes any PNG to 8-bit RGB. Throws DecodeError on corrupt data.
RgbImage read(const std::filesystem::path& path);

/// Writes 8-bit RGB. Output bytes depend only on the pixels and the level.
void write(const std::filesystem::path& path, const RgbImage& image, int compression_level = 1);

}  // namespace tilestream::png

namespace tilestream::png {

struct Header {
  int width = 0;
  int height = 0;
};

/// Reads only the IHDR chunk.
Header read_header(const std::filesystem::path& path);

}  // namespace tilestream::png
