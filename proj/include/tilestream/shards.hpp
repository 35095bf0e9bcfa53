#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tilestream/tile_stream.hpp"

namespace tilestream {

inline constexpr char kShardMagic[8] = {'M', 'D', 'N', 'T', 'S', 'H', 'R', 'D'};
inline constexpr int kDefaultShardCapacity = 1024;

struct ShardInfo {
  std::filesystem::path file;  // relative to the output directory
  std::size_t count = 0;
  std::uint64_t first_tile_index = 0;
};

struct ExportSummary {
  std::vector<ShardInfo> shards;
  std::size_t total = 0;
  std::filesystem::path index_path;
};

// Writes tiles 0..n_tiles-1 of the stream defined by (library, config) into
// shard_00000.bin, shard_00001.bin, ... (magic "MDNTSHRD" followed by tile
// records in wire format) and index.json with per-shard counts and the config.
// Errors: IoError, plus anything the stream raises.
ExportSummary export_shards(std::shared_ptr<const SlideLibrary> library, const StreamConfig& config,
                            std::size_t n_tiles, const std::filesystem::path& out_dir,
                            int shard_capacity = kDefaultShardCapacity);

/// All records of one shard file, in order. Errors: FileNotFound, Protocol.
std::vector<std::pair<TileMeta, RgbImage>> read_shard(const std::filesystem::path& path);

}  // namespace tilestream
