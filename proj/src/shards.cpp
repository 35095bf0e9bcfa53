#include "tilestream/shards.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "tilestream/errors.hpp"
#include "tilestream/protocol.hpp"

namespace tilestream {

namespace fs = std::filesystem;

namespace {

std::string shard_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shard_%05zu.bin", i);
  return buf;
}

}  // namespace

ExportSummary export_shards(std::shared_ptr<const SlideLibrary> library, const StreamConfig& config,
                            std::size_t n_tiles, const fs::path& out_dir, int shard_capacity) {
  if (shard_capacity < 1) throw Error(ErrorCode::InvalidArgument, "shard capacity must be >= 1");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  TileStream stream(std::move(library), config);
  ExportSummary summary;
  std::size_t written = 0;
  while (written < n_tiles) {
    const std::size_t count = std::min<std::size_t>(shard_capacity, n_tiles - written);
    ShardInfo info{shard_name(summary.shards.size()), count, stream.next_index()};
    const fs::path file = out_dir / info.file;
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
    out.write(kShardMagic, sizeof(kShardMagic));

    std::size_t done = 0;
    while (done < count) {
      const int chunk = static_cast<int>(std::min<std::size_t>(config.batch_size, count - done));
      const TileBatch batch = stream.next_batch(chunk);
      wire::Bytes bytes;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        wire::append_tile_record(bytes, batch.meta[i], batch.tiles[i]);
      }
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      done += batch.size();
    }
    if (!out.flush()) throw Error(ErrorCode::IoError, "write failed: " + file.string());
    written += count;
    summary.shards.push_back(std::move(info));
  }
  summary.total = written;

  nlohmann::json index;
  index["total"] = summary.total;
  index["shard_capacity"] = shard_capacity;
  index["shards"] = nlohmann::json::array();
  for (const auto& s : summary.shards) {
    index["shards"].push_back(
        {{"file", s.file.string()}, {"count", s.count}, {"first_tile_index", s.first_tile_index}});
  }
  index["config"] = config.to_json();
  summary.index_path = out_dir / "index.json";
  std::ofstream idx(summary.index_path, std::ios::trunc);
  if (!(idx << index.dump(2) << '\n')) {
    throw Error(ErrorCode::IoError, "cannot write " + summary.index_path.string());
  }
  return summary;
}

std::vector<std::pair<TileMeta, RgbImage>> read_shard(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kShardMagic, 8) != 0) {
    throw Error(ErrorCode::Protocol, path.string() + ": bad shard magic");
  }
  std::vector<std::pair<TileMeta, RgbImage>> out;
  std::size_t offset = 8;
  while (offset < bytes.size()) out.push_back(wire::read_tile_record(bytes, offset));
  return out;
}

}  // namespace tilestream
