#include "tilestream/protocol.hpp"

#include <cstring>

#include <json.hpp>

#include "tilestream/errors.hpp"

namespace tilestream::wire {

namespace {

[[noreturn]] void violation(const std::string& what) { throw Error(ErrorCode::Protocol, what); }

void need(std::span<const std::uint8_t> in, std::size_t offset, std::size_t n, const char* what) {
  if (offset > in.size() || in.size() - offset < n) violation(std::string("truncated ") + what);
}

bool known_type(std::uint8_t t) {
  return t == 0x01 || t == 0x02 || t == 0x03 || t == 0x7F;
}

}  // namespace

void put_u32(Bytes& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  need(in, offset, 4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | in[offset + i];
  return v;
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t offset) {
  need(in, offset, 8, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in[offset + i];
  return v;
}

Bytes encode_frame(FrameType type, std::span<const std::uint8_t> body) {
  Bytes out;
  out.reserve(5 + body.size());
  put_u32(out, static_cast<std::uint32_t>(body.size() + 1));
  out.push_back(static_cast<std::uint8_t>(type));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameDecoder::next() {
  if (buffer_.size() < 4) return std::nullopt;
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len = (len << 8) | buffer_[i];
  if (len == 0) violation("zero-length frame");
  if (len > max_payload_) violation("frame length " + std::to_string(len) + " exceeds limit");
  if (buffer_.size() > 4 && !known_type(buffer_[4])) violation("unknown frame type");
  if (buffer_.size() < 4 + static_cast<std::size_t>(len)) return std::nullopt;
  Frame f;
  f.type = static_cast<FrameType>(buffer_[4]);
  f.body.assign(buffer_.begin() + 5, buffer_.begin() + 4 + len);
  buffer_.erase(buffer_.begin(), buffer_.begin() + 4 + len);
  return f;
}

Bytes encode_client_hello(const ClientHello& hello) {
  Bytes out(kMagic, kMagic + 4);
  out.push_back(kVersion);
  put_u32(out, hello.batch_size);
  out.push_back(hello.seed ? 1 : 0);
  put_u64(out, hello.seed.value_or(0));
  return out;
}

ClientHello decode_client_hello(std::span<const std::uint8_t> body) {
  if (body.size() != 18) violation("HELLO body must be 18 bytes");
  if (std::memcmp(body.data(), kMagic, 4) != 0) violation("bad HELLO magic");
  if (body[4] != kVersion) violation("unsupported protocol version");
  ClientHello h;
  h.batch_size = get_u32(body, 5);
  if (body[9] > 1) violation("bad HELLO flags");
  if (body[9] & 1) h.seed = get_u64(body, 10);
  return h;
}

Bytes encode_server_hello(const ServerHello& hello) {
  Bytes out(kMagic, kMagic + 4);
  out.push_back(kVersion);
  put_u32(out, hello.batch_size);
  put_u64(out, hello.seed);
  put_u32(out, hello.tile_size);
  return out;
}

ServerHello decode_server_hello(std::span<const std::uint8_t> body) {
  if (body.size() != 21) violation("HELLO reply must be 21 bytes");
  if (std::memcmp(body.data(), kMagic, 4) != 0) violation("bad HELLO magic");
  if (body[4] != kVersion) violation("unsupported protocol version");
  return {get_u32(body, 5), get_u64(body, 9), get_u32(body, 17)};
}

void append_tile_record(Bytes& out, const TileMeta& meta, const RgbImage& pixels) {
  const std::string json = meta.to_json().dump();
  put_u32(out, static_cast<std::uint32_t>(json.size()));
  out.insert(out.end(), json.begin(), json.end());
  out.insert(out.end(), pixels.pixels.begin(), pixels.pixels.end());
}

std::pair<TileMeta, RgbImage> read_tile_record(std::span<const std::uint8_t> in,
                                               std::size_t& offset) {
  const std::uint32_t meta_len = get_u32(in, offset);
  offset += 4;
  need(in, offset, meta_len, "tile metadata");
  TileMeta meta;
  try {
    meta = TileMeta::from_json(nlohmann::json::parse(in.begin() + offset,
                                                     in.begin() + offset + meta_len));
  } catch (const nlohmann::json::exception& e) {
    violation(std::string("bad tile metadata: ") + e.what());
  }
  offset += meta_len;
  if (meta.width <= 0 || meta.height <= 0 || meta.width > 65536 || meta.height > 65536) {
    violation("bad tile dimensions");
  }
  const std::size_t n = static_cast<std::size_t>(meta.width) * meta.height * 3;
  need(in, offset, n, "tile pixels");
  RgbImage img(meta.width, meta.height,
               std::vector<std::uint8_t>(in.begin() + offset, in.begin() + offset + n));
  offset += n;
  return {std::move(meta), std::move(img)};
}

Bytes encode_batch(const TileBatch& batch) {
  Bytes out;
  std::size_t total = 4;
  for (const auto& t : batch.tiles) total += t.pixels.size() + 256;
  out.reserve(total);
  put_u32(out, static_cast<std::uint32_t>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) append_tile_record(out, batch.meta[i], batch.tiles[i]);
  return out;
}

TileBatch decode_batch(std::span<const std::uint8_t> body) {
  const std::uint32_t count = get_u32(body, 0);
  std::size_t offset = 4;
  TileBatch batch;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [meta, img] = read_tile_record(body, offset);
    batch.tiles.emplace_back(std::move(img), meta.mpp, Point{meta.x, meta.y}, meta.slide_id);
    batch.meta.push_back(std::move(meta));
  }
  if (offset != body.size()) violation("trailing bytes after BATCH records");
  return batch;
}

Bytes encode_error(std::string_view code, std::string_view message) {
  const std::string s = nlohmann::json{{"code", code}, {"message", message}}.dump();
  return Bytes(s.begin(), s.end());
}

std::pair<std::string, std::string> decode_error(std::span<const std::uint8_t> body) {
  try {
    const auto j = nlohmann::json::parse(body.begin(), body.end());
    return {j.at("code").get<std::string>(), j.at("message").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    violation(std::string("bad ERROR body: ") + e.what());
  }
}

}  // namespace tilestream::wire
