#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tilestream/tile_stream.hpp"

namespace tilestream::wire {

// Frame: u32 big-endian payload length | payload
// Payload: u8 frame type | body
enum class FrameType : std::uint8_t {
  Hello = 0x01,
  Next = 0x02,
  Batch = 0x03,
  Error = 0x7F,
};

inline constexpr char kMagic[4] = {'M', 'D', 'N', 'T'};
inline constexpr std::uint8_t kVersion = 1;
/// Client-to-server frames are tiny; anything larger is a protocol violation.
inline constexpr std::uint32_t kMaxClientPayload = 1024;

struct Frame {
  FrameType type = FrameType::Error;
  std::vector<std::uint8_t> body;
};

using Bytes = std::vector<std::uint8_t>;

void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset);
std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t offset);

Bytes encode_frame(FrameType type, std::span<const std::uint8_t> body);

// Incremental decoder for a byte stream. Throws Error(Protocol) on a length
// above max_payload, a zero length or an unknown frame type.
class FrameDecoder {
 public:
  explicit FrameDecoder(std::uint32_t max_payload) : max_payload_(max_payload) {}

  void feed(std::span<const std::uint8_t> bytes);
  std::optional<Frame> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::uint32_t max_payload_;
  std::deque<std::uint8_t> buffer_;
};

// HELLO from client: magic[4] | u8 version | u32 batch_size (0 = server
// default) | u8 flags (bit 0: seed present) | u64 seed
struct ClientHello {
  std::uint32_t batch_size = 0;
  std::optional<std::uint64_t> seed;
};

// HELLO reply: magic[4] | u8 version | u32 batch_size | u64 seed | u32 tile_size
struct ServerHello {
  std::uint32_t batch_size = 0;
  std::uint64_t seed = 0;
  std::uint32_t tile_size = 0;
};

Bytes encode_client_hello(const ClientHello& hello);
ClientHello decode_client_hello(std::span<const std::uint8_t> body);
Bytes encode_server_hello(const ServerHello& hello);
ServerHello decode_server_hello(std::span<const std::uint8_t> body);

// Per-tile record, shared by BATCH bodies and shard files:
// u32 metadata length | UTF-8 JSON metadata | width*height*3 RGB bytes
void append_tile_record(Bytes& out, const TileMeta& meta, const RgbImage& pixels);
/// Parses one record at `offset` and advances it. Throws Error(Protocol).
std::pair<TileMeta, RgbImage> read_tile_record(std::span<const std::uint8_t> in, std::size_t& offset);

// BATCH body: u32 tile count | records
Bytes encode_batch(const TileBatch& batch);
TileBatch decode_batch(std::span<const std::uint8_t> body);

// ERROR body: UTF-8 JSON {"code": str, "message": str}
Bytes encode_error(std::string_view code, std::string_view message);
std::pair<std::string, std::string> decode_error(std::span<const std::uint8_t> body);

}  // namespace tilestream::wire
