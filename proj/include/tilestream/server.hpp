#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tilestream/protocol.hpp"
#include "tilestream/tile_stream.hpp"

namespace tilestream {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  int backlog = 16;
};

// Pull-based tile server. Each connection sends HELLO, then one NEXT per
// batch; the server builds a batch only when asked, so at most one batch per
// connection is ever held in memory. Connections are served on their own
// threads and own independent TileStreams.
class TileServer {
 public:
  TileServer(std::shared_ptr<const SlideLibrary> library, StreamConfig config,
             ServerOptions options = {});
  ~TileServer();
  TileServer(const TileServer&) = delete;
  TileServer& operator=(const TileServer&) = delete;

  /// Binds and starts accepting. Errors: BindError.
  void start();
  /// Closes the listener and all live connections, then joins every thread.
  void stop();
  /// start() then block until stop() is called from elsewhere.
  void run();

  std::uint16_t port() const { return bound_port_; }
  std::size_t connections_served() const { return served_.load(); }

 private:
  void accept_loop();
  void handle(int fd);

  std::shared_ptr<const SlideLibrary> library_;
  StreamConfig config_;
  ServerOptions options_;
  int listen_fd_ = -1;
  std::atomic<std::uint16_t> bound_port_{0};
  std::atomic<bool> stopping_{false};
  std::atomic<bool> stopped_{false};
  std::atomic<std::size_t> served_{0};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<int> live_fds_;
  std::vector<std::thread> workers_;
};

// Blocking protocol client, used by the CLI and the tests.
class TileClient {
 public:
  /// Errors: IoError (connection refused), Protocol (bad handshake).
  TileClient(const std::string& host, std::uint16_t port, std::uint32_t batch_size,
             std::optional<std::uint64_t> seed = std::nullopt);
  ~TileClient();
  TileClient(const TileClient&) = delete;
  TileClient& operator=(const TileClient&) = delete;

  const wire::ServerHello& hello() const { return hello_; }

  /// Sends NEXT and waits for the batch. An ERROR frame is rethrown as
  /// Error(Protocol) carrying the server's code and message.
  TileBatch next_batch();

  /// Raw access for protocol tests.
  void send_raw(std::span<const std::uint8_t> bytes);
  wire::Frame read_frame();

 private:
  int fd_ = -1;
  wire::FrameDecoder decoder_{1u << 30};
  wire::ServerHello hello_;
};

}  // namespace tilestream
