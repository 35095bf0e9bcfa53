#include "tilestream/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>

#include "tilestream/errors.hpp"

namespace tilestream {

namespace {

bool write_all(int fd, std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

// Returns false on EOF or error.
bool read_into(int fd, wire::FrameDecoder& decoder) {
  std::array<std::uint8_t, 64 * 1024> buf;
  for (;;) {
    const ssize_t n = ::recv(fd, buf.data(), buf.size(), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    decoder.feed({buf.data(), static_cast<std::size_t>(n)});
    return true;
  }
}

void send_frame(int fd, wire::FrameType type, std::span<const std::uint8_t> body) {
  const auto bytes = wire::encode_frame(type, body);
  write_all(fd, bytes);
}

void send_error(int fd, std::string_view code, std::string_view message) {
  send_frame(fd, wire::FrameType::Error, wire::encode_error(code, message));
}

}  // namespace

TileServer::TileServer(std::shared_ptr<const SlideLibrary> library, StreamConfig config,
                       ServerOptions options)
    : library_(std::move(library)), config_(std::move(config)), options_(std::move(options)) {
  config_.validate();
}

TileServer::~TileServer() { stop(); }

void TileServer::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::BindError, std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(options_.port);
  if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorCode::BindError, "invalid IPv4 address " + options_.host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, options_.backlog) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorCode::BindError, options_.host + ":" + std::to_string(options_.port) + ": " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port_ = ntohs(addr.sin_port);
  stopping_ = false;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void TileServer::run() {
  if (listen_fd_ < 0) start();
  stopped_.wait(false);
}

void TileServer::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  stopped_ = true;
  stopped_.notify_all();
}

void TileServer::accept_loop() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    live_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { handle(fd); });
  }
}

void TileServer::handle(int fd) {
  wire::FrameDecoder decoder(wire::kMaxClientPayload);
  std::optional<TileStream> stream;
  try {
    for (;;) {
      std::optional<wire::Frame> frame = decoder.next();
      if (!frame) {
        if (!read_into(fd, decoder)) break;
        continue;
      }
      if (!stream) {
        if (frame->type != wire::FrameType::Hello) {
          throw Error(ErrorCode::Protocol, "expected HELLO");
        }
        const auto hello = wire::decode_client_hello(frame->body);
        StreamConfig cfg = config_;
        if (hello.batch_size > 0) cfg.batch_size = static_cast<int>(hello.batch_size);
        if (hello.seed) cfg.seed = *hello.seed;
        stream.emplace(library_, cfg);
        const auto reply = wire::encode_server_hello(
            {static_cast<std::uint32_t>(cfg.batch_size), cfg.seed,
             static_cast<std::uint32_t>(cfg.sampler.tile_size_px)});
        send_frame(fd, wire::FrameType::Hello, reply);
        continue;
      }
      if (frame->type != wire::FrameType::Next || !frame->body.empty()) {
        throw Error(ErrorCode::Protocol, "expected empty NEXT");
      }
      const TileBatch batch = stream->next_batch();
      if (!write_all(fd, wire::encode_frame(wire::FrameType::Batch, wire::encode_batch(batch)))) {
        break;
      }
    }
  } catch (const Error& e) {
    send_error(fd, to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    send_error(fd, "INTERNAL", e.what());
  }
  ++served_;
  std::lock_guard lock(mu_);
  live_fds_.erase(std::remove(live_fds_.begin(), live_fds_.end(), fd), live_fds_.end());
  ::close(fd);
}

// ---------------------------------------------------------------------------

TileClient::TileClient(const std::string& host, std::uint16_t port, std::uint32_t batch_size,
                       std::optional<std::uint64_t> seed) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::IoError, std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
      ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::IoError, "connect " + host + ":" + std::to_string(port) + ": " + why);
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

  send_raw(wire::encode_frame(wire::FrameType::Hello, wire::encode_client_hello({batch_size, seed})));
  const wire::Frame reply = read_frame();
  if (reply.type == wire::FrameType::Error) {
    const auto [code, message] = wire::decode_error(reply.body);
    throw Error(ErrorCode::Protocol, "handshake rejected: " + code + ": " + message);
  }
  if (reply.type != wire::FrameType::Hello) throw Error(ErrorCode::Protocol, "expected HELLO reply");
  hello_ = wire::decode_server_hello(reply.body);
}

TileClient::~TileClient() {
  if (fd_ >= 0) ::close(fd_);
}

void TileClient::send_raw(std::span<const std::uint8_t> bytes) {
  if (!write_all(fd_, bytes)) throw Error(ErrorCode::IoError, "send failed");
}

wire::Frame TileClient::read_frame() {
  for (;;) {
    if (auto f = decoder_.next()) return std::move(*f);
    if (!read_into(fd_, decoder_)) throw Error(ErrorCode::IoError, "connection closed");
  }
}

TileBatch TileClient::next_batch() {
  send_raw(wire::encode_frame(wire::FrameType::Next, {}));
  const wire::Frame f = read_frame();
  if (f.type == wire::FrameType::Error) {
    const auto [code, message] = wire::decode_error(f.body);
    throw Error(ErrorCode::Protocol, code + ": " + message);
  }
  if (f.type != wire::FrameType::Batch) throw Error(ErrorCode::Protocol, "expected BATCH");
  return wire::decode_batch(f.body);
}

}  // namespace tilestream
