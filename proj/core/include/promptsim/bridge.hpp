#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "promptsim/backend.hpp"
#include "promptsim/bridge_frame.hpp"
#include "promptsim/bridge_transport.hpp"

namespace promptsim {

/// Capabilities announced by this implementation in HELLO.
std::vector<std::string> bridge_capabilities();

/// Segmenter that forwards requests to an external process over the framed
/// bridge protocol. The HELLO exchange happens in the constructor. One
/// session per connection: the image is sent once (first request), prompts
/// and the previous mask on every request.
///
/// Errors: ConnectionClosed, MalformedFrame, GeometryMismatch and
/// RemoteError are distinct; a protocol-level refusal at HELLO (for example a
/// version mismatch) surfaces as RemoteError with the server's code.
class BridgeBackend final : public Segmenter {
 public:
  explicit BridgeBackend(std::unique_ptr<ByteStream> stream);
  /// Launches `argv` and talks to it over its stdin/stdout.
  static std::unique_ptr<BridgeBackend> spawn(const std::vector<std::string>& argv);
  static std::unique_ptr<BridgeBackend> connect(const std::string& host, std::uint16_t port);
  ~BridgeBackend() override;

  BinaryMask segment(const SegmentationRequest& request) override;
  /// Sends SESSION_END (if a session was started) and closes the write side.
  void end_session() override;

  const msg::Hello& server_hello() const noexcept { return server_hello_; }

 private:
  BridgeBackend(std::unique_ptr<ChildProcess> child);
  void handshake();
  ByteStream& stream() noexcept { return child_ ? child_->stream() : *stream_; }

  std::unique_ptr<ByteStream> stream_;
  std::unique_ptr<ChildProcess> child_;
  msg::Hello server_hello_;
  std::string session_id_;
  bool session_started_ = false;
  bool finished_ = false;
};

struct BridgeSession {
  std::string session_id;
  std::shared_ptr<const VoxelGrid> image;
};

using SegmenterFactory = std::function<std::unique_ptr<Segmenter>(const BridgeSession&)>;

enum class ServeResult {
  Completed,        // SESSION_END received
  PeerClosed,       // EOF at a frame boundary
  ProtocolError,    // ERROR frame sent, connection abandoned
};

/// Server side of the bridge for a single connection and single session.
/// Protocol violations are answered with an ERROR frame (codes: "version",
/// "protocol", "malformed", "geometry") and end the conversation; backend
/// failures are reported with code "backend" and the session continues.
ServeResult serve_bridge(ByteStream& stream, const SegmenterFactory& factory);

}  // namespace promptsim
