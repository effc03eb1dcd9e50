#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "promptsim/errors.hpp"
#include "promptsim/volume.hpp"

namespace promptsim {

inline constexpr int kBridgeProtocolVersion = 1;
/// Frames larger than this are rejected before allocation (16 GiB).
inline constexpr std::uint64_t kMaxFrameBytes = std::uint64_t{1} << 34;

class BridgeError : public Error {
 public:
  using Error::Error;
};

/// The peer closed the stream (EOF or reset) mid-conversation.
class ConnectionClosed : public BridgeError {
 public:
  using BridgeError::BridgeError;
};

/// A frame could not be decoded or violated the message schema.
class MalformedFrame : public BridgeError {
 public:
  using BridgeError::BridgeError;
};

/// The peer answered with an ERROR frame.
class RemoteError : public BridgeError {
 public:
  RemoteError(std::string code, std::string message)
      : BridgeError("remote error [" + code + "]: " + message), code_(std::move(code)), message_(std::move(message)) {}
  const std::string& code() const noexcept { return code_; }
  const std::string& remote_message() const noexcept { return message_; }

 private:
  std::string code_;
  std::string message_;
};

namespace msg {

struct Hello {
  int version = kBridgeProtocolVersion;
  std::vector<std::string> capabilities;
  friend bool operator==(const Hello&, const Hello&) = default;
};

/// The image always travels as float32 little-endian, x fastest.
struct SessionStart {
  std::string session_id;
  Dims dims;
  Spacing spacing;
  std::vector<float> image;
  friend bool operator==(const SessionStart&, const SessionStart&) = default;
};

struct Prompts {
  int iteration = 0;
  std::string prompts;  // serialize_prompt_set text
  std::optional<std::vector<std::uint8_t>> previous_mask;
  friend bool operator==(const Prompts&, const Prompts&) = default;
};

struct SegmentResult {
  int iteration = 0;
  Dims dims;
  std::vector<std::uint8_t> mask;
  friend bool operator==(const SegmentResult&, const SegmentResult&) = default;
};

struct ErrorReply {
  std::string code;
  std::string message;
  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

struct SessionEnd {
  friend bool operator==(const SessionEnd&, const SessionEnd&) = default;
};

}  // namespace msg

using Message = std::variant<msg::Hello, msg::SessionStart, msg::Prompts, msg::SegmentResult, msg::ErrorReply,
                             msg::SessionEnd>;

std::string_view message_kind(const Message& m) noexcept;

/// Frame body: compact JSON header with sorted keys, a '\n', then
/// `payload_bytes` raw bytes. Does not include the 8-byte length prefix.
std::vector<std::uint8_t> encode_message(const Message& m);
/// Throws MalformedFrame.
Message decode_message(std::span<const std::uint8_t> body);

/// 8-byte little-endian length followed by the body.
std::vector<std::uint8_t> frame_bytes(std::span<const std::uint8_t> body);

/// Reliable byte stream (pipe, socket). Implementations throw
/// ConnectionClosed on EOF/reset and IoError on other failures.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void write_all(std::span<const std::uint8_t> bytes) = 0;
  virtual void read_exact(std::span<std::uint8_t> bytes) = 0;
  /// Signals end of output to the peer where the transport supports it.
  virtual void close_write() {}
};

void write_frame(ByteStream& s, std::span<const std::uint8_t> body);
void write_message(ByteStream& s, const Message& m);
/// Reads one frame body. Returns nullopt on a clean EOF before the first
/// length byte; EOF inside a frame throws ConnectionClosed.
std::optional<std::vector<std::uint8_t>> read_frame(ByteStream& s);
/// Like read_frame but EOF at a frame boundary also throws ConnectionClosed.
Message read_message(ByteStream& s);

/// In-memory stream over fixed input bytes; collects everything written.
/// Used to replay recorded transcripts.
class BufferStream final : public ByteStream {
 public:
  explicit BufferStream(std::vector<std::uint8_t> input = {}) : input_(std::move(input)) {}
  void write_all(std::span<const std::uint8_t> bytes) override;
  void read_exact(std::span<std::uint8_t> bytes) override;
  const std::vector<std::uint8_t>& output() const noexcept { return output_; }

 private:
  std::vector<std::uint8_t> input_;
  std::size_t pos_ = 0;
  std::vector<std::uint8_t> output_;
};

}  // namespace promptsim
