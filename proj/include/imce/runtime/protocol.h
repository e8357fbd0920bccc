/* Copyright 2026 The IMCE Emulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace imce {

// Frame layout (little-endian), 22-byte header followed by the payload:
//   0  magic "IMCE"
//   4  version      u8
//   5  type         u8
//   6  channel_id   u32
//  10  seq          u64
//  18  payload_len  u32

constexpr uint8_t kProtocolVersion = 1;
constexpr size_t kHeaderSize = 22;
constexpr uint32_t kMaxPayload = 64u << 20;
/// Channels at or above this value address the orchestrator (graph outputs).
constexpr uint32_t kOutputChannelBase = 0x80000000u;

enum class MsgType : uint8_t {
  Hello = 1,
  Configure = 2,
  Weights = 3,
  Infer = 4,
  Tensor = 5,
  Stats = 6,
  Ack = 7,
  Error = 8,
  Shutdown = 9,
};

std::string_view to_string(MsgType t);
bool is_valid_msg_type(uint8_t t);

struct ComMessage {
  MsgType type = MsgType::Hello;
  uint32_t channel = 0;
  uint64_t seq = 0;
  std::vector<uint8_t> payload;

  std::string_view text() const {
    return {reinterpret_cast<const char *>(payload.data()), payload.size()};
  }
  bool operator==(const ComMessage &) const = default;
};

ComMessage make_message(MsgType type, uint32_t channel, uint64_t seq,
                        std::string_view text);

std::vector<uint8_t> encode(const ComMessage &m);
void encode_header(const ComMessage &m, uint8_t out[kHeaderSize]);

struct FrameHeader {
  uint8_t version = 0;
  MsgType type = MsgType::Hello;
  uint32_t channel = 0;
  uint64_t seq = 0;
  uint32_t payload_len = 0;
};

/// Parses and checks a header (magic, version, type, length cap).
/// Throws ProtocolError.
FrameHeader decode_header(std::span<const uint8_t> bytes);

/// Decodes exactly one complete frame. Throws ProtocolError on any defect,
/// including trailing bytes.
ComMessage decode(std::span<const uint8_t> frame);

/// Incremental decoder for a byte stream. Throws ProtocolError on malformed
/// data; the stream is unusable afterwards.
class FrameDecoder {
 public:
  void feed(std::span<const uint8_t> bytes);
  std::optional<ComMessage> next();
  size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::vector<uint8_t> buf_;
  size_t pos_ = 0;
};

// Payload helpers.

/// Ack payload: acknowledged type (u8) + acknowledged seq (u64), then an
/// optional UTF-8 detail string.
std::vector<uint8_t> ack_payload(MsgType acked, uint64_t seq,
                                 std::string_view detail = {});
struct AckInfo {
  MsgType acked;
  uint64_t seq;
  std::string detail;
};
AckInfo parse_ack(std::span<const uint8_t> payload);

/// Tensor payload on an S-link: u16 count, then per entry u16 slot, u32 length
/// and the INT8 bytes.
struct TensorEntry {
  uint16_t slot = 0;
  std::vector<int8_t> data;
  bool operator==(const TensorEntry &) const = default;
};
std::vector<uint8_t> tensor_payload(const std::vector<TensorEntry> &entries);
std::vector<TensorEntry> parse_tensor_payload(std::span<const uint8_t> payload);

} // namespace imce
