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

#include "imce/runtime/protocol.h"

#include <cstring>

#include "imce/errors.h"

namespace imce {

namespace {

template <typename T> void put(uint8_t *p, T v) {
  for (size_t i = 0; i < sizeof(T); ++i)
    p[i] = static_cast<uint8_t>(static_cast<uint64_t>(v) >> (8 * i));
}

template <typename T> T get(const uint8_t *p) {
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

} // namespace

std::string_view to_string(MsgType t) {
  switch (t) {
  case MsgType::Hello:
    return "Hello";
  case MsgType::Configure:
    return "Configure";
  case MsgType::Weights:
    return "Weights";
  case MsgType::Infer:
    return "Infer";
  case MsgType::Tensor:
    return "Tensor";
  case MsgType::Stats:
    return "Stats";
  case MsgType::Ack:
    return "Ack";
  case MsgType::Error:
    return "Error";
  case MsgType::Shutdown:
    return "Shutdown";
  }
  return "?";
}

bool is_valid_msg_type(uint8_t t) { return t >= 1 && t <= 9; }

ComMessage make_message(MsgType type, uint32_t channel, uint64_t seq,
                        std::string_view text) {
  return ComMessage{type, channel, seq,
                    std::vector<uint8_t>(text.begin(), text.end())};
}

void encode_header(const ComMessage &m, uint8_t out[kHeaderSize]) {
  std::memcpy(out, "IMCE", 4);
  out[4] = kProtocolVersion;
  out[5] = static_cast<uint8_t>(m.type);
  put<uint32_t>(out + 6, m.channel);
  put<uint64_t>(out + 10, m.seq);
  put<uint32_t>(out + 18, static_cast<uint32_t>(m.payload.size()));
}

std::vector<uint8_t> encode(const ComMessage &m) {
  if (m.payload.size() > kMaxPayload)
    throw ProtocolError("payload of " + std::to_string(m.payload.size()) +
                        " bytes exceeds the frame limit");
  std::vector<uint8_t> out(kHeaderSize + m.payload.size());
  encode_header(m, out.data());
  std::copy(m.payload.begin(), m.payload.end(), out.begin() + kHeaderSize);
  return out;
}

FrameHeader decode_header(std::span<const uint8_t> b) {
  if (b.size() < kHeaderSize)
    throw ProtocolError("truncated header");
  if (std::memcmp(b.data(), "IMCE", 4) != 0)
    throw ProtocolError("bad magic");
  FrameHeader h;
  h.version = b[4];
  if (h.version != kProtocolVersion)
    throw ProtocolError("unsupported protocol version " +
                        std::to_string(h.version));
  if (!is_valid_msg_type(b[5]))
    throw ProtocolError("unknown message type " + std::to_string(b[5]));
  h.type = static_cast<MsgType>(b[5]);
  h.channel = get<uint32_t>(b.data() + 6);
  h.seq = get<uint64_t>(b.data() + 10);
  h.payload_len = get<uint32_t>(b.data() + 18);
  if (h.payload_len > kMaxPayload)
    throw ProtocolError("payload length " + std::to_string(h.payload_len) +
                        " exceeds the frame limit");
  return h;
}

ComMessage decode(std::span<const uint8_t> frame) {
  FrameHeader h = decode_header(frame);
  if (frame.size() != kHeaderSize + h.payload_len)
    throw ProtocolError("frame length " + std::to_string(frame.size()) +
                        " does not match payload_len " +
                        std::to_string(h.payload_len));
  return ComMessage{h.type, h.channel, h.seq,
                    std::vector<uint8_t>(frame.begin() + kHeaderSize, frame.end())};
}

void FrameDecoder::feed(std::span<const uint8_t> bytes) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<ComMessage> FrameDecoder::next() {
  const size_t avail = buf_.size() - pos_;
  if (avail < kHeaderSize)
    return std::nullopt;
  FrameHeader h = decode_header({buf_.data() + pos_, kHeaderSize});
  if (avail < kHeaderSize + h.payload_len)
    return std::nullopt;
  const uint8_t *p = buf_.data() + pos_ + kHeaderSize;
  ComMessage m{h.type, h.channel, h.seq, std::vector<uint8_t>(p, p + h.payload_len)};
  pos_ += kHeaderSize + h.payload_len;
  if (pos_ > (1u << 20) && pos_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  return m;
}

std::vector<uint8_t> ack_payload(MsgType acked, uint64_t seq,
                                 std::string_view detail) {
  std::vector<uint8_t> p(9 + detail.size());
  p[0] = static_cast<uint8_t>(acked);
  put<uint64_t>(p.data() + 1, seq);
  std::copy(detail.begin(), detail.end(), p.begin() + 9);
  return p;
}

AckInfo parse_ack(std::span<const uint8_t> p) {
  if (p.size() < 9 || !is_valid_msg_type(p[0]))
    throw ProtocolError("malformed Ack payload");
  return AckInfo{static_cast<MsgType>(p[0]), get<uint64_t>(p.data() + 1),
                 std::string(p.begin() + 9, p.end())};
}

std::vector<uint8_t> tensor_payload(const std::vector<TensorEntry> &entries) {
  if (entries.size() > 0xFFFF)
    throw ProtocolError("too many tensor entries");
  size_t n = 2;
  for (const auto &e : entries)
    n += 6 + e.data.size();
  std::vector<uint8_t> p(n);
  put<uint16_t>(p.data(), static_cast<uint16_t>(entries.size()));
  size_t off = 2;
  for (const auto &e : entries) {
    put<uint16_t>(p.data() + off, e.slot);
    put<uint32_t>(p.data() + off + 2, static_cast<uint32_t>(e.data.size()));
    std::memcpy(p.data() + off + 6, e.data.data(), e.data.size());
    off += 6 + e.data.size();
  }
  return p;
}

std::vector<TensorEntry> parse_tensor_payload(std::span<const uint8_t> p) {
  if (p.size() < 2)
    throw ProtocolError("tensor payload shorter than its entry count");
  const uint16_t count = get<uint16_t>(p.data());
  std::vector<TensorEntry> out;
  size_t off = 2;
  for (uint16_t i = 0; i < count; ++i) {
    if (p.size() - off < 6)
      throw ProtocolError("truncated tensor entry header");
    TensorEntry e;
    e.slot = get<uint16_t>(p.data() + off);
    const uint32_t len = get<uint32_t>(p.data() + off + 2);
    off += 6;
    if (p.size() - off < len)
      throw ProtocolError("tensor entry overruns the payload");
    const auto *d = reinterpret_cast<const int8_t *>(p.data() + off);
    e.data.assign(d, d + len);
    off += len;
    out.push_back(std::move(e));
  }
  if (off != p.size())
    throw ProtocolError("trailing bytes after tensor entries");
  return out;
}

} // namespace imce
