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

#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "imce/errors.h"
#include "imce/runtime/protocol.h"
#include "oracles.h"

namespace imce {
namespace {

TEST(Protocol, GoldenFrame) {
  ComMessage m{MsgType::Tensor, 0x01020304u, 0x1122334455667788ull, {0xAA, 0xBB, 0xCC}};
  const std::vector<uint8_t> want = {
      'I',  'M',  'C',  'E',                          // magic
      0x01,                                           // version
      0x05,                                           // type
      0x04, 0x03, 0x02, 0x01,                         // channel
      0x88, 0x77, 0x66, 0x55, 0x44, 0x33, 0x22, 0x11, // seq
      0x03, 0x00, 0x00, 0x00,                         // payload length
      0xAA, 0xBB, 0xCC};
  EXPECT_EQ(encode(m), want);
  EXPECT_EQ(decode(want), m);
}

TEST(Protocol, EmptyPayloadIsHeaderOnly) {
  auto f = encode(make_message(MsgType::Shutdown, 0, 7, ""));
  EXPECT_EQ(f.size(), kHeaderSize);
  auto m = decode(f);
  EXPECT_EQ(m.type, MsgType::Shutdown);
  EXPECT_EQ(m.seq, 7u);
  EXPECT_TRUE(m.payload.empty());
}

TEST(Protocol, RejectsDefects) {
  auto good = encode(make_message(MsgType::Hello, 1, 2, "{}"));
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(decode(bad), ProtocolError);
  bad = good;
  bad[4] = 2; // version
  EXPECT_THROW(decode(bad), ProtocolError);
  bad = good;
  bad[5] = 0; // type
  EXPECT_THROW(decode(bad), ProtocolError);
  bad = good;
  bad[5] = 10;
  EXPECT_THROW(decode(bad), ProtocolError);
  bad = good;
  bad.pop_back(); // truncated payload
  EXPECT_THROW(decode(bad), ProtocolError);
  bad = good;
  bad.push_back(0); // trailing byte
  EXPECT_THROW(decode(bad), ProtocolError);
  EXPECT_THROW(decode(std::span<const uint8_t>(good.data(), 10)), ProtocolError);
  bad = good;
  const uint32_t huge = kMaxPayload + 1;
  std::memcpy(bad.data() + 18, &huge, 4);
  EXPECT_THROW(decode_header(bad), ProtocolError);
}

TEST(Protocol, MessageTypes) {
  for (int t = 0; t < 256; ++t)
    EXPECT_EQ(is_valid_msg_type(static_cast<uint8_t>(t)), t >= 1 && t <= 9) << t;
  EXPECT_EQ(to_string(MsgType::Infer), "Infer");
}

TEST(Protocol, RandomMessagesRoundTrip) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    ComMessage m;
    m.type = static_cast<MsgType>(oracle::rand_int(rng, 1, 9));
    m.channel = static_cast<uint32_t>(rng());
    m.seq = rng();
    m.payload.resize(static_cast<size_t>(oracle::rand_int(rng, 0, 300)));
    for (auto &b : m.payload)
      b = static_cast<uint8_t>(rng());
    EXPECT_EQ(decode(encode(m)), m);
  }
}

TEST(Protocol, FuzzedBytesNeverCrash) {
  std::mt19937_64 rng(2);
  const auto seed_frame = encode(make_message(MsgType::Tensor, 3, 4, "payload"));
  int accepted = 0;
  for (int i = 0; i < 20000; ++i) {
    std::vector<uint8_t> f;
    if (i % 2) {
      f.resize(static_cast<size_t>(oracle::rand_int(rng, 0, 64)));
      for (auto &b : f)
        b = static_cast<uint8_t>(rng());
    } else {
      f = seed_frame;
      const int flips = static_cast<int>(oracle::rand_int(rng, 1, 4));
      for (int k = 0; k < flips; ++k)
        f[static_cast<size_t>(oracle::rand_int(rng, 0, f.size() - 1))] ^=
            static_cast<uint8_t>(1u << oracle::rand_int(rng, 0, 7));
    }
    try {
      auto m = decode(f);
      ++accepted;
      EXPECT_EQ(encode(m), f);
    } catch (const ProtocolError &) {
    }
  }
  EXPECT_GT(accepted, 0); // flips in channel/seq/payload stay decodable
}

TEST(FrameDecoder, ByteByByteStream) {
  std::vector<ComMessage> msgs;
  std::vector<uint8_t> stream;
  for (uint64_t s = 0; s < 20; ++s) {
    msgs.push_back(make_message(MsgType::Tensor, static_cast<uint32_t>(s), s,
                                std::string(s * 3, 'x')));
    auto f = encode(msgs.back());
    stream.insert(stream.end(), f.begin(), f.end());
  }
  std::mt19937_64 rng(3);
  FrameDecoder d;
  std::vector<ComMessage> got;
  size_t pos = 0;
  while (pos < stream.size()) {
    const size_t n = std::min<size_t>(stream.size() - pos,
                                      static_cast<size_t>(oracle::rand_int(rng, 1, 40)));
    d.feed(std::span<const uint8_t>(stream.data() + pos, n));
    pos += n;
    while (auto m = d.next())
      got.push_back(*m);
  }
  EXPECT_EQ(got, msgs);
  EXPECT_EQ(d.buffered(), 0u);
}

TEST(FrameDecoder, BadMagicMidStreamThrows) {
  FrameDecoder d;
  auto f = encode(make_message(MsgType::Ack, 0, 1, ""));
  d.feed(f);
  f[1] = 'Z';
  d.feed(f);
  EXPECT_TRUE(d.next().has_value());
  EXPECT_THROW(d.next(), ProtocolError);
}

TEST(Payloads, AckRoundTrip) {
  auto p = ack_payload(MsgType::Weights, 42, "ok");
  auto a = parse_ack(p);
  EXPECT_EQ(a.acked, MsgType::Weights);
  EXPECT_EQ(a.seq, 42u);
  EXPECT_EQ(a.detail, "ok");
  EXPECT_THROW(parse_ack(std::vector<uint8_t>{1, 2}), ProtocolError);
}

TEST(Payloads, TensorEntriesRoundTripAndOverheadIsEightBytes) {
  std::vector<TensorEntry> e = {{0, {1, -2, 3}}, {2, {}}, {1, std::vector<int8_t>(1000, -7)}};
  auto p = tensor_payload(e);
  EXPECT_EQ(parse_tensor_payload(p), e);
  auto one = tensor_payload({{0, std::vector<int8_t>(64)}});
  EXPECT_EQ(one.size(), 64u + 8u);
  auto cut = p;
  cut.pop_back();
  EXPECT_THROW(parse_tensor_payload(cut), ProtocolError);
  cut = p;
  cut.push_back(0);
  EXPECT_THROW(parse_tensor_payload(cut), ProtocolError);
}

} // namespace
} // namespace imce
