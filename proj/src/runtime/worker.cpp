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

#include "imce/runtime/worker.h"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <semaphore>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "imce/errors.h"
#include "imce/mapper/configs.h"
#include "imce/runtime/executor.h"
#include "imce/runtime/stats.h"

namespace imce {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

bool is_di_function(OpKind k) {
  switch (k) {
  case OpKind::Add:
  case OpKind::FusedAddReLU:
  case OpKind::SiLU:
  case OpKind::MaxPool:
  case OpKind::AvgPool:
  case OpKind::Concat:
  case OpKind::Split:
    return true;
  default:
    return false;
  }
}

// Outbound S-thread: a queue drained onto one S-link connection.
struct Sender {
  uint32_t channel = 0;
  std::shared_ptr<Connection> conn;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<ComMessage> queue;
  bool closing = false;
  bool failed = false;
  LinkStats stats;
  std::thread thread;
};

struct Target {
  uint32_t channel = 0;
  bool local = false;
  std::string dst_node;
  std::vector<Route> routes;
  Sender *sender = nullptr;
};

struct Pending {
  std::vector<Codes> slots;
  std::vector<bool> filled;
  size_t missing = 0;
};

// F-thread of one node.
struct FNode {
  explicit FNode(const CompiledNode &n, const NoiseModel &nm) : rt(n, nm) {}

  NodeRuntime rt;
  std::mutex mu;
  std::condition_variable cv;
  std::map<uint64_t, Pending> pending;
  std::set<uint64_t> complete;
  NodeStats stats;
  std::vector<Target> fanout;
  std::vector<OutputBinding> outputs;
  std::thread thread;
};

} // namespace

struct Worker::Impl {
  WorkerOptions opts;
  Listener listener;
  std::atomic<bool> stopping{false};
  std::counting_semaphore<1024> compute;

  std::mutex mu; // guards everything below
  std::vector<std::thread> handlers;
  std::vector<std::shared_ptr<Connection>> conns;
  std::shared_ptr<Connection> control;
  std::optional<json> pending_cfg;
  std::optional<BoardConfig> cfg;
  bool connected = false;

  // Built once at Weights time, read-only afterwards.
  std::map<std::string, std::unique_ptr<FNode>> nodes;
  std::map<size_t, std::vector<InputBinding>> input_bindings;
  std::map<uint32_t, Transition> inbound;
  std::map<uint32_t, std::unique_ptr<Sender>> senders;

  std::mutex link_mu;
  std::map<uint32_t, LinkStats> in_links;
  std::map<uint32_t, uint64_t> last_seq;

  explicit Impl(WorkerOptions o)
      : opts(std::move(o)), listener(opts.listen),
        compute(std::clamp(opts.threads, 1, 1024)) {}

  int board() const { return cfg ? cfg->board_id : -1; }

  void send_error(Connection &c, uint32_t channel, uint64_t seq,
                  const std::string &what) {
    try {
      c.send(make_message(MsgType::Error, channel, seq, what));
    } catch (const std::exception &) {
    }
  }

  void report_error(uint64_t seq, const std::string &what) {
    spdlog::error("board {}: {}", board(), what);
    std::shared_ptr<Connection> c;
    {
      std::lock_guard lk(mu);
      c = control;
    }
    if (c)
      send_error(*c, 0, seq, "board " + std::to_string(board()) + ": " + what);
  }

  // ---- dataflow -----------------------------------------------------------

  void deliver(FNode &n, uint64_t seq, size_t slot, Codes data) {
    std::lock_guard lk(n.mu);
    auto it = n.pending.find(seq);
    if (it == n.pending.end()) {
      Pending p;
      p.slots.resize(n.rt.arity());
      p.filled.assign(n.rt.arity(), false);
      for (size_t s = 0; s < n.rt.arity(); ++s)
        if (n.rt.is_constant(s))
          p.filled[s] = true;
        else
          ++p.missing;
      it = n.pending.emplace(seq, std::move(p)).first;
      n.stats.max_queue_depth =
          std::max<uint64_t>(n.stats.max_queue_depth, n.pending.size());
    }
    Pending &p = it->second;
    if (slot >= p.slots.size() || p.filled[slot]) {
      spdlog::warn("node {}: duplicate or invalid input slot {} for seq {}",
                   n.rt.node().id(), slot, seq);
      return;
    }
    n.stats.bytes_in += data.size();
    p.slots[slot] = std::move(data);
    p.filled[slot] = true;
    if (--p.missing == 0) {
      n.complete.insert(seq);
      n.cv.notify_one();
    }
  }

  void fthread(FNode &n) {
    for (;;) {
      uint64_t seq;
      Pending p;
      {
        std::unique_lock lk(n.mu);
        n.cv.wait(lk, [&] { return stopping || !n.complete.empty(); });
        if (stopping)
          return;
        seq = *n.complete.begin();
        n.complete.erase(n.complete.begin());
        auto it = n.pending.find(seq);
        p = std::move(it->second);
        n.pending.erase(it);
      }
      const auto t0 = Clock::now();
      std::vector<Codes> out;
      try {
        compute.acquire();
        try {
          out = n.rt.execute(p.slots, seq);
        } catch (...) {
          compute.release();
          throw;
        }
        compute.release();
      } catch (const std::exception &e) {
        report_error(seq, "node " + n.rt.node().id() + " failed: " + e.what());
        continue;
      }
      const auto t1 = Clock::now();
      if (opts.pace) {
        auto hold = std::chrono::duration<double, std::micro>(
            n.rt.node().cost_hint_us);
        std::this_thread::sleep_until(
            t0 + std::chrono::duration_cast<Clock::duration>(hold));
      }
      {
        std::lock_guard lk(n.mu);
        ++n.stats.invocations;
        n.stats.kernel_us +=
            std::chrono::duration<double, std::micro>(t1 - t0).count();
        for (const auto &o : out)
          n.stats.bytes_out += o.size();
      }
      forward(n, seq, out);
    }
  }

  void forward(FNode &n, uint64_t seq, const std::vector<Codes> &out) {
    for (const auto &t : n.fanout) {
      if (t.local) {
        FNode &dst = *nodes.at(t.dst_node);
        for (const auto &r : t.routes)
          deliver(dst, seq, r.dst_input, out.at(r.src_output));
        continue;
      }
      std::vector<TensorEntry> entries;
      for (const auto &r : t.routes)
        entries.push_back(
            TensorEntry{static_cast<uint16_t>(r.dst_input), out.at(r.src_output)});
      ComMessage m{MsgType::Tensor, t.channel, seq, tensor_payload(entries)};
      {
        std::lock_guard lk(t.sender->mu);
        t.sender->queue.push_back(std::move(m));
      }
      t.sender->cv.notify_one();
    }
    if (n.outputs.empty())
      return;
    std::shared_ptr<Connection> c;
    {
      std::lock_guard lk(mu);
      c = control;
    }
    for (const auto &b : n.outputs) {
      const Codes &codes = out.at(b.output);
      ComMessage m{MsgType::Tensor, kOutputChannelBase + static_cast<uint32_t>(b.index),
                   seq, std::vector<uint8_t>(codes.begin(), codes.end())};
      try {
        if (c)
          c->send(m);
      } catch (const std::exception &e) {
        spdlog::warn("board {}: cannot deliver output: {}", board(), e.what());
      }
    }
  }

  void sthread(Sender &s) {
    for (;;) {
      ComMessage m;
      {
        std::unique_lock lk(s.mu);
        s.cv.wait(lk, [&] { return s.closing || !s.queue.empty(); });
        if (s.queue.empty())
          return;
        m = std::move(s.queue.front());
        s.queue.pop_front();
      }
      if (s.failed)
        continue;
      try {
        s.conn->send(m);
        std::lock_guard lk(s.mu);
        ++s.stats.messages_sent;
        s.stats.bytes_sent += kHeaderSize + m.payload.size();
      } catch (const std::exception &e) {
        s.failed = true;
        report_error(m.seq, "S-link channel " + std::to_string(s.channel) +
                                " lost: " + e.what());
      }
    }
  }

  // ---- configuration ------------------------------------------------------

  void build(const std::vector<uint8_t> &blob) {
    if (!pending_cfg)
      throw ConfigError("Weights received before Configure(load)");
    BoardConfig c = board_config_from_json(*pending_cfg, blob);
    if (c.accel != opts.role)
      throw ConfigError("role mismatch: worker is " +
                        std::string(to_string(opts.role)) + ", board " +
                        std::to_string(c.board_id) + " is " +
                        std::string(to_string(c.accel)));
    for (const auto &n : c.nodes) {
      if (n.accel != opts.role)
        throw ConfigError("node " + n.id() + " needs an " +
                          std::string(to_string(n.accel)) + " board");
      if (n.accel == AccelClass::Di && !is_di_function(n.kind()))
        throw ConfigError("node " + n.id() + ": unsupported op kind " +
                          std::string(to_string(n.kind())));
      if (n.accel == AccelClass::An && !n.weights2d)
        throw ConfigError("node " + n.id() + " has no weights");
      nodes.emplace(n.id(), std::make_unique<FNode>(n, c.noise));
    }
    for (const auto &b : c.inputs) {
      if (!nodes.count(b.node))
        throw ConfigError("input binding to unknown node " + b.node);
      input_bindings[b.index].push_back(b);
    }
    for (const auto &b : c.outputs) {
      if (!nodes.count(b.node))
        throw ConfigError("output binding from unknown node " + b.node);
      nodes.at(b.node)->outputs.push_back(b);
    }
    for (const auto &t : c.transitions) {
      if (t.dst_board == c.board_id && !nodes.count(t.dst_node))
        throw ConfigError("transition to unknown node " + t.dst_node);
      if (t.src_board == c.board_id) {
        if (!nodes.count(t.src_node))
          throw ConfigError("transition from unknown node " + t.src_node);
        Target tg{t.channel, t.local(), t.dst_node, t.routes, nullptr};
        if (!t.local()) {
          auto s = std::make_unique<Sender>();
          s->channel = t.channel;
          tg.sender = s.get();
          senders.emplace(t.channel, std::move(s));
        }
        nodes.at(t.src_node)->fanout.push_back(std::move(tg));
      } else {
        inbound.emplace(t.channel, t);
      }
    }
    cfg = std::move(c);
    for (auto &[id, n] : nodes) {
      FNode *p = n.get();
      n->thread = std::thread([this, p] { fthread(*p); });
    }
    spdlog::info("board {} configured: {} node(s), {} outbound, {} inbound link(s)",
                 cfg->board_id, nodes.size(), senders.size(), inbound.size());
  }

  size_t connect_links(const json &peers, std::chrono::milliseconds timeout) {
    size_t n = 0;
    for (auto &[ch, s] : senders) {
      const Transition &t = [&]() -> const Transition & {
        for (const auto &x : cfg->transitions)
          if (x.channel == ch)
            return x;
        throw ConfigError("unknown channel");
      }();
      const std::string key = std::to_string(t.dst_board);
      if (!peers.contains(key))
        throw ConfigError("no address for peer board " + key);
      Endpoint ep = parse_endpoint(peers.at(key).get<std::string>());
      auto conn = Connection::connect(ep, timeout);
      json hello = {{"kind", "slink"},
                    {"version", kProtocolVersion},
                    {"board", cfg->board_id},
                    {"channel", ch}};
      conn->send(make_message(MsgType::Hello, ch, 0, hello.dump()));
      auto reply = conn->receive(timeout);
      if (!reply || reply->type != MsgType::Ack)
        throw ConfigError("peer board " + key + " refused S-link channel " +
                          std::to_string(ch) +
                          (reply && reply->type == MsgType::Error
                               ? ": " + std::string(reply->text())
                               : std::string()));
      s->conn = std::shared_ptr<Connection>(std::move(conn));
      {
        std::lock_guard lk(mu);
        conns.push_back(s->conn);
      }
      Sender *sp = s.get();
      s->thread = std::thread([this, sp] { sthread(*sp); });
      ++n;
    }
    return n;
  }

  // ---- connection handlers ------------------------------------------------

  void handle(std::shared_ptr<Connection> conn) {
    try {
      auto first = conn->receive(std::chrono::seconds(30));
      if (!first)
        return;
      if (first->type != MsgType::Hello) {
        send_error(*conn, first->channel, first->seq,
                   "expected Hello, got " + std::string(to_string(first->type)));
        return;
      }
      json hello = json::parse(first->text(), nullptr, false);
      if (hello.is_discarded() || !hello.is_object() || !hello.contains("kind")) {
        send_error(*conn, first->channel, first->seq, "malformed Hello payload");
        return;
      }
      const std::string kind = hello.value("kind", std::string());
      if (kind == "control") {
        {
          std::lock_guard lk(mu);
          control = conn;
        }
        json ack = {{"role", to_string(opts.role)}, {"board", board()}};
        conn->send(ComMessage{MsgType::Ack, first->channel, first->seq,
                              ack_payload(MsgType::Hello, first->seq, ack.dump())});
        control_loop(*conn);
      } else if (kind == "slink") {
        slink_loop(*conn, *first, hello);
      } else {
        send_error(*conn, first->channel, first->seq,
                   "unknown connection kind '" + kind + "'");
      }
    } catch (const ProtocolError &e) {
      send_error(*conn, 0, 0, std::string("protocol error: ") + e.what());
    } catch (const std::exception &e) {
      spdlog::debug("connection handler ended: {}", e.what());
    }
    conn->shutdown();
  }

  void ack(Connection &c, const ComMessage &m, const std::string &detail = {}) {
    c.send(ComMessage{MsgType::Ack, m.channel, m.seq,
                      ack_payload(m.type, m.seq, detail)});
  }

  void control_loop(Connection &c) {
    while (!stopping) {
      auto m = c.receive();
      if (!m)
        return;
      try {
        switch (m->type) {
        case MsgType::Hello:
          ack(c, *m);
          break;
        case MsgType::Configure: {
          json j = json::parse(m->text(), nullptr, false);
          if (j.is_discarded() || !j.is_object())
            throw ConfigError("Configure payload is not a JSON object");
          const std::string phase = j.value("phase", std::string());
          std::unique_lock lk(mu);
          if (phase == "load") {
            if (cfg)
              throw ConfigError("board already configured");
            if (!j.contains("config") || !j.at("config").is_object())
              throw ConfigError("Configure(load) lacks a config object");
            pending_cfg = j.at("config");
            ack(c, *m);
          } else if (phase == "connect") {
            if (!cfg)
              throw ConfigError("Configure(connect) before Weights");
            if (connected)
              throw ConfigError("S-links already connected");
            connected = true;
            // Peers may be connecting to us meanwhile; do not hold the lock.
            lk.unlock();
            const auto timeout =
                std::chrono::milliseconds(j.value("timeout_ms", 10000));
            size_t n = connect_links(j.value("peers", json::object()), timeout);
            ack(c, *m, json{{"links", n}}.dump());
          } else {
            throw ConfigError("unknown Configure phase '" + phase + "'");
          }
          break;
        }
        case MsgType::Weights: {
          std::lock_guard lk(mu);
          if (cfg)
            throw ConfigError("board already configured");
          try {
            build(m->payload);
          } catch (...) {
            nodes.clear();
            input_bindings.clear();
            inbound.clear();
            senders.clear();
            throw;
          }
          ack(c, *m, json{{"nodes", nodes.size()}}.dump());
          break;
        }
        case MsgType::Infer:
          infer(c, *m);
          break;
        case MsgType::Stats:
          c.send(make_message(MsgType::Stats, m->channel, m->seq,
                              board_stats_to_json(stats()).dump()));
          break;
        case MsgType::Shutdown:
          ack(c, *m);
          spdlog::info("board {}: shutdown requested", board());
          stop();
          return;
        default:
          throw ProtocolError(std::string(to_string(m->type)) +
                              " is not valid on a control connection");
        }
      } catch (const ProtocolError &e) {
        send_error(c, m->channel, m->seq, e.what());
      } catch (const Error &e) {
        send_error(c, m->channel, m->seq, e.what());
      } catch (const std::exception &e) {
        send_error(c, m->channel, m->seq, std::string("internal: ") + e.what());
      }
    }
  }

  void infer(Connection &c, const ComMessage &m) {
    if (!cfg)
      throw ConfigError("Infer before configuration");
    auto it = input_bindings.find(m.channel);
    if (it == input_bindings.end())
      throw ConfigError("board " + std::to_string(board()) +
                        " has no consumer of graph input " +
                        std::to_string(m.channel));
    for (const auto &b : it->second) {
      const size_t expected = nodes.at(b.node)->rt.input_bytes(b.slot);
      if (m.payload.size() != expected)
        throw ShapeError("input " + std::to_string(m.channel) + " ('" +
                         b.tensor + "'): expected " + std::to_string(expected) +
                         " bytes, got " + std::to_string(m.payload.size()));
    }
    (void)c;
    for (const auto &b : it->second)
      deliver(*nodes.at(b.node), m.seq, b.slot,
              Codes(m.payload.begin(), m.payload.end()));
  }

  void slink_loop(Connection &c, const ComMessage &hello, const json &h) {
    uint32_t ch = h.value("channel", hello.channel);
    const Transition *t = nullptr;
    {
      std::lock_guard lk(mu);
      auto it = inbound.find(ch);
      if (cfg && it != inbound.end())
        t = &it->second;
    }
    if (!t) {
      send_error(c, ch, hello.seq,
                 "channel " + std::to_string(ch) + " is not an inbound S-link");
      return;
    }
    c.send(ComMessage{MsgType::Ack, ch, hello.seq,
                      ack_payload(MsgType::Hello, hello.seq)});
    FNode &dst = *nodes.at(t->dst_node);
    while (!stopping) {
      auto m = c.receive();
      if (!m)
        return;
      if (m->type != MsgType::Tensor || m->channel != ch) {
        send_error(c, m->channel, m->seq, "S-link carries Tensor frames only");
        return;
      }
      auto entries = parse_tensor_payload(m->payload);
      {
        std::lock_guard lk(link_mu);
        auto [ls, fresh] = last_seq.emplace(ch, m->seq);
        if (!fresh && m->seq <= ls->second) {
          send_error(c, ch, m->seq, "non-increasing seq on channel " +
                                        std::to_string(ch));
          return;
        }
        ls->second = m->seq;
        LinkStats &st = in_links[ch];
        ++st.messages_received;
        st.bytes_received += kHeaderSize + m->payload.size();
      }
      for (auto &e : entries) {
        if (e.slot >= dst.rt.arity() || dst.rt.is_constant(e.slot) ||
            e.data.size() != dst.rt.input_bytes(e.slot)) {
          send_error(c, ch, m->seq, "tensor entry does not fit node " +
                                        t->dst_node + " slot " +
                                        std::to_string(e.slot));
          return;
        }
        deliver(dst, m->seq, e.slot, std::move(e.data));
      }
    }
  }

  BoardStats stats() {
    BoardStats b;
    b.board = board();
    for (auto &[id, n] : nodes) {
      std::lock_guard lk(n->mu);
      b.nodes[id] = n->stats;
    }
    for (auto &[ch, s] : senders) {
      std::lock_guard lk(s->mu);
      b.links[ch] = s->stats;
    }
    std::lock_guard lk(link_mu);
    for (const auto &[ch, l] : in_links) {
      b.links[ch].messages_received += l.messages_received;
      b.links[ch].bytes_received += l.bytes_received;
    }
    for (const auto &[ch, t] : inbound)
      b.links.emplace(ch, LinkStats{});
    return b;
  }

  void stop() {
    if (stopping.exchange(true))
      return;
    listener.close();
    std::vector<std::shared_ptr<Connection>> cs;
    {
      std::unique_lock lk(mu, std::try_to_lock);
      cs = conns;
    }
    for (auto &c : cs)
      c->shutdown();
  }

  void serve() {
    while (!stopping) {
      auto c = listener.accept();
      if (!c)
        break;
      std::shared_ptr<Connection> sc(std::move(c));
      std::lock_guard lk(mu);
      if (stopping) {
        sc->shutdown();
        break;
      }
      conns.push_back(sc);
      handlers.emplace_back([this, sc] { handle(sc); });
    }
    stop();
    {
      std::lock_guard lk(mu);
      for (auto &c : conns)
        c->shutdown();
    }
    for (auto &[id, n] : nodes) {
      {
        std::lock_guard lk(n->mu);
      }
      n->cv.notify_all();
    }
    for (auto &[ch, s] : senders) {
      {
        std::lock_guard lk(s->mu);
        s->closing = true;
      }
      s->cv.notify_all();
    }
    std::vector<std::thread> hs;
    {
      std::lock_guard lk(mu);
      hs.swap(handlers);
    }
    for (auto &h : hs)
      if (h.joinable())
        h.join();
    for (auto &[id, n] : nodes)
      if (n->thread.joinable())
        n->thread.join();
    for (auto &[ch, s] : senders)
      if (s->thread.joinable())
        s->thread.join();
  }
};

Worker::Worker(WorkerOptions opts) : impl_(std::make_unique<Impl>(std::move(opts))) {}

Worker::~Worker() {
  impl_->stop();
}

uint16_t Worker::port() const { return impl_->listener.port(); }

void Worker::serve() { impl_->serve(); }

void Worker::stop() { impl_->stop(); }

} // namespace imce
