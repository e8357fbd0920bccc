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

#include "imce/runtime/cluster.h"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <queue>
#include <thread>

#include <spdlog/spdlog.h>

#include "imce/errors.h"

namespace imce {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {
// Control requests use their own seq range so that worker errors about an
// inference (seq < kControlSeqBase) are never mistaken for replies.
constexpr uint64_t kControlSeqBase = uint64_t{1} << 62;
} // namespace

SimulatedMetrics simulate(const PlanBundle &b) {
  std::map<std::string, double> cost;
  std::map<std::string, int> board_of;
  std::map<int, double> board_load;
  for (const auto &[id, c] : b.boards)
    for (const auto &n : c.nodes) {
      cost[n.id()] = n.cost_hint_us;
      board_of[n.id()] = id;
      board_load[id] += n.cost_hint_us;
    }
  std::map<std::string, std::vector<std::string>> succ;
  std::map<std::string, int> indeg;
  for (const auto &[id, c] : cost)
    indeg[id] = 0;
  for (const auto &t : b.plan.transitions) {
    succ[t.src_node].push_back(t.dst_node);
    ++indeg[t.dst_node];
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto &[id, d] : indeg)
    if (d == 0)
      ready.push(id);
  std::map<std::string, double> start;
  SimulatedMetrics m;
  while (!ready.empty()) {
    std::string id = ready.top();
    ready.pop();
    const double s = start[id];
    const double e = s + cost[id];
    m.schedule.push_back(NodeTiming{id, board_of[id], s, e});
    m.latency_us = std::max(m.latency_us, e);
    for (const auto &d : succ[id]) {
      start[d] = std::max(start[d], e);
      if (--indeg[d] == 0)
        ready.push(d);
    }
  }
  double bottleneck = 0.0;
  for (const auto &[id, l] : board_load)
    bottleneck = std::max(bottleneck, l);
  m.rate_per_s = bottleneck > 0.0 ? 1e6 / bottleneck : 0.0;
  return m;
}

struct ClusterHandle::Board {
  int id = 0;
  std::shared_ptr<Connection> conn;
  std::thread reader;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<ComMessage> inbox;
  bool closed = false;
  uint64_t next_ctrl = kControlSeqBase;
};

struct ClusterHandle::State {
  struct Partial {
    std::vector<Codes> outputs;
    std::vector<bool> got;
    size_t missing = 0;
    Clock::time_point sent;
    Clock::time_point done;
  };
  std::mutex mu;
  std::condition_variable cv;
  std::map<uint64_t, Partial> partial;
  bool running = false;
  std::optional<DistributedError> failure;

  void fail(int board, uint64_t seq, const std::string &what) {
    std::lock_guard lk(mu);
    if (!failure)
      failure.emplace(board, seq, what);
    cv.notify_all();
  }
};

ClusterHandle::ClusterHandle() : state_(std::make_unique<State>()) {}

ClusterHandle::~ClusterHandle() {
  try {
    shutdown();
  } catch (const std::exception &e) {
    spdlog::warn("cluster shutdown: {}", e.what());
  }
}

namespace {

ComMessage await_reply(std::deque<ComMessage> &inbox, std::mutex &mu,
                       std::condition_variable &cv, const bool &closed,
                       uint64_t seq, std::chrono::milliseconds timeout,
                       int board) {
  std::unique_lock lk(mu);
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    for (auto it = inbox.begin(); it != inbox.end(); ++it)
      if (it->seq == seq) {
        ComMessage m = std::move(*it);
        inbox.erase(it);
        return m;
      }
    if (closed)
      throw IOError("board " + std::to_string(board) + " closed the connection");
    if (cv.wait_until(lk, deadline) == std::cv_status::timeout)
      throw TimeoutError("board " + std::to_string(board) +
                         " did not reply within " +
                         std::to_string(timeout.count()) + " ms");
  }
}

} // namespace

std::unique_ptr<ClusterHandle>
ClusterHandle::configure(const PlanBundle &bundle,
                         const std::map<int, Endpoint> &addresses,
                         const ClusterOptions &opts) {
  std::unique_ptr<ClusterHandle> h(new ClusterHandle());
  h->bundle_ = bundle;
  h->opts_ = opts;
  h->sim_ = simulate(bundle);

  auto request = [&](Board &b, MsgType type, std::vector<uint8_t> payload,
                     const std::string &what) -> ComMessage {
    const uint64_t seq = b.next_ctrl++;
    b.conn->send(ComMessage{type, 0, seq, std::move(payload)});
    ComMessage r = await_reply(b.inbox, b.mu, b.cv, b.closed, seq, opts.timeout, b.id);
    if (r.type == MsgType::Error)
      throw ConfigError("board " + std::to_string(b.id) + " rejected " + what +
                        ": " + std::string(r.text()));
    if (r.type != MsgType::Ack)
      throw ProtocolError("board " + std::to_string(b.id) + " answered " + what +
                          " with " + std::string(to_string(r.type)));
    return r;
  };

  try {
    // Control connections.
    std::vector<std::string> unreachable;
    for (const auto &[id, cfg] : bundle.boards) {
      auto a = addresses.find(id);
      if (a == addresses.end()) {
        unreachable.push_back(std::to_string(id) + " (no address)");
        continue;
      }
      try {
        auto b = std::make_unique<Board>();
        b->id = id;
        b->conn = std::shared_ptr<Connection>(Connection::connect(a->second, opts.timeout));
        Board *bp = b.get();
        State *st = h->state_.get();
        const size_t n_outputs = bundle.outputs.size();
        b->reader = std::thread([bp, st, n_outputs] {
          for (;;) {
            std::optional<ComMessage> m;
            try {
              m = bp->conn->receive();
            } catch (const std::exception &e) {
              spdlog::warn("board {}: {}", bp->id, e.what());
            }
            if (!m) {
              {
                std::lock_guard lk(bp->mu);
                bp->closed = true;
              }
              bp->cv.notify_all();
              std::unique_lock lk(st->mu);
              if (st->running && !st->partial.empty()) {
                const uint64_t pending = st->partial.begin()->first;
                lk.unlock();
                st->fail(bp->id, pending,
                         "board " + std::to_string(bp->id) +
                             " lost its control connection");
              }
              return;
            }
            if (m->type == MsgType::Tensor && m->channel >= kOutputChannelBase) {
              const size_t idx = m->channel - kOutputChannelBase;
              std::lock_guard lk(st->mu);
              auto it = st->partial.find(m->seq);
              if (it == st->partial.end() || idx >= n_outputs ||
                  it->second.got[idx]) {
                spdlog::warn("board {}: unexpected output {} for seq {}", bp->id,
                             idx, m->seq);
                continue;
              }
              auto &p = it->second;
              p.outputs[idx].assign(m->payload.begin(), m->payload.end());
              p.got[idx] = true;
              if (--p.missing == 0) {
                p.done = Clock::now();
                st->cv.notify_all();
              }
              continue;
            }
            if (m->type == MsgType::Error && m->seq < kControlSeqBase) {
              st->fail(bp->id, m->seq, std::string(m->text()));
              continue;
            }
            {
              std::lock_guard lk(bp->mu);
              bp->inbox.push_back(std::move(*m));
            }
            bp->cv.notify_all();
          }
        });
        h->boards_.emplace(id, std::move(b));
      } catch (const std::exception &e) {
        unreachable.push_back(std::to_string(id) + " (" + a->second.str() +
                              ": " + e.what() + ")");
      }
    }
    if (!unreachable.empty()) {
      std::string list;
      for (const auto &u : unreachable)
        list += (list.empty() ? "" : ", ") + u;
      throw TimeoutError("unreachable boards: " + list);
    }

    // Hello + configuration + weights.
    for (const auto &[id, cfg] : bundle.boards) {
      Board &b = *h->boards_.at(id);
      const std::string hello =
          json{{"kind", "control"}, {"version", kProtocolVersion}}.dump();
      ComMessage r = request(b, MsgType::Hello,
                             std::vector<uint8_t>(hello.begin(), hello.end()), "Hello");
      json info = json::parse(parse_ack(r.payload).detail, nullptr, false);
      if (!info.is_discarded() && info.is_object() &&
          info.value("role", std::string()) != to_string(cfg.accel))
        throw ConfigError("board " + std::to_string(id) + " runs role " +
                          info.value("role", std::string("?")) + ", plan needs " +
                          std::string(to_string(cfg.accel)));
      std::vector<uint8_t> blob;
      json load = {{"phase", "load"}, {"config", board_config_to_json(cfg, blob)}};
      const std::string text = load.dump();
      request(b, MsgType::Configure, std::vector<uint8_t>(text.begin(), text.end()),
              "Configure(load)");
      request(b, MsgType::Weights, std::move(blob), "Weights");
    }

    // S-links.
    json peers = json::object();
    for (const auto &[id, ep] : addresses)
      peers[std::to_string(id)] = ep.str();
    for (const auto &[id, cfg] : bundle.boards) {
      json c = {{"phase", "connect"},
                {"peers", peers},
                {"timeout_ms", opts.timeout.count()}};
      const std::string text = c.dump();
      ComMessage r = request(*h->boards_.at(id), MsgType::Configure,
                             std::vector<uint8_t>(text.begin(), text.end()),
                             "Configure(connect)");
      json d = json::parse(parse_ack(r.payload).detail, nullptr, false);
      if (!d.is_discarded() && d.is_object())
        h->links_ += d.value("links", size_t{0});
    }
    if (h->links_ != bundle.plan.inter_board_links())
      throw ConnectivityError("established " + std::to_string(h->links_) +
                              " S-links, topology lists " +
                              std::to_string(bundle.plan.inter_board_links()));
  } catch (...) {
    // Roll back: stop every board we reached.
    h->shutdown();
    throw;
  }
  spdlog::info("cluster ready: {} board(s), {} S-link(s)", h->boards_.size(),
               h->links_);
  return h;
}

std::vector<InferenceResult>
ClusterHandle::run(const std::vector<std::vector<Codes>> &inputs, int window,
                   const ResultCallback &on_result) {
  if (shut_down_)
    throw DistributedError(-1, 0, "cluster is shut down");
  if (window < 1)
    throw ConfigError("window must be >= 1");
  // Graph input index -> boards consuming it.
  std::map<size_t, std::vector<int>> targets;
  for (const auto &[id, cfg] : bundle_.boards)
    for (const auto &b : cfg.inputs) {
      auto &v = targets[b.index];
      if (std::find(v.begin(), v.end(), id) == v.end())
        v.push_back(id);
    }
  const size_t n_out = bundle_.outputs.size();
  State &st = *state_;
  {
    std::lock_guard lk(st.mu);
    if (st.failure)
      throw *st.failure;
    st.running = true;
  }

  std::vector<InferenceResult> results;
  const uint64_t first = next_seq_;
  const size_t n = inputs.size();
  size_t submitted = 0;
  auto submit = [&](size_t i) {
    const auto &in = inputs[i];
    if (in.size() != bundle_.inputs.size())
      throw ShapeError("request " + std::to_string(i) + " has " +
                       std::to_string(in.size()) + " inputs, model expects " +
                       std::to_string(bundle_.inputs.size()));
    const uint64_t seq = first + i;
    {
      std::lock_guard lk(st.mu);
      auto &p = st.partial[seq];
      p.outputs.resize(n_out);
      p.got.assign(n_out, false);
      p.missing = n_out;
      p.sent = Clock::now();
    }
    for (size_t k = 0; k < in.size(); ++k)
      for (int b : targets[k]) {
        try {
          boards_.at(b)->conn->send(ComMessage{
              MsgType::Infer, static_cast<uint32_t>(k), seq,
              std::vector<uint8_t>(in[k].begin(), in[k].end())});
        } catch (const std::exception &e) {
          st.fail(b, seq, "board " + std::to_string(b) + ": " + e.what());
        }
      }
  };

  try {
    for (size_t emitted = 0; emitted < n; ++emitted) {
      while (submitted < n && submitted < emitted + static_cast<size_t>(window))
        submit(submitted++);
      const uint64_t seq = first + emitted;
      State::Partial done;
      {
        std::unique_lock lk(st.mu);
        const bool ok = st.cv.wait_for(lk, opts_.stall_timeout, [&] {
          return st.failure || st.partial.at(seq).missing == 0;
        });
        if (st.failure)
          throw *st.failure;
        if (!ok)
          throw DistributedError(-1, seq,
                                 "no result for seq " + std::to_string(seq) +
                                     " within the stall timeout");
        done = std::move(st.partial.at(seq));
        st.partial.erase(seq);
      }
      InferenceResult r;
      r.seq = seq;
      r.outputs = std::move(done.outputs);
      r.wall_latency_us =
          std::chrono::duration<double, std::micro>(done.done - done.sent).count();
      r.simulated_latency_us = sim_.latency_us;
      r.timing = sim_.schedule;
      if (on_result)
        on_result(r);
      results.push_back(std::move(r));
    }
  } catch (...) {
    next_seq_ = first + n;
    std::lock_guard lk(st.mu);
    st.running = false;
    throw;
  }
  next_seq_ = first + n;
  std::lock_guard lk(st.mu);
  st.running = false;
  st.partial.clear();
  return results;
}

StatsReport ClusterHandle::collect_stats() {
  StatsSink sink;
  for (auto &[id, b] : boards_) {
    try {
      const uint64_t seq = b->next_ctrl++;
      b->conn->send(ComMessage{MsgType::Stats, 0, seq, {}});
      ComMessage r =
          await_reply(b->inbox, b->mu, b->cv, b->closed, seq, opts_.timeout, id);
      if (r.type != MsgType::Stats)
        throw ProtocolError("unexpected reply " + std::string(to_string(r.type)));
      BoardStats bs = board_stats_from_json(json::parse(r.text()));
      bs.board = id;
      sink.store(bs);
    } catch (const std::exception &e) {
      spdlog::warn("stats from board {} unavailable: {}", id, e.what());
      sink.mark_missing(id);
    }
  }
  return sink.report();
}

void ClusterHandle::shutdown() {
  if (shut_down_)
    return;
  shut_down_ = true;
  for (auto &[id, b] : boards_) {
    try {
      const uint64_t seq = b->next_ctrl++;
      b->conn->send(ComMessage{MsgType::Shutdown, 0, seq, {}});
      await_reply(b->inbox, b->mu, b->cv, b->closed, seq,
                  std::chrono::milliseconds(2000), id);
    } catch (const std::exception &e) {
      spdlog::debug("shutdown of board {}: {}", id, e.what());
    }
    b->conn->shutdown();
  }
  for (auto &[id, b] : boards_)
    if (b->reader.joinable())
      b->reader.join();
}

} // namespace imce
