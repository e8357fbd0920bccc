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

#include "imce/mapper/mapper.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

#include "imce/errors.h"

namespace imce {

std::string_view to_string(Strategy s) {
  switch (s) {
  case Strategy::LoadBalance:
    return "loadbalance";
  case Strategy::MinCut:
    return "mincut";
  case Strategy::RoundRobin:
    return "roundrobin";
  }
  return "loadbalance";
}

Strategy strategy_from_string(std::string_view s) {
  std::string l(s);
  std::transform(l.begin(), l.end(), l.begin(), ::tolower);
  for (auto v : {Strategy::LoadBalance, Strategy::MinCut, Strategy::RoundRobin})
    if (to_string(v) == l)
      return v;
  throw ConfigError("unknown mapping strategy '" + std::string(s) + "'");
}

size_t DeploymentPlan::inter_board_links() const {
  return static_cast<size_t>(std::count_if(
      transitions.begin(), transitions.end(),
      [](const Transition &t) { return !t.local(); }));
}

size_t inter_board_edges(const CompiledModel &cm, const Assignment &a) {
  size_t n = 0;
  for (auto [i, j] : cm.adjacency.edges())
    n += a[i] != a[j];
  return n;
}

DeploymentPlan make_plan(const CompiledModel &cm, const HwInfo &hw,
                         const Assignment &a, Strategy strategy) {
  DeploymentPlan p;
  p.model = cm.name;
  p.strategy = strategy;
  for (size_t i = 0; i < cm.nodes.size(); ++i) {
    p.assignment[cm.nodes[i].id()] = a[i];
    p.fthreads[a[i]] += 1;
    p.sthreads.emplace(a[i], 0);
  }
  uint32_t channel = 1;
  for (auto [i, j] : cm.adjacency.edges()) {
    Transition t;
    t.channel = channel++;
    t.src_node = cm.nodes[i].id();
    t.dst_node = cm.nodes[j].id();
    t.src_board = a[i];
    t.dst_board = a[j];
    const auto &outs = cm.nodes[i].node.outputs;
    const auto &ins = cm.nodes[j].node.inputs;
    for (size_t o = 0; o < outs.size(); ++o)
      for (size_t s = 0; s < ins.size(); ++s)
        if (outs[o] == ins[s])
          t.routes.push_back(Route{outs[o], o, s});
    if (!t.local()) {
      p.sthreads[t.src_board] += 1;
      p.sthreads[t.dst_board] += 1;
    }
    p.transitions.push_back(std::move(t));
  }
  for (const auto &[id, n] : p.fthreads) {
    (void)n;
    p.boards.push_back(*hw.find(id));
  }
  return p;
}

namespace {

class Planner {
 public:
  Planner(const CompiledModel &cm, const HwInfo &hw)
      : cm_(cm), hw_(hw), n_(cm.nodes.size()), edges_(cm.adjacency.edges()),
        nbrs_(n_) {
    for (auto [i, j] : edges_) {
      nbrs_[i].push_back(j);
      nbrs_[j].push_back(i);
    }
    std::vector<BoardInfo> sorted = hw.boards;
    std::sort(sorted.begin(), sorted.end(),
              [](const BoardInfo &x, const BoardInfo &y) { return x.id < y.id; });
    for (const auto &b : sorted) {
      index_[b.id] = boards_.size();
      boards_.push_back(b);
    }
  }

  void check_capacity() const {
    for (AccelClass c : {AccelClass::An, AccelClass::Di}) {
      int need = 0, have = 0;
      for (const auto &n : cm_.nodes)
        need += n.accel == c;
      for (const auto &b : boards_)
        if (b.accel == c)
          have += b.max_fthreads;
      if (need > have)
        throw CapacityError(std::string(to_string(c)), need - have,
                            "insufficient " + std::string(to_string(c)) +
                                " capacity: " + std::to_string(need) +
                                " nodes, " + std::to_string(have) +
                                " F-threads (shortfall " +
                                std::to_string(need - have) + ")");
    }
  }

  Assignment load_balance() {
    std::vector<size_t> order(n_);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
      const auto &a = cm_.nodes[x], &b = cm_.nodes[y];
      if (a.cost_hint_us != b.cost_hint_us)
        return a.cost_hint_us > b.cost_hint_us;
      return a.id() < b.id();
    });
    Assignment a(n_, -1);
    std::vector<double> load(boards_.size(), 0.0);
    for (size_t i : order) {
      int best = -1;
      int best_excess = 0;
      for (size_t k = 0; k < boards_.size(); ++k) {
        const BoardInfo &b = boards_[k];
        if (b.accel != cm_.nodes[i].accel || fcount(a, b.id) >= b.max_fthreads)
          continue;
        a[i] = b.id;
        const int ex = excess(a);
        a[i] = -1;
        if (best < 0 || ex < best_excess ||
            (ex == best_excess && load[k] < load[index_.at(best)])) {
          best = b.id;
          best_excess = ex;
        }
      }
      a[i] = best;
      load[index_.at(best)] += cm_.nodes[i].cost_hint_us;
    }
    return a;
  }

  Assignment round_robin() {
    Assignment a(n_, -1);
    std::map<AccelClass, size_t> cursor;
    for (size_t i = 0; i < n_; ++i) {
      std::vector<size_t> cls;
      for (size_t k = 0; k < boards_.size(); ++k)
        if (boards_[k].accel == cm_.nodes[i].accel)
          cls.push_back(k);
      size_t &c = cursor[cm_.nodes[i].accel];
      for (size_t step = 0; step < cls.size(); ++step) {
        const BoardInfo &b = boards_[cls[(c + step) % cls.size()]];
        if (fcount(a, b.id) < b.max_fthreads) {
          a[i] = b.id;
          c = (c + step + 1) % cls.size();
          break;
        }
      }
    }
    return a;
  }

  /// Hill-climb on S-thread excess; throws ConnectivityError if stuck > 0.
  void repair(Assignment &a) {
    climb(a, [&](const Assignment &x) { return Score{excess(x), 0}; });
    if (excess(a) > 0)
      search_feasible(a);
    if (excess(a) > 0)
      throw ConnectivityError(
          "no assignment found within S-thread limits; over-subscribed: " +
          oversubscribed(a));
  }

  /// Hill-climb on inter-board edges while keeping S-thread validity.
  void min_cut(Assignment &a) {
    climb(a, [&](const Assignment &x) {
      return Score{excess(x), static_cast<int>(inter_board_edges(cm_, x))};
    });
  }

 private:
  struct Score {
    int excess;
    int cut;
    bool operator<(const Score &o) const {
      return excess != o.excess ? excess < o.excess : cut < o.cut;
    }
  };

  int fcount(const Assignment &a, int board) const {
    return static_cast<int>(std::count(a.begin(), a.end(), board));
  }

  std::map<int, int> scounts(const Assignment &a) const {
    std::map<int, int> s;
    for (auto [i, j] : edges_)
      if (a[i] >= 0 && a[j] >= 0 && a[i] != a[j]) {
        ++s[a[i]];
        ++s[a[j]];
      }
    return s;
  }

  int excess(const Assignment &a) const {
    int ex = 0;
    for (auto [b, n] : scounts(a))
      ex += std::max(0, n - boards_[index_.at(b)].max_sthreads);
    return ex;
  }

  std::string oversubscribed(const Assignment &a) const {
    std::string out;
    for (auto [b, n] : scounts(a))
      if (n > boards_[index_.at(b)].max_sthreads)
        out += (out.empty() ? "" : ", ") + std::string("board ") +
               std::to_string(b) + " (" + std::to_string(n) + " > " +
               std::to_string(boards_[index_.at(b)].max_sthreads) + ")";
    return out;
  }

  /// Bounded depth-first search for any assignment within the F- and
  /// S-thread limits, used when local search stalls. Partial S-thread counts
  /// only grow, so an over-subscribed prefix is pruned. Leaves `a` untouched
  /// when nothing is found within the budget.
  void search_feasible(Assignment &a) const {
    std::vector<size_t> order(n_);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) {
      return nbrs_[x].size() > nbrs_[y].size();
    });
    Assignment t(n_, -1);
    std::vector<int> f(boards_.size(), 0), s(boards_.size(), 0);
    size_t budget = 500000;
    std::function<bool(size_t)> dfs = [&](size_t depth) -> bool {
      if (depth == n_)
        return true;
      if (budget == 0)
        return false;
      --budget;
      const size_t i = order[depth];
      // Boards already hosting a neighbour first: fewer S-links.
      std::vector<std::pair<int, size_t>> cand;
      for (size_t k = 0; k < boards_.size(); ++k) {
        if (boards_[k].accel != cm_.nodes[i].accel || f[k] >= boards_[k].max_fthreads)
          continue;
        int local = 0;
        for (size_t j : nbrs_[i])
          local += t[j] == boards_[k].id;
        cand.emplace_back(-local, k);
      }
      std::stable_sort(cand.begin(), cand.end());
      for (auto [neg, k] : cand) {
        (void)neg;
        t[i] = boards_[k].id;
        ++f[k];
        bool ok = true;
        std::vector<size_t> touched;
        for (size_t j : nbrs_[i])
          if (t[j] >= 0 && t[j] != t[i]) {
            const size_t kj = index_.at(t[j]);
            ++s[k];
            ++s[kj];
            touched.push_back(kj);
            ok &= s[k] <= boards_[k].max_sthreads && s[kj] <= boards_[kj].max_sthreads;
          }
        if (ok && dfs(depth + 1))
          return true;
        for (size_t kj : touched) {
          --s[k];
          --s[kj];
        }
        --f[k];
        t[i] = -1;
      }
      return false;
    };
    if (dfs(0))
      a = std::move(t);
  }

  template <typename F> void climb(Assignment &a, F score) {
    Score cur = score(a);
    for (;;) {
      Assignment best_a;
      Score best = cur;
      // Moves.
      for (size_t i = 0; i < n_; ++i)
        for (const auto &b : boards_) {
          if (b.id == a[i] || b.accel != cm_.nodes[i].accel ||
              fcount(a, b.id) >= b.max_fthreads)
            continue;
          Assignment t = a;
          t[i] = b.id;
          Score s = score(t);
          if (s < best) {
            best = s;
            best_a = std::move(t);
          }
        }
      // Swaps.
      for (size_t i = 0; i < n_; ++i)
        for (size_t j = i + 1; j < n_; ++j) {
          if (a[i] == a[j] || cm_.nodes[i].accel != cm_.nodes[j].accel)
            continue;
          Assignment t = a;
          std::swap(t[i], t[j]);
          Score s = score(t);
          if (s < best) {
            best = s;
            best_a = std::move(t);
          }
        }
      if (best_a.empty())
        return;
      a = std::move(best_a);
      cur = best;
    }
  }

  const CompiledModel &cm_;
  const HwInfo &hw_;
  size_t n_;
  std::vector<std::pair<size_t, size_t>> edges_;
  std::vector<std::vector<size_t>> nbrs_;
  std::vector<BoardInfo> boards_;
  std::map<int, size_t> index_;
};

} // namespace

DeploymentPlan map_nodes(const CompiledModel &cm, const HwInfo &hw,
                         Strategy strategy) {
  validate(hw);
  Planner pl(cm, hw);
  pl.check_capacity();
  Assignment a;
  switch (strategy) {
  case Strategy::LoadBalance:
    a = pl.load_balance();
    pl.repair(a);
    break;
  case Strategy::MinCut:
    a = pl.load_balance();
    pl.repair(a);
    pl.min_cut(a);
    break;
  case Strategy::RoundRobin:
    a = pl.round_robin();
    pl.repair(a);
    break;
  }
  return make_plan(cm, hw, a, strategy);
}

std::vector<std::string> check_plan(const DeploymentPlan &plan,
                                    const CompiledModel &cm, const HwInfo &hw) {
  std::vector<std::string> v;
  std::map<int, int> f, s;
  std::map<std::string, int> where;
  for (const auto &n : cm.nodes) {
    auto it = plan.assignment.find(n.id());
    if (it == plan.assignment.end()) {
      v.push_back("node " + n.id() + " unassigned");
      continue;
    }
    const BoardInfo *b = hw.find(it->second);
    if (!b) {
      v.push_back("node " + n.id() + " on unknown board " +
                  std::to_string(it->second));
      continue;
    }
    if (b->accel != n.accel)
      v.push_back("node " + n.id() + " (" + std::string(to_string(n.accel)) +
                  ") on " + std::string(to_string(b->accel)) + " board " +
                  std::to_string(b->id));
    ++f[b->id];
    where[n.id()] = b->id;
  }
  if (plan.assignment.size() != cm.nodes.size())
    v.push_back("assignment lists unknown nodes");
  std::set<std::pair<std::string, std::string>> seen;
  for (auto [i, j] : cm.adjacency.edges()) {
    const auto &x = cm.nodes[i].id(), &y = cm.nodes[j].id();
    seen.emplace(x, y);
    if (where.count(x) && where.count(y) && where[x] != where[y]) {
      ++s[where[x]];
      ++s[where[y]];
    }
  }
  for (const auto &[id, n] : f) {
    const BoardInfo *b = hw.find(id);
    if (n > b->max_fthreads)
      v.push_back("board " + std::to_string(id) + " runs " + std::to_string(n) +
                  " F-threads > " + std::to_string(b->max_fthreads));
    auto pf = plan.fthreads.find(id);
    if (pf == plan.fthreads.end() || pf->second != n)
      v.push_back("board " + std::to_string(id) + " F-thread count mismatch");
  }
  for (const auto &[id, n] : s) {
    const BoardInfo *b = hw.find(id);
    if (n > b->max_sthreads)
      v.push_back("board " + std::to_string(id) + " needs " + std::to_string(n) +
                  " S-threads > " + std::to_string(b->max_sthreads));
    auto ps = plan.sthreads.find(id);
    if (ps == plan.sthreads.end() || ps->second != n)
      v.push_back("board " + std::to_string(id) + " S-thread count mismatch");
  }
  std::set<uint32_t> channels;
  std::set<std::pair<std::string, std::string>> listed;
  for (const auto &t : plan.transitions) {
    if (t.channel == 0 || !channels.insert(t.channel).second)
      v.push_back("transition channel " + std::to_string(t.channel) +
                  " invalid or duplicated");
    if (!listed.emplace(t.src_node, t.dst_node).second)
      v.push_back("transition " + t.src_node + "->" + t.dst_node + " duplicated");
    if (where.count(t.src_node) && where.count(t.dst_node) &&
        (where[t.src_node] != t.src_board || where[t.dst_node] != t.dst_board))
      v.push_back("transition " + t.src_node + "->" + t.dst_node +
                  " endpoints disagree with assignment");
    if (t.routes.empty())
      v.push_back("transition " + t.src_node + "->" + t.dst_node +
                  " carries no tensor");
  }
  if (listed != seen)
    v.push_back("transitions do not match the node adjacency");
  return v;
}

} // namespace imce
