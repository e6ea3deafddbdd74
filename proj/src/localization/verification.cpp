#include "segloc/localization/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "segloc/geom/rigid_fit.hpp"

namespace segloc::localization {

bool consistent(const Candidate& a, const Candidate& b, double epsilon) {
  if (a.local_id == b.local_id || a.global_id == b.global_id) return false;
  const double dl = (a.local_centroid - b.local_centroid).norm();
  const double dg = (a.global_centroid - b.global_centroid).norm();
  return std::abs(dl - dg) <= epsilon;
}

namespace {

class Bitset {
 public:
  explicit Bitset(std::size_t n = 0) : words_((n + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1; }

 private:
  std::vector<std::uint64_t> words_;
};

struct Graph {
  std::vector<std::size_t> order;  // canonical position -> input index
  std::vector<Bitset> adj;
  std::vector<std::size_t> degree;
  std::size_t n = 0;
};

Graph build_graph(const std::vector<Candidate>& c, double epsilon) {
  Graph g;
  g.n = c.size();
  g.order.resize(g.n);
  std::iota(g.order.begin(), g.order.end(), 0);
  auto key = [&](std::size_t i) {
    const auto& x = c[i];
    return std::make_tuple(x.local_id, x.global_id, x.distance, x.local_centroid.x(), x.local_centroid.y(),
                           x.local_centroid.z(), x.global_centroid.x(), x.global_centroid.y(), x.global_centroid.z());
  };
  std::stable_sort(g.order.begin(), g.order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  g.adj.assign(g.n, Bitset(g.n));
  g.degree.assign(g.n, 0);
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = i + 1; j < g.n; ++j)
      if (consistent(c[g.order[i]], c[g.order[j]], epsilon)) {
        g.adj[i].set(j);
        g.adj[j].set(i);
        ++g.degree[i];
        ++g.degree[j];
      }
  return g;
}

// Canonical-position clique found greedily from the highest-degree vertex.
std::vector<std::size_t> greedy(const Graph& g) {
  if (g.n == 0) return {};
  std::size_t seed = 0;
  for (std::size_t i = 1; i < g.n; ++i)
    if (g.degree[i] > g.degree[seed]) seed = i;
  std::vector<std::size_t> clique{seed};
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < g.n; ++i)
    if (g.adj[seed].test(i)) cand.push_back(i);
  while (!cand.empty()) {
    std::size_t best = 0, best_deg = 0;
    for (std::size_t a = 0; a < cand.size(); ++a) {
      std::size_t d = 0;
      for (std::size_t b : cand) d += g.adj[cand[a]].test(b);
      if (a == 0 || d > best_deg) best = a, best_deg = d;
    }
    const std::size_t v = cand[best];
    clique.push_back(v);
    std::vector<std::size_t> next;
    for (std::size_t u : cand)
      if (u != v && g.adj[v].test(u)) next.push_back(u);
    cand = std::move(next);
  }
  std::sort(clique.begin(), clique.end());
  return clique;
}

// Branch and bound with greedy-colouring bounds.
class CliqueSearch {
 public:
  CliqueSearch(const Graph& g, std::size_t floor, std::size_t budget) : g_(g), floor_(floor), budget_(budget) {}

  void run(std::vector<std::size_t> best) {
    best_ = std::move(best);
    std::vector<std::size_t> p;
    for (std::size_t i = 0; i < g_.n; ++i)
      if (g_.degree[i] + 1 > floor_) p.push_back(i);
    std::stable_sort(p.begin(), p.end(), [&](std::size_t a, std::size_t b) { return g_.degree[a] > g_.degree[b]; });
    std::vector<std::size_t> r;
    expand(r, p);
  }

  std::vector<std::size_t> best_;
  std::size_t nodes_ = 0;
  bool exhausted_ = false;

 private:
  std::size_t bound() const { return std::max(best_.size(), floor_); }

  void colour(const std::vector<std::size_t>& p, std::vector<std::size_t>& order, std::vector<std::size_t>& colours) {
    std::vector<std::vector<std::size_t>> classes;
    for (std::size_t v : p) {
      std::size_t k = 0;
      for (; k < classes.size(); ++k) {
        bool clash = false;
        for (std::size_t u : classes[k])
          if (g_.adj[v].test(u)) {
            clash = true;
            break;
          }
        if (!clash) break;
      }
      if (k == classes.size()) classes.emplace_back();
      classes[k].push_back(v);
    }
    order.clear();
    colours.clear();
    for (std::size_t k = 0; k < classes.size(); ++k)
      for (std::size_t v : classes[k]) {
        order.push_back(v);
        colours.push_back(k + 1);
      }
  }

  void expand(std::vector<std::size_t>& r, std::vector<std::size_t> p) {
    if (exhausted_) return;
    if (++nodes_ > budget_) {
      exhausted_ = true;
      return;
    }
    std::vector<std::size_t> order, colours;
    colour(p, order, colours);
    for (std::size_t i = order.size(); i-- > 0;) {
      if (r.size() + colours[i] <= bound()) return;
      const std::size_t v = order[i];
      r.push_back(v);
      std::vector<std::size_t> next;
      for (std::size_t j = 0; j < i; ++j)
        if (g_.adj[v].test(order[j])) next.push_back(order[j]);
      if (next.empty()) {
        if (r.size() > bound()) best_ = r;
      } else {
        expand(r, std::move(next));
      }
      r.pop_back();
      if (exhausted_) return;
    }
  }

  const Graph& g_;
  std::size_t floor_;
  std::size_t budget_;
};

std::vector<std::size_t> to_input(const Graph& g, const std::vector<std::size_t>& canon) {
  std::vector<std::size_t> out;
  for (std::size_t v : canon) out.push_back(g.order[v]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::size_t> greedy_consistent_set(const std::vector<Candidate>& candidates, double epsilon) {
  const Graph g = build_graph(candidates, epsilon);
  return to_input(g, greedy(g));
}

CliqueResult max_consistent_set(const std::vector<Candidate>& candidates, double epsilon, std::size_t min_size,
                                std::size_t node_budget) {
  const Graph g = build_graph(candidates, epsilon);
  CliqueSearch search(g, min_size > 0 ? min_size - 1 : 0, node_budget);
  search.run(greedy(g));
  CliqueResult r;
  r.members = to_input(g, search.best_);
  r.exact = !search.exhausted_;
  r.nodes = search.nodes_;
  return r;
}

std::optional<LocalizationResult> geometric_verify(const std::vector<Candidate>& candidates,
                                                   const VerifyParams& params) {
  if (params.min_correspondences < 3)
    throw std::invalid_argument("geometric_verify: a transform needs at least 3 correspondences");
  if (candidates.size() < params.min_correspondences) return std::nullopt;
  const auto clique = max_consistent_set(candidates, params.epsilon, params.min_correspondences, params.node_budget);
  if (clique.members.size() < params.min_correspondences) return std::nullopt;
  geom::PointCloud src, dst;
  LocalizationResult out;
  for (std::size_t i : clique.members) {
    src.push_back(candidates[i].local_centroid);
    dst.push_back(candidates[i].global_centroid);
    out.pairs.emplace_back(candidates[i].local_id, candidates[i].global_id);
  }
  const auto t = params.yaw_only ? geom::estimate_yaw_transform(src, dst) : geom::estimate_rigid_transform(src, dst);
  if (!t) return std::nullopt;
  std::sort(out.pairs.begin(), out.pairs.end());
  out.transform = *t;
  out.consistency_size = clique.members.size();
  out.exact = clique.exact;
  return out;
}

}  // namespace segloc::localization
