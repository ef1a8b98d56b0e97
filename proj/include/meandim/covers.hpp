#ifndef MEANDIM_COVERS_HPP
#define MEANDIM_COVERS_HPP

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "meandim/common.hpp"
#include "meandim/systems.hpp"

namespace meandim {

// Finite cover of a sample by point-index subsets.
struct Cover {
  std::vector<std::vector<Index>> sets;  // each sorted, nonempty

  int count() const { return static_cast<int>(sets.size()); }

  void validate(int n_points) const {
    if (sets.empty()) throw NotACover("cover has no sets");
    std::vector<char> hit(n_points, 0);
    for (const auto& s : sets) {
      if (s.empty()) throw NotACover("cover contains an empty set");
      for (Index i : s) {
        if (i < 0 || i >= n_points) throw NotACover("cover set references unknown index");
        hit[i] = 1;
      }
    }
    for (int i = 0; i < n_points; ++i)
      if (!hit[i]) throw NotACover("index " + std::to_string(i) + " not covered");
  }
};

inline double set_diameter(const std::vector<Index>& s, const SampledSpace& sp) {
  double m = 0.0;
  for (size_t i = 0; i < s.size(); ++i)
    for (size_t j = i + 1; j < s.size(); ++j) m = std::max(m, sp.dist(s[i], s[j]));
  return m;
}

inline double mesh(const Cover& c, const SampledSpace& sp) {
  c.validate(sp.size());
  double m = 0.0;
  for (const auto& s : c.sets) m = std::max(m, set_diameter(s, sp));
  return m;
}

inline int order(const Cover& c, int n_points) {
  c.validate(n_points);
  std::vector<int> mult(n_points, 0);
  for (const auto& s : c.sets)
    for (Index i : s) ++mult[i];
  return *std::max_element(mult.begin(), mult.end()) - 1;
}

// Supremum of admissible Lebesgue radii: the closed ball B(x,r) lies in a
// cover set exactly when r is strictly below the returned value at x.
inline double lebesgue_number(const Cover& c, const SampledSpace& sp) {
  c.validate(sp.size());
  int n = sp.size();
  double overall = std::numeric_limits<double>::infinity();
  for (Index x = 0; x < n; ++x) {
    double best = 0.0;
    for (const auto& s : c.sets) {
      // distance from x to the sample complement of s
      double m = std::numeric_limits<double>::infinity();
      std::vector<char> in(n, 0);
      for (Index i : s) in[i] = 1;
      for (Index y = 0; y < n; ++y)
        if (!in[y]) m = std::min(m, sp.dist(x, y));
      best = std::max(best, m);
    }
    overall = std::min(overall, best);
  }
  if (std::isinf(overall)) overall = sp.diameter();
  return overall;
}

// --- widim ----------------------------------------------------------------

enum class WidimMode { Exact, Greedy };

struct WidimOptions {
  int radius_grid = 0;          // 0: all realized distances; >0: geometric grid size
  long long node_cap = 5'000'000;  // exact-mode search cap
  int max_order = 64;
  double slack = 1e-12;         // numeric slack on mesh / radius comparisons
  // also admit two-center balls {y : d(a,y) <= d(a,b) >= d(b,y)}: these realize
  // balls of the underlying space whose centers fall between sample points
  bool pair_lenses = true;
};

struct WidimResult {
  int order = 0;
  Cover witness;
  bool upper_bound_only = false;  // true for greedy results
};

namespace detail {

struct BallCandidates {
  std::vector<std::vector<Index>> sets;      // candidate members, sorted
  std::vector<std::vector<Index>> lam_list;  // points whose closed lam-ball fits inside
  std::vector<double> radius;
  std::vector<std::vector<int>> by_point;    // [point] -> candidates lam-covering it
};

inline BallCandidates ball_candidates(const SampledSpace& sp, double eps, double lam,
                                      const WidimOptions& opt) {
  int n = sp.size();
  std::vector<double> radii;
  if (opt.radius_grid <= 0) {
    std::set<double> vals;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (sp.dist(i, j) <= eps + opt.slack) vals.insert(sp.dist(i, j));
    radii.assign(vals.begin(), vals.end());
  } else {
    double lo = std::max(sp.min_gap() * 0.5, 1e-12), hi = std::max(sp.diameter(), lo * 2);
    radii.push_back(0.0);
    for (int i = 0; i <= opt.radius_grid; ++i) {
      double r = lo * std::pow(hi / lo, static_cast<double>(i) / opt.radius_grid);
      if (r <= eps + opt.slack) radii.push_back(r);
    }
    // any admissible ball is reproduced at radius exactly eps
    radii.push_back(eps);
  }
  // closed lam-balls, reused for coverage checks
  std::vector<std::vector<Index>> lam_ball(n);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y)
      if (sp.dist(x, y) <= lam + opt.slack) lam_ball[x].push_back(y);

  BallCandidates c;
  std::set<std::vector<Index>> seen;
  std::vector<char> mem(n, 0);
  auto admit = [&](std::vector<Index> s, double r) {
    if (s.empty()) return;
    for (size_t i = 0; i < s.size(); ++i)
      for (size_t j = i + 1; j < s.size(); ++j)
        if (sp.dist(s[i], s[j]) > eps + opt.slack) return;
    if (!seen.insert(s).second) return;
    for (Index i : s) mem[i] = 1;
    std::vector<Index> lc;
    for (Index x : s) {
      bool fits = true;
      for (Index y : lam_ball[x])
        if (!mem[y]) {
          fits = false;
          break;
        }
      if (fits) lc.push_back(x);
    }
    for (Index i : s) mem[i] = 0;
    c.sets.push_back(std::move(s));
    c.lam_list.push_back(std::move(lc));
    c.radius.push_back(r);
  };
  for (Index ctr = 0; ctr < n; ++ctr) {
    for (double r : radii) {
      std::vector<Index> s;
      for (Index y = 0; y < n; ++y)
        if (sp.dist(ctr, y) <= r + opt.slack) s.push_back(y);
      admit(std::move(s), r);
    }
  }
  if (opt.pair_lenses) {
    for (Index a = 0; a < n; ++a)
      for (Index b = a + 1; b < n; ++b) {
        double r = sp.dist(a, b);
        if (r > eps + opt.slack) continue;
        std::vector<Index> s;
        for (Index y = 0; y < n; ++y)
          if (sp.dist(a, y) <= r + opt.slack && sp.dist(b, y) <= r + opt.slack) s.push_back(y);
        admit(std::move(s), r);
      }
  }
  c.by_point.resize(n);
  for (size_t ci = 0; ci < c.sets.size(); ++ci)
    for (Index x : c.lam_list[ci]) c.by_point[x].push_back(static_cast<int>(ci));
  return c;
}

inline int cover_order_from(const std::vector<int>& chosen, const BallCandidates& c, int n) {
  std::vector<int> mult(n, 0);
  for (int ci : chosen)
    for (Index x : c.sets[ci]) ++mult[x];
  return *std::max_element(mult.begin(), mult.end()) - 1;
}

// Depth-first search for a cover with order <= target; every point must be
// lambda-covered by some chosen candidate.
class ExactSearch {
 public:
  ExactSearch(const BallCandidates& c, int n, long long cap) : c_(c), n_(n), cap_(cap) {}

  bool solve(int target, std::vector<int>& out_chosen) {
    target_ = target;
    mult_.assign(n_, 0);
    lam_count_.assign(n_, 0);
    chosen_.clear();
    return dfs(out_chosen);
  }

 private:
  bool dfs(std::vector<int>& out) {
    if (++nodes_ > cap_) throw SearchCapExceeded("exact widim search exceeded node cap");
    // most-constrained uncovered point
    int pick = -1;
    size_t best = std::numeric_limits<size_t>::max();
    for (Index x = 0; x < n_; ++x) {
      if (lam_count_[x] > 0) continue;
      size_t usable = 0;
      for (int ci : c_.by_point[x])
        if (fits(ci)) ++usable;
      if (usable == 0) return false;
      if (usable < best) {
        best = usable;
        pick = x;
      }
    }
    if (pick < 0) {
      out = chosen_;
      return true;
    }
    for (int cand : c_.by_point[pick]) {
      if (!fits(cand)) continue;
      apply(cand, +1);
      chosen_.push_back(cand);
      if (dfs(out)) return true;
      chosen_.pop_back();
      apply(cand, -1);
    }
    return false;
  }

  bool fits(int cand) const {
    if (std::find(chosen_.begin(), chosen_.end(), cand) != chosen_.end()) return false;
    for (Index x : c_.sets[cand])
      if (mult_[x] + 1 > target_ + 1) return false;
    return true;
  }
  void apply(int cand, int sgn) {
    for (Index x : c_.sets[cand]) mult_[x] += sgn;
    for (Index x : c_.lam_list[cand]) lam_count_[x] += sgn;
  }

  const BallCandidates& c_;
  int n_;
  long long cap_;
  long long nodes_ = 0;
  int target_ = 0;
  std::vector<int> mult_, lam_count_;
  std::vector<int> chosen_;
};

// Greedy upper bound: per radius cap, pick candidates that lambda-cover the
// most new points with the least multiplicity damage, then prune redundant
// sets.
inline bool greedy_once(const BallCandidates& c, int n, double radius_cap, double slack,
                        std::vector<int>& out) {
  std::vector<int> lam_count(n, 0), mult(n, 0);
  std::vector<int> chosen;
  std::vector<char> used(c.sets.size(), 0);
  while (true) {
    long uncovered = std::count(lam_count.begin(), lam_count.end(), 0);
    if (uncovered == 0) break;
    int best = -1;
    long best_new = -1;
    int best_peak = std::numeric_limits<int>::max();
    for (size_t ci = 0; ci < c.sets.size(); ++ci) {
      if (used[ci] || c.radius[ci] > radius_cap + slack) continue;
      if (static_cast<long>(c.lam_list[ci].size()) < best_new) continue;
      long nn = 0;
      for (Index x : c.lam_list[ci])
        if (lam_count[x] == 0) ++nn;
      if (nn == 0 || nn < best_new) continue;
      int peak = 0;
      for (Index x : c.sets[ci]) peak = std::max(peak, mult[x] + 1);
      if (nn > best_new || peak < best_peak) {
        best = static_cast<int>(ci);
        best_new = nn;
        best_peak = peak;
      }
    }
    if (best < 0) return false;
    used[best] = 1;
    chosen.push_back(best);
    for (Index x : c.lam_list[best]) ++lam_count[x];
    for (Index x : c.sets[best]) ++mult[x];
  }
  // prune: drop sets whose lambda-coverage is redundant
  for (size_t i = chosen.size(); i-- > 0;) {
    int cand = chosen[i];
    bool redundant = true;
    for (Index x : c.lam_list[cand])
      if (lam_count[x] == 1) {
        redundant = false;
        break;
      }
    if (redundant) {
      for (Index x : c.lam_list[cand]) --lam_count[x];
      chosen.erase(chosen.begin() + i);
    }
  }
  out = chosen;
  return true;
}

}  // namespace detail

inline WidimResult widim(const SampledSpace& sp, double eps, double lam, WidimMode mode,
                         const WidimOptions& opt = {}) {
  if (eps <= 0) throw ParseError("widim requires eps > 0");
  int n = sp.size();
  auto cands = detail::ball_candidates(sp, eps, lam, opt);
  // feasibility: every point needs some candidate that lambda-covers it
  for (Index x = 0; x < n; ++x) {
    if (cands.by_point[x].empty())
      throw Infeasible("no admissible ball contains the closed lam-ball around index " +
                       std::to_string(x) + " (eps too small relative to lam)");
  }
  WidimResult res;
  if (mode == WidimMode::Exact) {
    detail::ExactSearch search(cands, n, opt.node_cap);
    std::vector<int> chosen;
    for (int t = 0; t <= opt.max_order; ++t) {
      if (search.solve(t, chosen)) {
        res.order = detail::cover_order_from(chosen, cands, n);
        for (int ci : chosen) res.witness.sets.push_back(cands.sets[ci]);
        return res;
      }
    }
    throw Infeasible("no admissible cover within max_order");
  }
  // greedy: try per-radius caps and keep the best admissible cover
  std::set<double> caps(cands.radius.begin(), cands.radius.end());
  int best_order = std::numeric_limits<int>::max();
  std::vector<int> best_chosen;
  for (double cap : caps) {
    std::vector<int> chosen;
    if (!detail::greedy_once(cands, n, cap, opt.slack, chosen)) continue;
    int o = detail::cover_order_from(chosen, cands, n);
    if (o < best_order) {
      best_order = o;
      best_chosen = chosen;
    }
  }
  if (best_chosen.empty() && best_order == std::numeric_limits<int>::max())
    throw Infeasible("greedy widim found no admissible cover");
  res.order = best_order;
  res.upper_bound_only = true;
  for (int ci : best_chosen) res.witness.sets.push_back(cands.sets[ci]);
  return res;
}

// --- nerve ------------------------------------------------------------------

struct Nerve {
  int vertex_count = 0;
  // maximal simplices (sorted vertex lists); all faces are implied
  std::vector<std::vector<int>> maximal;

  int dimension() const {
    size_t m = 0;
    for (const auto& s : maximal) m = std::max(m, s.size());
    return static_cast<int>(m) - 1;
  }
  bool has_simplex(const std::vector<int>& face) const {
    for (const auto& s : maximal)
      if (std::includes(s.begin(), s.end(), face.begin(), face.end())) return true;
    return false;
  }
};

inline Nerve nerve(const Cover& c, int n_points) {
  c.validate(n_points);
  Nerve nv;
  nv.vertex_count = c.count();
  std::set<std::vector<int>> supports;
  for (Index x = 0; x < n_points; ++x) {
    std::vector<int> supp;
    for (int s = 0; s < c.count(); ++s)
      if (std::binary_search(c.sets[s].begin(), c.sets[s].end(), x)) supp.push_back(s);
    supports.insert(supp);
  }
  // keep only inclusion-maximal supports
  for (const auto& s : supports) {
    bool maximal = true;
    for (const auto& t : supports)
      if (&s != &t && s.size() < t.size() &&
          std::includes(t.begin(), t.end(), s.begin(), s.end())) {
        maximal = false;
        break;
      }
    if (maximal) nv.maximal.push_back(s);
  }
  return nv;
}

// --- partition of unity -------------------------------------------------------

struct PartitionOfUnity {
  std::vector<std::vector<double>> weights;  // [set][point]
  std::vector<Index> anchors;                // q_W per set

  int set_count() const { return static_cast<int>(weights.size()); }
};

// Bump weights from distance-to-complement, renormalized; anchor rows are
// sharpened so psi_W(q_W) = 1 exactly.
inline PartitionOfUnity partition_of_unity(const Cover& c, const SampledSpace& sp,
                                           const std::vector<Index>* anchors = nullptr,
                                           double tau_pou = 1e-9) {
  int n = sp.size();
  c.validate(n);
  int ns = c.count();
  std::vector<std::vector<char>> mem(ns, std::vector<char>(n, 0));
  for (int s = 0; s < ns; ++s)
    for (Index i : c.sets[s]) mem[s][i] = 1;

  PartitionOfUnity pou;
  pou.anchors.assign(ns, -1);
  if (anchors) {
    if (static_cast<int>(anchors->size()) != ns) throw AnchorConflict("anchor count mismatch");
    std::set<Index> distinct;
    for (int s = 0; s < ns; ++s) {
      Index q = (*anchors)[s];
      if (!mem[s][q]) throw AnchorConflict("anchor outside its set");
      if (!distinct.insert(q).second) throw AnchorConflict("anchors coincide");
      pou.anchors[s] = q;
    }
  } else {
    // prefer deep points, but assign via augmenting paths so any cover that
    // admits distinct anchors at all gets them (a greedy pass can dead-end
    // on cyclic covers)
    std::vector<std::vector<Index>> pref(ns);
    for (int s = 0; s < ns; ++s) {
      std::vector<std::pair<double, Index>> ranked;
      for (Index x : c.sets[s]) {
        double depth = std::numeric_limits<double>::infinity();
        for (Index y = 0; y < n; ++y)
          if (!mem[s][y]) depth = std::min(depth, sp.dist(x, y));
        if (std::isinf(depth)) depth = sp.diameter() + 1.0;
        ranked.push_back({-depth, x});
      }
      std::sort(ranked.begin(), ranked.end());
      for (auto [d, x] : ranked) pref[s].push_back(x);
    }
    std::map<Index, int> owner;  // anchor point -> set using it
    std::function<bool(int, std::set<Index>&)> assign = [&](int s, std::set<Index>& seen) {
      for (Index x : pref[s]) {
        if (!seen.insert(x).second) continue;
        auto it = owner.find(x);
        if (it == owner.end() || assign(it->second, seen)) {
          owner[x] = s;
          pou.anchors[s] = x;
          return true;
        }
      }
      return false;
    };
    for (int s = 0; s < ns; ++s) {
      std::set<Index> seen;
      if (!assign(s, seen)) throw AnchorConflict("cannot pick distinct anchors");
    }
  }

  pou.weights.assign(ns, std::vector<double>(n, 0.0));
  for (Index x = 0; x < n; ++x) {
    // anchor points carry indicator weights
    int owner = -1;
    for (int s = 0; s < ns; ++s)
      if (pou.anchors[s] == x) owner = s;
    if (owner >= 0) {
      pou.weights[owner][x] = 1.0;
      continue;
    }
    double total = 0.0;
    std::vector<double> bump(ns, 0.0);
    for (int s = 0; s < ns; ++s) {
      if (!mem[s][x]) continue;
      double b = std::numeric_limits<double>::infinity();
      for (Index y = 0; y < n; ++y)
        if (!mem[s][y]) b = std::min(b, sp.dist(x, y));
      if (std::isinf(b)) b = sp.diameter() + 1.0;
      if (b <= 0.0) b = tau_pou;  // boundary point of an open set at sample scale
      bump[s] = b;
      total += b;
    }
    if (total <= 0.0) throw NotACover("point not covered while building partition of unity");
    for (int s = 0; s < ns; ++s) pou.weights[s][x] = bump[s] / total;
  }
  return pou;
}

}  // namespace meandim

#endif  // MEANDIM_COVERS_HPP
