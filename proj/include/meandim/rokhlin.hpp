#ifndef MEANDIM_ROKHLIN_HPP
#define MEANDIM_ROKHLIN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "meandim/covers.hpp"
#include "meandim/embedders.hpp"
#include "meandim/systems.hpp"

namespace meandim {

// D+1 base sets whose [0,n)^k translates are pairwise disjoint per base
// and jointly cover the sample. Bases stand for open sets: they are built
// with an interior margin so the `margin`-neighborhood plays the role of
// the closure, and covering is tested with `cover_tol` slack.
struct TowerSystem {
  long n = 1;
  int k = 1;
  double margin = 0.0;
  double cover_tol = 0.0;
  std::vector<std::vector<Index>> bases;

  int D() const { return static_cast<int>(bases.size()) - 1; }
};

struct TowerViolation {
  std::string kind;  // "disjoint" or "cover"
  int tower = -1;
  std::vector<long> g1, g2;
  Index witness = -1;
};

struct TowerVerifyReport {
  bool ok = false;
  bool disjoint = true;
  bool covering = true;
  std::vector<TowerViolation> violations;
};

namespace detail {

inline std::vector<std::vector<long>> box_elements(long n, int k) {
  std::vector<std::vector<long>> out;
  std::vector<long> g(k, 0);
  while (true) {
    out.push_back(g);
    int axis = k - 1;
    while (axis >= 0 && ++g[axis] == n) g[axis--] = 0;
    if (axis < 0) break;
  }
  return out;
}

inline std::vector<Index> fatten(const std::vector<Index>& s, const SampledSpace& sp,
                                 double radius) {
  std::vector<Index> out;
  for (Index x = 0; x < sp.size(); ++x) {
    double d = std::numeric_limits<double>::infinity();
    for (Index y : s) d = std::min(d, sp.dist(x, y));
    if (d <= radius) out.push_back(x);
  }
  return out;
}

}  // namespace detail

inline TowerVerifyReport verify_towers(const TowerSystem& t, const SampledAction& a) {
  if (t.k != a.k()) throw ParseError("tower/action rank mismatch");
  const auto& sp = a.space();
  TowerVerifyReport rep;
  auto box = detail::box_elements(t.n, t.k);
  std::vector<char> covered(sp.size(), 0);

  for (size_t i = 0; i < t.bases.size(); ++i) {
    auto closure = detail::fatten(t.bases[i], sp, t.margin);
    // translate ownership: each index may carry at most one box element
    std::vector<int> owner(sp.size(), -1);
    for (size_t gi = 0; gi < box.size(); ++gi) {
      GroupElement g{box[gi]};
      for (Index x : closure) {
        Index im = a.act(g, x);
        if (owner[im] >= 0 && owner[im] != static_cast<int>(gi)) {
          rep.disjoint = false;
          rep.violations.push_back({"disjoint", static_cast<int>(i), box[owner[im]], box[gi], im});
        } else {
          owner[im] = static_cast<int>(gi);
        }
      }
      for (Index x : t.bases[i]) covered[a.act(g, x)] = 1;
    }
  }
  for (Index x = 0; x < sp.size(); ++x) {
    if (covered[x]) continue;
    double d = std::numeric_limits<double>::infinity();
    for (Index y = 0; y < sp.size(); ++y)
      if (covered[y]) d = std::min(d, sp.dist(x, y));
    if (d > t.cover_tol) {
      rep.covering = false;
      rep.violations.push_back({"cover", -1, {}, {}, x});
    }
  }
  rep.ok = rep.disjoint && rep.covering;
  return rep;
}

// --- circle towers ----------------------------------------------------------

struct CircleArc {
  int tower = 0;      // 0 = full blocks, 1 = final blocks
  double start = 0;   // position in [0,1)
  double width = 0;
  long column = 0;    // castle column the block came from
  long level = 0;     // castle level of the block base
};

struct CircleTowers {
  TowerSystem system;
  std::vector<CircleArc> arcs;
  long q = 0;       // first-return denominator used
  double beta = 0;  // base arc length
};

namespace detail {

inline double frac(double x) { return x - std::floor(x); }

// continued-fraction denominators of x, ascending
inline std::vector<long> cf_denominators(double x, int count = 24) {
  std::vector<long> qs;
  double v = frac(x);
  long q0 = 0, q1 = 1;
  for (int i = 0; i < count && v > 1e-15; ++i) {
    double inv = 1.0 / v;
    long a = static_cast<long>(std::floor(inv));
    v = inv - a;
    long q2 = a * q1 + q0;
    q0 = q1;
    q1 = q2;
    qs.push_back(q1);
    if (q1 > 100'000'000) break;
  }
  return qs;
}

inline double circ_norm(double x) {  // distance to nearest integer
  double f = frac(x);
  return std::min(f, 1.0 - f);
}

// first-return time of position x to [0, beta) under rotation by alpha
inline long return_time(double x, double alpha, double beta, long cap) {
  double p = x;
  for (long t = 1; t <= cap; ++t) {
    p = frac(p + alpha);
    if (p < beta) return t;
  }
  return -1;
}

}  // namespace detail

// Kac first-return castle over [0, ||q alpha||) for a convergent q >= n,
// merged into two families of height-n blocks: full blocks from the bottom
// of each column and one final block per column.
inline CircleTowers build_circle_towers(double alpha, long n, int resolution,
                                        long horizon = 4096, double margin_scale = 2.0) {
  if (n < 1) throw ParseError("tower height must be >= 1");
  auto action = make_circle_rotation(alpha, resolution, horizon);
  long shift = action.generator(0)[0];
  if (shift == 0) throw RationalAlpha("rotation snaps to the identity at this resolution");
  double a_snap = static_cast<double>(shift) / resolution;
  for (long q : detail::cf_denominators(alpha))
    if (q <= 4 * n && detail::circ_norm(q * alpha) < 1e-13)
      throw RationalAlpha("alpha is rational with small denominator " + std::to_string(q));

  double spacing = 1.0 / resolution;
  double margin = margin_scale * spacing;
  double delta = margin + spacing;  // interior shrink of every block arc

  if (n == 1) {
    // [1]-towers are unconstrained: two arcs covering the circle
    CircleTowers out;
    out.system.n = 1;
    out.system.k = 1;
    out.system.margin = margin;
    out.system.cover_tol = margin + 3.0 * spacing;
    out.system.bases.resize(2);
    for (Index x = 0; x < resolution; ++x)
      out.system.bases[x % 2 == 0 ? 0 : 1].push_back(x);
    out.arcs = {{0, 0.0, 0.5, 0, 0}, {1, 0.5, 0.5, 0, 0}};
    out.q = 1;
    out.beta = 1.0;
    return out;
  }

  std::string last_failure = "no convergent q >= n available";
  for (long q : detail::cf_denominators(a_snap)) {
    if (q < n) continue;
    double beta = detail::circ_norm(q * a_snap);
    if (beta < 2.0 * delta + 2.0 * spacing) {
      last_failure = "base arc below margin scale at q = " + std::to_string(q);
      break;  // larger q only shrinks the arc further
    }
    // sub-arcs of [0, beta) with constant first-return time
    long cap = 16 * q + resolution;
    const int scan = 4096;
    std::vector<double> cut = {0.0};
    std::vector<long> rtimes;
    long r_prev = detail::return_time(beta * (0.5 / scan), a_snap, beta, cap);
    rtimes.push_back(r_prev);
    for (int s = 1; s < scan; ++s) {
      double x = beta * ((s + 0.5) / scan);
      long r = detail::return_time(x, a_snap, beta, cap);
      if (r != r_prev) {
        double lo = beta * ((s - 0.5) / scan), hi = x;
        for (int it = 0; it < 60; ++it) {
          double mid = 0.5 * (lo + hi);
          if (detail::return_time(mid, a_snap, beta, cap) == r_prev) lo = mid;
          else hi = mid;
        }
        cut.push_back(hi);
        rtimes.push_back(r);
        r_prev = r;
      }
    }
    cut.push_back(beta);

    bool heights_ok = true;
    for (long r : rtimes)
      if (r < n || r < 0) heights_ok = false;
    if (!heights_ok) continue;  // try the next convergent

    CircleTowers out;
    out.q = q;
    out.beta = beta;
    out.system.n = n;
    out.system.k = 1;
    out.system.margin = margin;
    out.system.cover_tol = margin + 3.0 * spacing;
    out.system.bases.resize(2);
    bool too_coarse = false;
    for (size_t c = 0; c + 1 < cut.size() && !too_coarse; ++c) {
      double lo = cut[c], width = cut[c + 1] - cut[c];
      long r = rtimes[c];
      std::vector<std::pair<int, long>> blocks;  // (tower, base level)
      for (long b = 0; b + n <= r; b += n) blocks.push_back({0, b});
      blocks.push_back({1, r - n});
      for (auto [tower, level] : blocks) {
        double start = detail::frac(lo + level * a_snap);
        out.arcs.push_back({tower, start, width, static_cast<long>(c), level});
        int kept = 0;
        for (Index x = 0; x < resolution; ++x) {
          double off = detail::frac(static_cast<double>(x) * spacing - start);
          if (off >= delta && off <= width - delta) {
            out.system.bases[tower].push_back(x);
            ++kept;
          }
        }
        if (kept == 0) too_coarse = true;
      }
    }
    if (too_coarse) {
      last_failure = "a block arc holds no interior sample at q = " + std::to_string(q);
      break;
    }
    for (auto& b : out.system.bases) {
      std::sort(b.begin(), b.end());
      b.erase(std::unique(b.begin(), b.end()), b.end());
    }
    return out;
  }
  throw ResolutionTooCoarse(last_failure);
}

// Product of k circle tower systems at a shared height: 2^k bases on the
// row-major grid product, D <= 2^k - 1.
inline TowerSystem product_towers(const std::vector<TowerSystem>& parts,
                                  const std::vector<int>& axis_sizes, long n) {
  int k = static_cast<int>(parts.size());
  if (k < 1 || axis_sizes.size() != parts.size()) throw ParseError("bad product_towers input");
  for (const auto& p : parts) {
    if (p.n != n) throw HeightMismatch("factor height " + std::to_string(p.n) +
                                       " differs from requested n = " + std::to_string(n));
    if (p.k != 1 || p.bases.size() != 2) throw ParseError("factors must be D=1 circle systems");
  }
  std::vector<long> strides(k, 1);
  for (int i = k - 2; i >= 0; --i) strides[i] = strides[i + 1] * axis_sizes[i + 1];
  TowerSystem out;
  out.n = n;
  out.k = k;
  for (const auto& p : parts) {
    out.margin = std::max(out.margin, p.margin);
    out.cover_tol = std::max(out.cover_tol, p.cover_tol);
  }
  for (long mask = 0; mask < (1L << k); ++mask) {
    std::vector<Index> base = {0};
    std::vector<Index> next;
    for (int i = 0; i < k; ++i) {
      const auto& factor = parts[i].bases[(mask >> i) & 1];
      next.clear();
      for (Index prefix : base)
        for (Index x : factor) next.push_back(prefix + static_cast<Index>(x * strides[i]));
      base.swap(next);
    }
    std::sort(base.begin(), base.end());
    out.bases.push_back(std::move(base));
  }
  return out;
}

// --- pullbacks and the full pipeline ----------------------------------------

// Index map onto a factor system, expected equivariant.
struct FactorMap {
  std::vector<Index> to_base;
};

struct PullbackCover {
  long n = 1;
  int k = 1;
  // sets[i][g_flat] = preimage of the g-translate of base i, g in row-major
  // order over [0,n)^k
  std::vector<std::vector<std::vector<Index>>> sets;
};

inline void require_equivariant(const FactorMap& pi, const SampledAction& total,
                                const SampledAction& base) {
  if (total.k() != base.k()) throw NotEquivariant("rank mismatch between total and base actions");
  if (static_cast<int>(pi.to_base.size()) != total.space().size())
    throw ParseError("factor map size mismatch");
  for (int g = 0; g < total.k(); ++g)
    for (Index x = 0; x < total.space().size(); ++x)
      if (pi.to_base[total.generator(g)[x]] != base.generator(g)[pi.to_base[x]])
        throw NotEquivariant("generator " + std::to_string(g) + " at index " + std::to_string(x));
}

inline PullbackCover pullback(const TowerSystem& t, const FactorMap& pi,
                              const SampledAction& a_total, const SampledAction& a_base) {
  require_equivariant(pi, a_total, a_base);
  PullbackCover out;
  out.n = t.n;
  out.k = t.k;
  auto box = detail::box_elements(t.n, t.k);
  out.sets.resize(t.bases.size());
  for (size_t i = 0; i < t.bases.size(); ++i) {
    out.sets[i].resize(box.size());
    for (size_t gi = 0; gi < box.size(); ++gi) {
      std::set<Index> img;
      for (Index u : t.bases[i]) img.insert(a_base.act(GroupElement{box[gi]}, u));
      for (Index x = 0; x < a_total.space().size(); ++x)
        if (img.count(pi.to_base[x])) out.sets[i][gi].push_back(x);
    }
  }
  return out;
}

struct PipelineResult {
  Observable g;
  EmbeddingReport report;
  WidimResult gate;
  std::vector<EmbeddingReport> tower_reports;
  std::vector<int> tower_retries;
  bool reassembly_exact = false;
  long extended_points = 0;  // indices filled by extension rather than reassembly
};

// End-to-end tower embedding: gate on widim of the dynamical metric, one
// eps-embedding per tower, reassembly over pullback towers, extension off
// the towers, and an all-pairs eta-injectivity scan of I_g x pi over the
// [0,n)^k window.
inline PipelineResult theorem2_pipeline(const SampledAction& a_total, const SampledAction& a_base,
                                        const FactorMap& pi, const TowerSystem& t, int L,
                                        const Observable& f, double eps, double delta, double eta,
                                        uint64_t seed, double lam = 0.0, double tau_eq = 1e-10) {
  int D1 = static_cast<int>(t.bases.size());
  if (f.m() != D1 * L) throw ParseError("observable dimension must be (D+1)*L");
  auto tower_verdict = verify_towers(t, a_base);
  if (!tower_verdict.ok)
    throw GateFailed("tower verification", std::to_string(tower_verdict.violations.size()) +
                                               " violation(s)");
  auto box = detail::box_elements(t.n, t.k);
  long nk = static_cast<long>(box.size());
  int npts = a_total.space().size();

  auto dn = dynamical_metric(a_total, t.n);
  auto spn = a_total.space().with_metric(std::move(dn));
  WidimOptions wopt;
  wopt.radius_grid = 16;  // full realized-distance grids are quadratic in points
  wopt.pair_lenses = false;  // upper bound from plain balls is enough for the gate
  auto gate = widim(spn, eps, lam, WidimMode::Greedy, wopt);
  if (2.0 * gate.order >= static_cast<double>(L) * nk)
    throw GateFailed("widim gate", "widim upper bound " + std::to_string(gate.order) +
                                       " not below L*n^k/2 = " + std::to_string(L * nk / 2.0));

  auto pb = pullback(t, pi, a_total, a_base);

  PipelineResult res{Observable::table({}), {}, gate, {}, {}, true, 0};
  std::vector<std::vector<double>> g_values(npts, std::vector<double>(D1 * L));
  for (int i = 0; i < D1; ++i) {
    // window map F_i(x) = (f_i(vx))_v over the box, f_i = slice i of f
    std::vector<std::vector<double>> F(npts, std::vector<double>(L * nk));
    for (Index x = 0; x < npts; ++x)
      for (long gi = 0; gi < nk; ++gi) {
        Index im = a_total.act(GroupElement{box[gi]}, x);
        for (int c = 0; c < L; ++c) F[x][gi * L + c] = f(im)[i * L + c];
      }
    auto emb = eps_embed(spn, Observable::table(F), eps, delta, gate.witness,
                         StreamRng::derive(seed, "pipeline_tower", i), 32, tau_eq);
    res.tower_reports.push_back(emb.report);
    res.tower_retries.push_back(emb.retries_used);

    // reassembly g_i(x) = slice v of G_i((-v)x) on the pullback towers
    std::vector<long> owner(npts, -1);
    for (long gi = 0; gi < nk; ++gi)
      for (Index x : pb.sets[i][gi]) {
        if (owner[x] >= 0)
          throw RegionOverlap("pullback translates overlap at index " + std::to_string(x));
        owner[x] = gi;
      }
    std::vector<Index> on_tower;
    std::vector<std::vector<double>> gi_on_tower;
    for (Index x = 0; x < npts; ++x) {
      if (owner[x] < 0) continue;
      GroupElement v{box[owner[x]]};
      Index root = a_total.act(-v, x);
      const auto& big = emb.g(root);
      std::vector<double> val(big.begin() + owner[x] * L, big.begin() + (owner[x] + 1) * L);
      on_tower.push_back(x);
      gi_on_tower.push_back(std::move(val));
      // exhaustive reassembly identity over the whole window
      for (long wi = 0; wi < nk; ++wi) {
        GroupElement w{box[wi]};
        Index xw = a_total.act(w + (-v), x);
        if (owner[xw] != wi) continue;  // xw resolved through a different translate
        Index root_w = a_total.act(-w, xw);
        for (int c = 0; c < L; ++c)
          if (emb.g(root_w)[wi * L + c] != big[wi * L + c]) res.reassembly_exact = false;
      }
    }
    std::vector<std::vector<double>> fi(npts, std::vector<double>(L));
    for (Index x = 0; x < npts; ++x)
      for (int c = 0; c < L; ++c) fi[x][c] = f(x)[i * L + c];
    res.extended_points += npts - static_cast<long>(on_tower.size());
    auto gi_full = tietze_extend(a_total.space(), on_tower, gi_on_tower,
                                 Observable::table(fi), delta);
    for (Index x = 0; x < npts; ++x)
      for (int c = 0; c < L; ++c) g_values[x][i * L + c] = gi_full(x)[c];
  }
  res.g = Observable::table(std::move(g_values));

  // all-pairs eta-injectivity of I_g x pi over the finite window
  res.report.eta = eta;
  res.report.window = nk;
  for (Index x = 0; x < npts; ++x)
    for (Index y = x + 1; y < npts; ++y) {
      double sep = pi.to_base[x] == pi.to_base[y]
                       ? 0.0
                       : a_base.space().dist(pi.to_base[x], pi.to_base[y]);
      for (long gi = 0; gi < nk; ++gi) {
        GroupElement v{box[gi]};
        sep = std::max(sep, linf(res.g(a_total.act(v, x)), res.g(a_total.act(v, y))));
      }
      if (sep < res.report.min_separation) res.report.min_separation = sep;
      if (a_total.space().dist(x, y) >= eta && sep < res.report.margin) {
        res.report.margin = sep;
        res.report.worst_pair = {x, y};
      }
    }
  res.report.eta_injective = res.report.margin > tau_eq;
  return res;
}

}  // namespace meandim

#endif  // MEANDIM_ROKHLIN_HPP
