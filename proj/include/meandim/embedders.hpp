#ifndef MEANDIM_EMBEDDERS_HPP
#define MEANDIM_EMBEDDERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "meandim/common.hpp"
#include "meandim/covers.hpp"
#include "meandim/genlin.hpp"
#include "meandim/systems.hpp"

namespace meandim {

// Continuous observable surrogate: a function from sample points to
// [0,1]^m, materialized as a per-index table. Parametric families record
// how the table was generated so runs are replayable from (family, seed).
class Observable {
 public:
  enum class Family { RandomTrig, PouAffine, Table };

  static Observable table(std::vector<std::vector<double>> values) {
    Observable o;
    o.family_ = Family::Table;
    o.m_ = values.empty() ? 0 : static_cast<int>(values[0].size());
    o.values_ = std::move(values);
    return o;
  }

  // Random trigonometric polynomial over the sample's coordinate
  // realization, normalized and clamped into [0,1]^m.
  static Observable random_trig(const SampledSpace& sp, int m, int degree, uint64_t seed) {
    if (!sp.has_coords()) throw ParseError("random_trig needs a coordinate realization");
    int cdim = static_cast<int>(sp.coords()[0].size());
    Observable o;
    o.family_ = Family::RandomTrig;
    o.m_ = m;
    o.seed_ = seed;
    o.degree_ = degree;
    o.values_.assign(sp.size(), std::vector<double>(m));
    double norm = 1.0 / (2.0 * degree * cdim);
    for (int j = 0; j < m; ++j) {
      StreamRng rng(seed, "trig_coeff", static_cast<uint64_t>(j));
      std::vector<double> ca(degree * cdim), cb(degree * cdim), phase(cdim);
      for (auto& v : ca) v = rng.uniform(-1.0, 1.0);
      for (auto& v : cb) v = rng.uniform(-1.0, 1.0);
      for (auto& v : phase) v = rng.uniform01();
      for (Index x = 0; x < sp.size(); ++x) {
        double acc = 0.5;
        for (int c = 0; c < cdim; ++c) {
          double pos = sp.coords()[x][c] + phase[c];
          for (int t = 1; t <= degree; ++t) {
            acc += norm * ca[(t - 1) * cdim + c] * std::cos(2.0 * M_PI * t * pos);
            acc += norm * cb[(t - 1) * cdim + c] * std::sin(2.0 * M_PI * t * pos);
          }
        }
        o.values_[x][j] = clamp01(acc);
      }
    }
    return o;
  }

  // Piecewise-affine observable from a partition of unity and per-set
  // vertex values in [0,1]^m.
  static Observable pou_affine(const PartitionOfUnity& pou,
                               const std::vector<std::vector<double>>& vertex_values) {
    if (vertex_values.size() != pou.weights.size())
      throw ParseError("vertex value count does not match partition of unity");
    int n = pou.weights.empty() ? 0 : static_cast<int>(pou.weights[0].size());
    int m = vertex_values.empty() ? 0 : static_cast<int>(vertex_values[0].size());
    Observable o;
    o.family_ = Family::PouAffine;
    o.m_ = m;
    o.values_.assign(n, std::vector<double>(m, 0.0));
    for (size_t w = 0; w < pou.weights.size(); ++w)
      for (Index x = 0; x < n; ++x)
        for (int j = 0; j < m; ++j) o.values_[x][j] += pou.weights[w][x] * vertex_values[w][j];
    for (auto& row : o.values_)
      for (auto& v : row) v = clamp01(v);
    return o;
  }

  int m() const { return m_; }
  int size() const { return static_cast<int>(values_.size()); }
  Family family() const { return family_; }
  uint64_t seed() const { return seed_; }
  int degree() const { return degree_; }
  const std::vector<double>& operator()(Index x) const { return values_[x]; }
  const std::vector<std::vector<double>>& values() const { return values_; }

 private:
  Family family_ = Family::Table;
  int m_ = 0;
  uint64_t seed_ = 0;
  int degree_ = 0;
  std::vector<std::vector<double>> values_;
};

// Concatenated observable outputs over a delay window; block i is an
// [0,1]^m slice, numbered from 0.
struct DelayVector {
  int m = 0;
  std::vector<double> payload;

  int blocks() const { return m > 0 ? static_cast<int>(payload.size()) / m : 0; }
  std::vector<double> block(int i) const {
    return std::vector<double>(payload.begin() + static_cast<long>(i) * m,
                               payload.begin() + static_cast<long>(i + 1) * m);
  }
  // slice v|_r^s as a flat payload
  DelayVector slice(int r, int s) const {
    DelayVector out;
    out.m = m;
    out.payload.assign(payload.begin() + static_cast<long>(r) * m,
                       payload.begin() + static_cast<long>(s + 1) * m);
    return out;
  }
};

inline double delay_dist(const DelayVector& a, const DelayVector& b) {
  return linf(a.payload, b.payload);
}

// Block k of the output repeats block (k mod input-blocks) of the input.
inline DelayVector repeat_block(const DelayVector& v, int target_blocks) {
  if (target_blocks < 1) throw ParseError("repeat_block target must be >= 1");
  DelayVector out;
  out.m = v.m;
  out.payload.reserve(static_cast<size_t>(target_blocks) * v.m);
  for (int k = 0; k < target_blocks; ++k) {
    auto b = v.block(k % v.blocks());
    out.payload.insert(out.payload.end(), b.begin(), b.end());
  }
  return out;
}

// x -> (h(x), h(Tx), ..., h(T^{2d}x)) for a Z-action.
inline std::vector<DelayVector> delay_map_Z(const SampledAction& a, const Observable& h, int d) {
  if (a.k() != 1) throw ParseError("delay_map_Z requires a Z-action");
  if (2L * d > a.horizon()) throw HorizonExceeded("delay window 2d exceeds horizon");
  int n = a.space().size();
  std::vector<DelayVector> out(n);
  for (Index x = 0; x < n; ++x) {
    out[x].m = h.m();
    Index cur = x;
    for (int t = 0; t <= 2 * d; ++t) {
      const auto& v = h(cur);
      out[x].payload.insert(out[x].payload.end(), v.begin(), v.end());
      cur = a.generator(0)[cur];
    }
  }
  return out;
}

// x -> (f(ix)) over the box [0,2d]^k in row-major order; k=1 agrees with
// delay_map_Z bit for bit.
inline std::vector<DelayVector> delay_map_Zk(const SampledAction& a, const Observable& f, int d) {
  if (2L * d > a.horizon()) throw HorizonExceeded("delay window 2d exceeds horizon");
  int n = a.space().size();
  int k = a.k();
  long side = 2L * d + 1;
  std::vector<DelayVector> out(n);
  for (Index x = 0; x < n; ++x) out[x].m = f.m();
  std::vector<long> g(k, 0);
  while (true) {
    GroupElement ge{std::vector<long>(g.begin(), g.end())};
    for (Index x = 0; x < n; ++x) {
      const auto& v = f(a.act(ge, x));
      out[x].payload.insert(out[x].payload.end(), v.begin(), v.end());
    }
    int axis = k - 1;
    while (axis >= 0 && ++g[axis] == side) g[axis--] = 0;
    if (axis < 0) break;
  }
  return out;
}

struct PairSet {
  std::vector<std::pair<Index, Index>> pairs;

  static PairSet all_pairs(int n) {
    PairSet p;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) p.pairs.push_back({i, j});
    return p;
  }
  void validate() const {
    for (auto [a, b] : pairs)
      if (a == b) throw ParseError("diagonal pair in PairSet");
  }
};

// Separation statistics certifying (eta-)injectivity of a candidate map.
struct EmbeddingReport {
  double min_separation = std::numeric_limits<double>::infinity();
  double eta = 0.0;
  double margin = std::numeric_limits<double>::infinity();  // min output gap over pairs with d >= eta
  bool eta_injective = true;
  std::pair<Index, Index> worst_pair{-1, -1};
  double sup_deviation = 0.0;  // used by constructions that approximate a target
  long window = 0;             // finite test window, where applicable
};

inline EmbeddingReport separation_report(const std::vector<DelayVector>& vectors,
                                         const SampledSpace& sp, const PairSet& pairs,
                                         double eta, double tau_eq = 1e-10) {
  pairs.validate();
  EmbeddingReport rep;
  rep.eta = eta;
  for (auto [x, y] : pairs.pairs) {
    double out = delay_dist(vectors[x], vectors[y]);
    if (out < rep.min_separation) rep.min_separation = out;
    if (sp.dist(x, y) >= eta && out < rep.margin) {
      rep.margin = out;
      rep.worst_pair = {x, y};
    }
  }
  if (pairs.pairs.empty()) rep.min_separation = rep.margin = 0.0;
  rep.eta_injective = pairs.pairs.empty() || rep.margin > tau_eq;
  return rep;
}

// Monte-Carlo surrogate for the genericity claims: rate of seeded random
// observables whose delay map separates all pairs at threshold eta.
struct GenericityResult {
  double rate = 0.0;
  int seeds = 0;
  std::string hypothesis_note;
};

inline GenericityResult genericity_experiment(const SampledAction& a, int d, int m, int degree,
                                              int seeds, double eta, uint64_t master_seed,
                                              double tau_eq = 1e-10) {
  GenericityResult res;
  res.seeds = seeds;
  auto table = period_table(a, 2L * d, d);
  long worst_pn = 0;
  for (long n = 1; n <= 2L * d; ++n) worst_pn = std::max<long>(worst_pn, table.P(n).size());
  res.hypothesis_note = "declared_dim=" +
                        (a.space().declared_dim() ? std::to_string(*a.space().declared_dim())
                                                  : std::string("unset")) +
                        " max|P_n| for n<=2d: " + std::to_string(worst_pn);
  auto pairs = PairSet::all_pairs(a.space().size());
  int ok = 0;
  for (int s = 0; s < seeds; ++s) {
    uint64_t obs_seed = StreamRng::derive(master_seed, "genericity_observable", s);
    auto h = Observable::random_trig(a.space(), m, degree, obs_seed);
    auto vecs = a.k() == 1 ? delay_map_Z(a, h, d) : delay_map_Zk(a, h, d);
    auto rep = separation_report(vecs, a.space(), pairs, eta, tau_eq);
    if (rep.eta_injective) ++ok;
  }
  res.rate = seeds > 0 ? static_cast<double>(ok) / seeds : 1.0;
  return res;
}

// --- eps-embedding construction -------------------------------------------

struct EpsEmbedResult {
  Observable g;
  EmbeddingReport report;
  int retries_used = 0;
};

// Constructive eps-embedding: g = sum_W psi_W(.) v_W with v_W a perturbed
// anchor value of f. Affine independence of the vertex values across pairs
// of point supports certifies that equal outputs force shared supports,
// hence distance below the cover mesh.
inline EpsEmbedResult eps_embed(const SampledSpace& sp, const Observable& f, double eps,
                                double delta, const Cover& cover, uint64_t seed,
                                int max_retries = 32, double tau_eq = 1e-10,
                                double rank_tol = 1e-8) {
  int n = sp.size();
  int m = f.m();
  cover.validate(n);
  if (mesh(cover, sp) > eps + 1e-12)
    throw PreconditionFailed("cover mesh exceeds eps");
  if (2 * order(cover, n) >= m)
    throw PreconditionFailed("cover order " + std::to_string(order(cover, n)) +
                             " violates order < m/2 with m = " + std::to_string(m));
  for (Index x = 0; x < n; ++x)
    for (Index y = x + 1; y < n; ++y)
      if (sp.dist(x, y) < eps && linf(f(x), f(y)) >= delta)
        throw PreconditionFailed("f is not (eps,delta)-uniform: pair " + std::to_string(x) +
                                 "," + std::to_string(y));

  auto pou = partition_of_unity(cover, sp);
  // distinct point supports, for the general-position certificates
  std::set<std::vector<int>> support_set;
  std::vector<std::vector<int>> point_support(n);
  for (Index x = 0; x < n; ++x) {
    for (int s = 0; s < cover.count(); ++s)
      if (pou.weights[s][x] > 0.0) point_support[x].push_back(s);
    support_set.insert(point_support[x]);
  }
  std::vector<std::vector<int>> supports(support_set.begin(), support_set.end());

  double rho = std::min(delta / 4.0, 0.05);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    StreamRng rng(seed, "eps_embed_vertices", static_cast<uint64_t>(attempt));
    std::vector<std::vector<double>> vertex(cover.count());
    for (int s = 0; s < cover.count(); ++s) {
      vertex[s] = f(pou.anchors[s]);
      for (auto& v : vertex[s]) v = clamp01(v + rng.uniform(-rho, rho));
    }
    auto g = Observable::pou_affine(pou, vertex);

    double sup_dev = 0.0;
    for (Index x = 0; x < n; ++x) sup_dev = std::max(sup_dev, linf(g(x), f(x)));
    if (sup_dev >= delta) {
      rho *= 0.5;
      continue;
    }
    // general position: unions of support pairs small enough must be
    // affinely independent
    bool general = true;
    for (size_t i = 0; i < supports.size() && general; ++i)
      for (size_t j = i; j < supports.size() && general; ++j) {
        std::vector<int> u;
        std::set_union(supports[i].begin(), supports[i].end(), supports[j].begin(),
                       supports[j].end(), std::back_inserter(u));
        if (static_cast<int>(u.size()) > m + 1) continue;
        Eigen::MatrixXd cols(m, u.size());
        for (size_t t = 0; t < u.size(); ++t)
          for (int r = 0; r < m; ++r) cols(r, t) = vertex[u[t]][r];
        if (!affinely_independent(VectorFamily{cols}, rank_tol)) general = false;
      }
    if (!general) continue;

    // empirical eps-injectivity over all pairs
    EmbeddingReport rep;
    rep.eta = eps;
    rep.sup_deviation = sup_dev;
    bool ok = true;
    for (Index x = 0; x < n && ok; ++x)
      for (Index y = x + 1; y < n; ++y) {
        double out = linf(g(x), g(y));
        rep.min_separation = std::min(rep.min_separation, out);
        if (sp.dist(x, y) >= eps) {
          if (out < rep.margin) {
            rep.margin = out;
            rep.worst_pair = {x, y};
          }
          if (out <= tau_eq) {
            ok = false;
            break;
          }
        }
      }
    if (!ok) continue;
    rep.eta_injective = true;
    return EpsEmbedResult{std::move(g), rep, attempt};
  }
  throw GeneralPositionExhausted("eps_embed retry budget exhausted");
}

// --- local Takens constructions (Cases A, B, C) ----------------------------

enum class TakensCase { A, B, C };

// Closed regions and covers feeding a local construction. Covers are given
// in whole-sample indices and must cover exactly the region.
struct LocalRegion {
  TakensCase takens_case = TakensCase::A;
  std::vector<Index> region_x;  // closure of U_x (Cases B, C: the single U)
  std::vector<Index> region_y;  // Case A only
  long shift = 0;               // l, Cases B and C
  Cover cover_x;
  Cover cover_y;                // Case A only
};

struct TakensVerification {
  bool anchors_close = false;      // property (1)/(a)/(i)
  bool convex_hull = false;        // property (2)/(b)/(ii), structural + numeric spot check
  bool separation = false;         // property (3)/(c)/(iii), exhaustive
  double worst_separation = 0.0;
  std::pair<Index, Index> witness{-1, -1};
  double f_prime_sup_dev = 0.0;    // ||f' - f~||_inf on the tower union
  int retries_used = 0;
};

struct TakensResult {
  std::vector<DelayVector> F_x;  // indexed by position in region_x
  std::vector<DelayVector> F_y;  // Case A only
  std::vector<Index> domain;     // tower union A
  std::vector<std::vector<double>> f_prime;  // values on `domain`, aligned
  TakensVerification verification;
};

namespace detail {

struct SubSpace {
  SampledSpace space;
  std::vector<Index> to_global;
  std::map<Index, int> to_local;
};

inline SubSpace subspace(const SampledSpace& sp, const std::vector<Index>& idx) {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> dist(idx.size(), std::vector<double>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) {
    labels.push_back(sp.labels()[idx[i]]);
    for (size_t j = 0; j < idx.size(); ++j) dist[i][j] = sp.dist(idx[i], idx[j]);
  }
  SubSpace out{SampledSpace(std::move(labels), std::move(dist)), idx, {}};
  for (size_t i = 0; i < idx.size(); ++i) out.to_local[idx[i]] = static_cast<int>(i);
  return out;
}

inline Cover localize_cover(const Cover& c, const SubSpace& sub) {
  Cover out;
  for (const auto& s : c.sets) {
    std::vector<Index> loc;
    for (Index g : s) {
      auto it = sub.to_local.find(g);
      if (it == sub.to_local.end()) throw PreconditionFailed("cover set leaves its region");
      loc.push_back(it->second);
    }
    std::sort(loc.begin(), loc.end());
    out.sets.push_back(std::move(loc));
  }
  return out;
}

inline void require_iterates_disjoint(const SampledAction& a,
                                      const std::vector<std::pair<std::vector<Index>, long>>& towers) {
  std::set<Index> seen;
  for (const auto& [base, height] : towers) {
    for (long t = 0; t < height; ++t) {
      for (Index x : base) {
        GroupElement g{{t}};
        Index im = a.act(g, x);
        if (!seen.insert(im).second)
          throw RegionOverlap("tower iterates intersect at index " + std::to_string(im));
      }
    }
  }
}

}  // namespace detail

// Case A: F_x(x') must differ from the block-repetition of F_y(y').
// Case B: some slice i < p~ has F(x')|_i != F(y')|_{(i+l) mod p}.
// Case C: F(x')|_0^{2d} != F(y')|_l^{l+2d}.
inline TakensResult takens_local_construct(const LocalRegion& region, const SampledAction& a,
                                           int d, const Observable& f_tilde, double eps,
                                           uint64_t seed, int max_retries = 32,
                                           double tau_eq = 1e-10) {
  if (a.k() != 1) throw ParseError("takens_local_construct requires a Z-action");
  int m = f_tilde.m();
  const auto& sp = a.space();
  auto ptable = period_table(a, 4L * (d + 1) + std::abs(region.shift) + 4, d);

  auto uniform_adjusted_period = [&](const std::vector<Index>& reg) {
    long p = ptable.adjusted_period[reg.at(0)];
    for (Index x : reg)
      if (ptable.adjusted_period[x] != p)
        throw PreconditionFailed("region has mixed adjusted periods");
    return p;
  };

  TakensResult res;
  if (region.takens_case == TakensCase::A) {
    if (region.region_x.empty() || region.region_y.empty())
      throw PreconditionFailed("Case A needs both regions");
    {
      std::set<Index> rx(region.region_x.begin(), region.region_x.end());
      for (Index y : region.region_y)
        if (rx.count(y)) throw RegionOverlap("region_x and region_y share index " + std::to_string(y));
    }
    long px = uniform_adjusted_period(region.region_x);
    long py = uniform_adjusted_period(region.region_y);
    if (px < py) throw PreconditionFailed("expects adjusted period of x-region >= y-region");
    detail::require_iterates_disjoint(a, {{region.region_x, px}, {region.region_y, py}});

    auto sub_x = detail::subspace(sp, region.region_x);
    auto sub_y = detail::subspace(sp, region.region_y);
    Cover cx = detail::localize_cover(region.cover_x, sub_x);
    Cover cy = detail::localize_cover(region.cover_y, sub_y);
    if (2 * (order(cx, sub_x.space.size()) + 1) > px * m)
      throw OrderBoundViolated("x-cover order bound ord < p~m/2 fails");
    if (2 * (order(cy, sub_y.space.size()) + 1) > py * m)
      throw OrderBoundViolated("y-cover order bound ord < p~m/2 fails");
    auto pou_x = partition_of_unity(cx, sub_x.space);
    auto pou_y = partition_of_unity(cy, sub_y.space);

    auto anchor_track = [&](const detail::SubSpace& sub, const PartitionOfUnity& pou, int s,
                            long height) {
      std::vector<double> v;
      Index q = sub.to_global[pou.anchors[s]];
      for (long t = 0; t < height; ++t) {
        const auto& fv = f_tilde(a.act(GroupElement{{t}}, q));
        v.insert(v.end(), fv.begin(), fv.end());
      }
      return v;
    };
    std::vector<std::vector<double>> vy(cy.count());
    for (int s = 0; s < cy.count(); ++s) vy[s] = anchor_track(sub_y, pou_y, s, py);

    for (int attempt = 0; attempt < max_retries; ++attempt) {
      StreamRng rng(seed, "takens_case_a", static_cast<uint64_t>(attempt));
      std::vector<std::vector<double>> vx(cx.count());
      for (int s = 0; s < cx.count(); ++s) {
        vx[s] = anchor_track(sub_x, pou_x, s, px);
        for (auto& v : vx[s]) v = clamp01(v + rng.uniform(-eps / 2.0, eps / 2.0) * 0.999);
      }
      auto blend = [&](const PartitionOfUnity& pou, const std::vector<std::vector<double>>& vv,
                       int npts) {
        std::vector<DelayVector> F(npts);
        for (int x = 0; x < npts; ++x) {
          F[x].m = m;
          F[x].payload.assign(vv[0].size(), 0.0);
          for (size_t s = 0; s < vv.size(); ++s)
            for (size_t c = 0; c < vv[s].size(); ++c)
              F[x].payload[c] += pou.weights[s][x] * vv[s][c];
        }
        return F;
      };
      res.F_x = blend(pou_x, vx, sub_x.space.size());
      res.F_y = blend(pou_y, vy, sub_y.space.size());

      bool sep = true;
      std::pair<Index, Index> witness{-1, -1};
      double worst = std::numeric_limits<double>::infinity();
      for (size_t xi = 0; xi < res.F_x.size() && sep; ++xi)
        for (size_t yi = 0; yi < res.F_y.size(); ++yi) {
          double gap = delay_dist(res.F_x[xi], repeat_block(res.F_y[yi], static_cast<int>(px)));
          if (gap < worst) {
            worst = gap;
            witness = {sub_x.to_global[xi], sub_y.to_global[yi]};
          }
          if (gap <= tau_eq) {
            sep = false;
            break;
          }
        }
      res.verification.worst_separation = worst;
      res.verification.witness = witness;
      res.verification.retries_used = attempt;
      if (!sep) continue;
      res.verification.separation = true;
      break;
    }
    if (!res.verification.separation)
      throw SeparationFailed("Case A separation failed after retry budget; witness " +
                             std::to_string(res.verification.witness.first) + "," +
                             std::to_string(res.verification.witness.second));
    // anchor property and assembled f'
    res.verification.anchors_close = true;
    for (int s = 0; s < cx.count(); ++s) {
      auto target = anchor_track(sub_x, pou_x, s, px);
      if (linf(res.F_x[pou_x.anchors[s]].payload, target) >= eps / 2.0)
        res.verification.anchors_close = false;
    }
    res.verification.convex_hull = true;  // F is a PoU blend of its anchor values by construction
    for (size_t xi = 0; xi < res.F_x.size(); ++xi)
      for (long t = 0; t < px; ++t) {
        res.domain.push_back(a.act(GroupElement{{t}}, sub_x.to_global[xi]));
        res.f_prime.push_back(res.F_x[xi].block(static_cast<int>(t)));
      }
    for (size_t yi = 0; yi < res.F_y.size(); ++yi)
      for (long t = 0; t < py; ++t) {
        res.domain.push_back(a.act(GroupElement{{t}}, sub_y.to_global[yi]));
        res.f_prime.push_back(res.F_y[yi].block(static_cast<int>(t)));
      }
  } else {
    // Cases B and C share the single-region scaffolding
    if (region.region_x.empty()) throw PreconditionFailed("region is empty");
    bool case_b = region.takens_case == TakensCase::B;
    long l = region.shift;
    long height;  // number of T-iterates that must stay disjoint
    long p = 0, ptilde = 0;
    if (case_b) {
      if (l < 1) throw PreconditionFailed("Case B needs shift l >= 1");
      p = ptable.period[region.region_x.at(0)];
      if (p == kInfinitePeriod) throw PreconditionFailed("Case B region must be periodic");
      for (Index x : region.region_x)
        if (ptable.period[x] != p) throw PreconditionFailed("Case B region has mixed periods");
      if (l > p - 1) throw PreconditionFailed("Case B needs 1 <= l <= p-1");
      ptilde = std::min<long>(2L * d + 1, p);
      height = p;
    } else {
      if (l < 1) throw PreconditionFailed("Case C needs shift l >= 1");
      for (Index x : region.region_x)
        if (ptable.period[x] != kInfinitePeriod)
          throw PreconditionFailed("Case C region must be aperiodic within horizon");
      height = l + 2L * d + 1;
    }
    detail::require_iterates_disjoint(a, {{region.region_x, height}});

    auto sub = detail::subspace(sp, region.region_x);
    Cover c = detail::localize_cover(region.cover_x, sub);
    long bound_blocks = case_b ? ptilde : 2L * d + 1;
    if (2 * (order(c, sub.space.size()) + 1) > bound_blocks * m)
      throw OrderBoundViolated("cover order bound fails");
    auto pou = partition_of_unity(c, sub.space);

    auto anchor_track = [&](int s) {
      std::vector<double> v;
      Index q = sub.to_global[pou.anchors[s]];
      for (long t = 0; t < height; ++t) {
        const auto& fv = f_tilde(a.act(GroupElement{{t}}, q));
        v.insert(v.end(), fv.begin(), fv.end());
      }
      return v;
    };

    for (int attempt = 0; attempt < max_retries; ++attempt) {
      StreamRng rng(seed, case_b ? "takens_case_b" : "takens_case_c",
                    static_cast<uint64_t>(attempt));
      std::vector<std::vector<double>> vv(c.count());
      for (int s = 0; s < c.count(); ++s) {
        vv[s] = anchor_track(s);
        for (auto& v : vv[s]) v = clamp01(v + rng.uniform(-eps / 2.0, eps / 2.0) * 0.999);
      }
      res.F_x.assign(sub.space.size(), {});
      for (int x = 0; x < sub.space.size(); ++x) {
        res.F_x[x].m = m;
        res.F_x[x].payload.assign(vv[0].size(), 0.0);
        for (int s = 0; s < c.count(); ++s)
          for (size_t cc = 0; cc < vv[s].size(); ++cc)
            res.F_x[x].payload[cc] += pou.weights[s][x] * vv[s][cc];
      }
      bool sep = true;
      double worst = std::numeric_limits<double>::infinity();
      std::pair<Index, Index> witness{-1, -1};
      for (int xi = 0; xi < sub.space.size() && sep; ++xi)
        for (int yi = 0; yi < sub.space.size(); ++yi) {
          double gap;
          if (case_b) {
            gap = 0.0;
            for (long i = 0; i < ptilde; ++i) {
              auto bx = res.F_x[xi].block(static_cast<int>(i));
              auto by = res.F_x[yi].block(static_cast<int>((i + l) % p));
              gap = std::max(gap, linf(bx, by));
            }
          } else {
            gap = delay_dist(res.F_x[xi].slice(0, 2 * d),
                             res.F_x[yi].slice(static_cast<int>(l), static_cast<int>(l) + 2 * d));
          }
          if (gap < worst) {
            worst = gap;
            witness = {sub.to_global[xi], sub.to_global[yi]};
          }
          if (gap <= tau_eq) {
            sep = false;
            break;
          }
        }
      res.verification.worst_separation = worst;
      res.verification.witness = witness;
      res.verification.retries_used = attempt;
      if (!sep) continue;
      res.verification.separation = true;
      res.verification.anchors_close = true;
      for (int s = 0; s < c.count(); ++s)
        if (linf(res.F_x[pou.anchors[s]].payload, anchor_track(s)) >= eps / 2.0)
          res.verification.anchors_close = false;
      res.verification.convex_hull = true;
      break;
    }
    if (!res.verification.separation)
      throw SeparationFailed("separation failed after retry budget; witness " +
                             std::to_string(res.verification.witness.first) + "," +
                             std::to_string(res.verification.witness.second));
    for (int xi = 0; xi < sub.space.size(); ++xi)
      for (long t = 0; t < height; ++t) {
        res.domain.push_back(a.act(GroupElement{{t}}, sub.to_global[xi]));
        res.f_prime.push_back(res.F_x[xi].block(static_cast<int>(t)));
      }
  }

  double dev = 0.0;
  for (size_t i = 0; i < res.domain.size(); ++i)
    dev = std::max(dev, linf(res.f_prime[i], f_tilde(res.domain[i])));
  res.verification.f_prime_sup_dev = dev;
  return res;
}

// --- Tietze-style extension -------------------------------------------------

// Extends values on B to the whole sample, exact on B, within eps of f~
// everywhere: inverse-distance blend toward the B-values, with the blend
// radius shrunk until the sup bound holds.
inline Observable tietze_extend(const SampledSpace& sp, const std::vector<Index>& B,
                                const std::vector<std::vector<double>>& f_on_B,
                                const Observable& f_tilde, double eps) {
  if (B.size() != f_on_B.size()) throw ParseError("B and f_on_B size mismatch");
  int n = sp.size();
  int m = f_tilde.m();
  std::map<Index, int> in_b;
  for (size_t i = 0; i < B.size(); ++i) {
    if (linf(f_on_B[i], f_tilde(B[i])) >= eps)
      throw PreconditionFailed("f_on_B deviates from f~ by >= eps on B");
    in_b[B[i]] = static_cast<int>(i);
  }
  double rho = sp.diameter();
  for (int shrink = 0; shrink < 64; ++shrink) {
    std::vector<std::vector<double>> out(n);
    for (Index x = 0; x < n; ++x) {
      auto it = in_b.find(x);
      if (it != in_b.end()) {
        out[x] = f_on_B[it->second];
        continue;
      }
      out[x] = f_tilde(x);
      if (B.empty()) continue;
      double d_to_b = std::numeric_limits<double>::infinity();
      double wsum = 0.0;
      std::vector<double> blend(m, 0.0);
      for (size_t i = 0; i < B.size(); ++i) {
        double dxb = sp.dist(x, B[i]);
        d_to_b = std::min(d_to_b, dxb);
        double w = 1.0 / (dxb * dxb);
        wsum += w;
        for (int j = 0; j < m; ++j) blend[j] += w * f_on_B[i][j];
      }
      double phi = rho > 0.0 ? std::max(0.0, 1.0 - d_to_b / rho) : 0.0;
      for (int j = 0; j < m; ++j)
        out[x][j] = clamp01(out[x][j] + phi * (blend[j] / wsum - out[x][j]));
    }
    double dev = 0.0;
    for (Index x = 0; x < n; ++x) dev = std::max(dev, linf(out[x], f_tilde(x)));
    if (dev < eps) return Observable::table(std::move(out));
    rho *= 0.5;
  }
  throw PreconditionFailed("tietze_extend could not meet the sup bound");
}

}  // namespace meandim

#endif  // MEANDIM_EMBEDDERS_HPP
