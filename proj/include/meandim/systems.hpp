#ifndef MEANDIM_SYSTEMS_HPP
#define MEANDIM_SYSTEMS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "meandim/common.hpp"

namespace meandim {

using Index = int;

// Element of Z^k, componentwise arithmetic.
struct GroupElement {
  std::vector<long> coords;

  static GroupElement zero(int k) { return GroupElement{std::vector<long>(k, 0)}; }
  int k() const { return static_cast<int>(coords.size()); }

  GroupElement operator+(const GroupElement& o) const {
    GroupElement r = *this;
    for (int i = 0; i < k(); ++i) r.coords[i] += o.coords[i];
    return r;
  }
  GroupElement operator-() const {
    GroupElement r = *this;
    for (auto& c : r.coords) c = -c;
    return r;
  }
  bool operator==(const GroupElement& o) const { return coords == o.coords; }
};

// Finite point sample standing in for a compact metric space.
// `coords` is an optional geometric realization used by parametric
// observable families; the metric matrix is authoritative.
class SampledSpace {
 public:
  SampledSpace(std::vector<std::string> labels, std::vector<std::vector<double>> dist,
               std::optional<int> declared_dim = std::nullopt, double tau_tri = 1e-9)
      : labels_(std::move(labels)), dist_(std::move(dist)), declared_dim_(declared_dim) {
    validate(tau_tri);
  }

  int size() const { return static_cast<int>(dist_.size()); }
  double dist(Index i, Index j) const { return dist_[i][j]; }
  const std::vector<std::vector<double>>& dist_matrix() const { return dist_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<int> declared_dim() const { return declared_dim_; }

  const std::vector<std::vector<double>>& coords() const { return coords_; }
  bool has_coords() const { return !coords_.empty(); }
  void set_coords(std::vector<std::vector<double>> c) {
    if (static_cast<int>(c.size()) != size())
      throw ParseError("coords size does not match point count");
    coords_ = std::move(c);
  }

  double diameter() const {
    double m = 0.0;
    for (const auto& row : dist_)
      for (double v : row) m = std::max(m, v);
    return m;
  }

  double min_gap() const {
    double m = std::numeric_limits<double>::infinity();
    int n = size();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) m = std::min(m, dist_[i][j]);
    return m;
  }

  // Replace the metric (used to equip a sample with a dynamical metric);
  // labels, coords and declared_dim are preserved.
  SampledSpace with_metric(std::vector<std::vector<double>> d) const {
    SampledSpace s(labels_, std::move(d), declared_dim_);
    s.coords_ = coords_;
    return s;
  }

 private:
  void validate(double tau_tri) const {
    int n = size();
    if (n == 0) throw ParseError("empty sample");
    if (static_cast<int>(labels_.size()) != n) throw ParseError("label/dist size mismatch");
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(dist_[i].size()) != n) throw ParseError("dist matrix not square");
      if (dist_[i][i] != 0.0) throw ParseError("dist(i,i) != 0");
      for (int j = 0; j < n; ++j) {
        if (dist_[i][j] < 0.0) throw ParseError("negative distance");
        if (std::abs(dist_[i][j] - dist_[j][i]) > tau_tri) throw ParseError("dist not symmetric");
        if (i != j && dist_[i][j] == 0.0) throw ParseError("distinct points at distance 0");
      }
    }
    // exhaustive triangle check is cubic; above 400 points spot-check a
    // fixed pseudorandom set of triples instead
    if (n <= 400) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l)
            if (dist_[i][j] > dist_[i][l] + dist_[l][j] + tau_tri)
              throw ParseError("triangle inequality violated beyond tau_tri");
    } else {
      uint64_t s = 0x9e3779b97f4a7c15ULL;
      auto next = [&s] {
        s += 0x9e3779b97f4a7c15ULL;
        uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
      };
      for (long t = 0; t < 2'000'000; ++t) {
        int i = static_cast<int>(next() % n), j = static_cast<int>(next() % n),
            l = static_cast<int>(next() % n);
        if (dist_[i][j] > dist_[i][l] + dist_[l][j] + tau_tri)
          throw ParseError("triangle inequality violated beyond tau_tri");
      }
    }
  }

  std::vector<std::string> labels_;
  std::vector<std::vector<double>> dist_;
  std::optional<int> declared_dim_;
  std::vector<std::vector<double>> coords_;
};

enum class ClosurePolicy { ExactClosed, NearestSnap };

// Z^k-action on a sample: k commuting index bijections.
class SampledAction {
 public:
  SampledAction(SampledSpace space, std::vector<std::vector<Index>> generators,
                long horizon = 4096, ClosurePolicy policy = ClosurePolicy::ExactClosed,
                double snap_error = 0.0)
      : space_(std::move(space)), gens_(std::move(generators)), horizon_(horizon),
        policy_(policy), snap_error_(snap_error) {
    int n = space_.size();
    for (const auto& g : gens_) {
      if (static_cast<int>(g.size()) != n) throw ParseError("generator size mismatch");
      std::vector<char> seen(n, 0);
      for (Index im : g) {
        if (im < 0 || im >= n || seen[im]) throw ParseError("generator is not a bijection");
        seen[im] = 1;
      }
    }
    inv_.resize(gens_.size(), std::vector<Index>(n));
    for (size_t gi = 0; gi < gens_.size(); ++gi)
      for (Index x = 0; x < n; ++x) inv_[gi][gens_[gi][x]] = x;
  }

  const SampledSpace& space() const { return space_; }
  int k() const { return static_cast<int>(gens_.size()); }
  long horizon() const { return horizon_; }
  double snap_error() const { return snap_error_; }
  ClosurePolicy closure_policy() const { return policy_; }
  const std::vector<Index>& generator(int i) const { return gens_[i]; }

  Index act(const GroupElement& g, Index x) const {
    if (g.k() != k()) throw ParseError("group element rank mismatch");
    for (long c : g.coords)
      if (std::abs(c) > horizon_)
        throw HorizonExceeded("|g_i| = " + std::to_string(std::abs(c)) + " beyond horizon " +
                              std::to_string(horizon_));
    Index cur = x;
    for (int i = 0; i < k(); ++i) {
      long c = g.coords[i];
      const auto& table = c >= 0 ? gens_[i] : inv_[i];
      for (long t = 0; t < std::abs(c); ++t) cur = table[cur];
    }
    return cur;
  }

  struct CommutationResult {
    bool ok = true;
    int gen_a = -1, gen_b = -1;
    Index witness = -1;
  };

  CommutationResult check_commutation() const {
    CommutationResult r;
    int n = space_.size();
    for (int a = 0; a < k(); ++a)
      for (int b = a + 1; b < k(); ++b)
        for (Index x = 0; x < n; ++x)
          if (gens_[a][gens_[b][x]] != gens_[b][gens_[a][x]]) {
            r.ok = false;
            r.gen_a = a;
            r.gen_b = b;
            r.witness = x;
            return r;
          }
    return r;
  }

  void require_commuting() const {
    auto r = check_commutation();
    if (!r.ok)
      throw NonCommuting("generators " + std::to_string(r.gen_a) + "," + std::to_string(r.gen_b) +
                         " disagree at index " + std::to_string(r.witness));
  }

 private:
  SampledSpace space_;
  std::vector<std::vector<Index>> gens_;
  std::vector<std::vector<Index>> inv_;
  long horizon_;
  ClosurePolicy policy_;
  double snap_error_;
};

// d_[n](x,y) = max over g in the box [0,n)^k of d(gx, gy).
inline std::vector<std::vector<double>> dynamical_metric(const SampledAction& a, long n) {
  if (n < 1) throw ParseError("dynamical_metric requires n >= 1");
  if (n - 1 > a.horizon()) throw HorizonExceeded("dynamical metric box exceeds horizon");
  int npts = a.space().size();
  int k = a.k();
  // Per-axis power tables up to n-1 applications.
  std::vector<std::vector<std::vector<Index>>> pow(k);
  for (int i = 0; i < k; ++i) {
    pow[i].resize(n);
    pow[i][0].resize(npts);
    std::iota(pow[i][0].begin(), pow[i][0].end(), 0);
    for (long t = 1; t < n; ++t) {
      pow[i][t].resize(npts);
      for (Index x = 0; x < npts; ++x) pow[i][t][x] = a.generator(i)[pow[i][t - 1][x]];
    }
  }
  std::vector<std::vector<double>> out(npts, std::vector<double>(npts, 0.0));
  std::vector<long> g(k, 0);
  std::vector<Index> image(npts);
  while (true) {
    for (Index x = 0; x < npts; ++x) {
      Index cur = x;
      for (int i = 0; i < k; ++i) cur = pow[i][g[i]][cur];
      image[x] = cur;
    }
    for (Index x = 0; x < npts; ++x)
      for (Index y = x + 1; y < npts; ++y) {
        double d = a.space().dist(image[x], image[y]);
        if (d > out[x][y]) out[x][y] = out[y][x] = d;
      }
    int axis = k - 1;
    while (axis >= 0 && ++g[axis] == n) g[axis--] = 0;
    if (axis < 0) break;
  }
  return out;
}

constexpr long kInfinitePeriod = -1;

// Periods, adjusted periods and the P_n / H_n index sets.
// For k >= 2 the period of x is the index of the diagonal stabilizer box
// diag(p_1..p_k) Z^k, with p_i the per-axis return time; full subgroup
// lattices are out of scope.
struct PeriodTable {
  long n_max = 0;
  int d = 0;
  std::vector<long> period;           // p_x, kInfinitePeriod when unresolved
  std::vector<long> adjusted_period;  // min(2d+1, p_x)

  std::vector<Index> P(long n) const {
    std::vector<Index> out;
    for (Index x = 0; x < static_cast<Index>(period.size()); ++x)
      if (period[x] != kInfinitePeriod && period[x] <= n) out.push_back(x);
    return out;
  }
  std::vector<Index> H(long n) const {
    std::vector<Index> out;
    for (Index x = 0; x < static_cast<Index>(period.size()); ++x)
      if (period[x] == n) out.push_back(x);
    return out;
  }
  std::vector<Index> aperiodic() const {
    std::vector<Index> out;
    for (Index x = 0; x < static_cast<Index>(period.size()); ++x)
      if (period[x] == kInfinitePeriod) out.push_back(x);
    return out;
  }
};

inline PeriodTable period_table(const SampledAction& a, long n_max, int d) {
  int npts = a.space().size();
  PeriodTable t;
  t.n_max = n_max;
  t.d = d;
  t.period.assign(npts, kInfinitePeriod);
  t.adjusted_period.assign(npts, 2L * d + 1);
  std::vector<long> axis_period(a.k());
  for (Index x = 0; x < npts; ++x) {
    bool finite = true;
    for (int i = 0; i < a.k() && finite; ++i) {
      Index cur = x;
      axis_period[i] = kInfinitePeriod;
      for (long s = 1; s <= n_max; ++s) {
        cur = a.generator(i)[cur];
        if (cur == x) {
          axis_period[i] = s;
          break;
        }
      }
      if (axis_period[i] == kInfinitePeriod) finite = false;
    }
    if (finite) {
      long p = 1;
      for (long ap : axis_period) p *= ap;
      if (p <= n_max || a.k() == 1) t.period[x] = p;
      // a product of axis periods above n_max stays unresolved for k >= 2
      if (a.k() >= 2 && p > n_max) t.period[x] = kInfinitePeriod;
    }
    if (t.period[x] != kInfinitePeriod)
      t.adjusted_period[x] = std::min<long>(2L * d + 1, t.period[x]);
  }
  return t;
}

// --- Built-in sampled systems -------------------------------------------

inline double circle_dist(double a, double b) {
  double d = std::abs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

// Circle rotation by alpha on N uniform sample points; the rotation is
// snapped to the nearest lattice shift and the snap error recorded.
inline SampledAction make_circle_rotation(double alpha, int n_points, long horizon = 4096) {
  if (n_points < 2) throw ParseError("circle rotation needs >= 2 sample points");
  std::vector<std::string> labels(n_points);
  std::vector<std::vector<double>> dist(n_points, std::vector<double>(n_points));
  std::vector<std::vector<double>> coords(n_points);
  for (int i = 0; i < n_points; ++i) {
    labels[i] = "theta" + std::to_string(i);
    coords[i] = {static_cast<double>(i) / n_points};
    for (int j = 0; j < n_points; ++j)
      dist[i][j] = circle_dist(static_cast<double>(i) / n_points, static_cast<double>(j) / n_points);
  }
  double shift_real = alpha * n_points;
  long shift = std::lround(shift_real - std::floor(shift_real / n_points) * n_points) % n_points;
  double snap = std::abs(shift_real - std::lround(shift_real)) / n_points;
  std::vector<Index> gen(n_points);
  for (int i = 0; i < n_points; ++i) gen[i] = static_cast<Index>((i + shift) % n_points);
  SampledSpace sp(std::move(labels), std::move(dist), 1);
  sp.set_coords(std::move(coords));
  return SampledAction(std::move(sp), {std::move(gen)}, horizon, ClosurePolicy::NearestSnap, snap);
}

// Z^k rotation on the k-torus sampled on a uniform grid^k; sup metric of
// per-axis circle metrics.
inline SampledAction make_torus_rotation(const std::vector<double>& alphas, int grid,
                                         long horizon = 4096) {
  int k = static_cast<int>(alphas.size());
  if (k < 1 || grid < 2) throw ParseError("torus rotation needs k >= 1, grid >= 2");
  long npts = 1;
  for (int i = 0; i < k; ++i) npts *= grid;
  std::vector<std::string> labels(npts);
  std::vector<std::vector<double>> coords(npts, std::vector<double>(k));
  auto unflatten = [&](long idx, int axis) {
    for (int i = k - 1; i > axis; --i) idx /= grid;
    return idx % grid;
  };
  for (long p = 0; p < npts; ++p) {
    std::string lab;
    for (int i = 0; i < k; ++i) {
      long c = unflatten(p, i);
      coords[p][i] = static_cast<double>(c) / grid;
      lab += (i ? "," : "") + std::to_string(c);
    }
    labels[p] = lab;
  }
  std::vector<std::vector<double>> dist(npts, std::vector<double>(npts));
  for (long p = 0; p < npts; ++p)
    for (long q = 0; q < npts; ++q) {
      double m = 0.0;
      for (int i = 0; i < k; ++i) m = std::max(m, circle_dist(coords[p][i], coords[q][i]));
      dist[p][q] = m;
    }
  double snap = 0.0;
  std::vector<std::vector<Index>> gens(k, std::vector<Index>(npts));
  std::vector<long> strides(k, 1);
  for (int i = k - 2; i >= 0; --i) strides[i] = strides[i + 1] * grid;
  for (int i = 0; i < k; ++i) {
    double shift_real = alphas[i] * grid;
    long shift = std::lround(shift_real - std::floor(shift_real / grid) * grid) % grid;
    snap = std::max(snap, std::abs(shift_real - std::lround(shift_real)) / grid);
    for (long p = 0; p < npts; ++p) {
      long c = unflatten(p, i);
      long cc = (c + shift) % grid;
      gens[i][p] = static_cast<Index>(p + (cc - c) * strides[i]);
    }
  }
  SampledSpace sp(std::move(labels), std::move(dist), k);
  sp.set_coords(std::move(coords));
  return SampledAction(std::move(sp), std::move(gens), horizon, ClosurePolicy::NearestSnap, snap);
}

// Truncated full shift on the m-cube: w-periodic sequences with `levels`
// quantization levels per coordinate, cyclic shift as the generator.
// Metric: max_i decay^i * scale * |x_i - y_i| over the window, which
// induces the product topology in the w -> infinity limit.
inline SampledAction make_shift_window(int m, int levels, int window, double decay = 0.25,
                                       double scale = 1.0, long horizon = 4096) {
  if (m < 1 || levels < 2 || window < 1) throw ParseError("invalid shift window parameters");
  long npts = 1;
  for (int i = 0; i < window * m; ++i) {
    npts *= levels;
    if (npts > 2'000'000) throw ParseError("shift window sample too large");
  }
  std::vector<std::vector<double>> coords(npts, std::vector<double>(window * m));
  std::vector<std::string> labels(npts);
  for (long p = 0; p < npts; ++p) {
    long idx = p;
    std::string lab;
    for (int c = window * m - 1; c >= 0; --c) {
      long lev = idx % levels;
      idx /= levels;
      coords[p][c] = static_cast<double>(lev) / (levels - 1);
    }
    for (int c = 0; c < window * m; ++c) lab += (c ? "," : "") + std::to_string(std::lround(coords[p][c] * (levels - 1)));
    labels[p] = lab;
  }
  std::vector<std::vector<double>> dist(npts, std::vector<double>(npts));
  std::vector<double> weight(window);
  for (int i = 0; i < window; ++i) weight[i] = scale * std::pow(decay, i);
  for (long p = 0; p < npts; ++p)
    for (long q = p; q < npts; ++q) {
      double dm = 0.0;
      for (int i = 0; i < window; ++i)
        for (int j = 0; j < m; ++j)
          dm = std::max(dm, weight[i] * std::abs(coords[p][i * m + j] - coords[q][i * m + j]));
      dist[p][q] = dist[q][p] = dm;
    }
  // cyclic shift of the window by one block of m coordinates
  std::vector<Index> gen(npts);
  long block = 1;
  for (int i = 0; i < (window - 1) * m; ++i) block *= levels;
  for (long p = 0; p < npts; ++p) {
    long head = p / block;   // first m coordinates
    long tail = p % block;
    gen[p] = static_cast<Index>(tail * (npts / block) + head);
  }
  SampledSpace sp(std::move(labels), std::move(dist), std::nullopt);
  sp.set_coords(std::move(coords));
  return SampledAction(std::move(sp), {std::move(gen)}, horizon);
}

// Product of an action with a trivial finite fiber: T(x, j) = (Tx, j).
// Fiber points are separated by `fiber_gap` in the sup metric.
inline SampledAction make_trivial_fiber_product(const SampledAction& base, int fiber,
                                                double fiber_gap = 0.5) {
  int nb = base.space().size();
  long npts = static_cast<long>(nb) * fiber;
  std::vector<std::string> labels(npts);
  std::vector<std::vector<double>> dist(npts, std::vector<double>(npts));
  std::vector<std::vector<double>> coords;
  bool has_coords = base.space().has_coords();
  if (has_coords) coords.resize(npts);
  for (long p = 0; p < npts; ++p) {
    int bx = static_cast<int>(p / fiber), fx = static_cast<int>(p % fiber);
    labels[p] = base.space().labels()[bx] + "|f" + std::to_string(fx);
    if (has_coords) {
      coords[p] = base.space().coords()[bx];
      coords[p].push_back(static_cast<double>(fx) / fiber);
    }
    for (long q = 0; q < npts; ++q) {
      int by = static_cast<int>(q / fiber), fy = static_cast<int>(q % fiber);
      dist[p][q] = std::max(base.space().dist(bx, by), fx == fy ? 0.0 : fiber_gap);
    }
  }
  std::vector<std::vector<Index>> gens(base.k(), std::vector<Index>(npts));
  for (int g = 0; g < base.k(); ++g)
    for (long p = 0; p < npts; ++p) {
      int bx = static_cast<int>(p / fiber), fx = static_cast<int>(p % fiber);
      gens[g][p] = static_cast<Index>(static_cast<long>(base.generator(g)[bx]) * fiber + fx);
    }
  SampledSpace sp(std::move(labels), std::move(dist), base.space().declared_dim());
  if (has_coords) sp.set_coords(std::move(coords));
  return SampledAction(std::move(sp), std::move(gens), base.horizon(), base.closure_policy(),
                       base.snap_error());
}

}  // namespace meandim

#endif  // MEANDIM_SYSTEMS_HPP
