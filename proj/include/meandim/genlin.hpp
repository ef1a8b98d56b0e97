#ifndef MEANDIM_GENLIN_HPP
#define MEANDIM_GENLIN_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "meandim/common.hpp"

namespace meandim {

// Columns in [0,1]^M (entries may drift slightly outside during tests of
// scale invariance; only the independence decisions care).
struct VectorFamily {
  Eigen::MatrixXd columns;  // M x count

  int ambient_dim() const { return static_cast<int>(columns.rows()); }
  int count() const { return static_cast<int>(columns.cols()); }
};

inline int numeric_rank(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++r;
  return r;
}

inline bool linearly_independent(const Eigen::MatrixXd& cols, double rel_tol = 1e-8) {
  return numeric_rank(cols, rel_tol) == cols.cols();
}

// Rank of the difference family {v_i - v_0}.
inline bool affinely_independent(const VectorFamily& f, double rel_tol = 1e-8) {
  int c = f.count();
  if (c <= 1) return true;
  Eigen::MatrixXd diff(f.ambient_dim(), c - 1);
  for (int i = 1; i < c; ++i) diff.col(i - 1) = f.columns.col(i) - f.columns.col(0);
  return linearly_independent(diff, rel_tol);
}

// Second route: linear independence of the homogeneous lift (v_i, 1).
inline bool affinely_independent_lifted(const VectorFamily& f, double rel_tol = 1e-8) {
  int c = f.count();
  if (c <= 1) return true;
  Eigen::MatrixXd lift(f.ambient_dim() + 1, c);
  lift.topRows(f.ambient_dim()) = f.columns;
  lift.row(f.ambient_dim()).setOnes();
  return linearly_independent(lift, rel_tol);
}

enum class ExtensionCase { Linear, Affine };

// Empirical rate at which a linearly independent base stays independent
// after appending s uniform columns. Refuses when the case bound fails.
inline double random_extension_independent(const VectorFamily& base, int s, int trials,
                                           uint64_t seed, ExtensionCase mode,
                                           double rel_tol = 1e-8) {
  int r = base.count();
  int m = base.ambient_dim();
  if (r > 0 && !linearly_independent(base.columns, rel_tol))
    throw PreconditionFailed("base family is not linearly independent");
  int bound = mode == ExtensionCase::Linear ? m : m + 1;
  if (r + s > bound)
    throw CaseBoundViolated("r+s = " + std::to_string(r + s) + " exceeds bound " +
                            std::to_string(bound));
  int ok = 0;
  for (int t = 0; t < trials; ++t) {
    StreamRng rng(seed, "random_extension", static_cast<uint64_t>(t));
    Eigen::MatrixXd ext(m, r + s);
    ext.leftCols(r) = base.columns;
    for (int j = 0; j < s; ++j)
      for (int i = 0; i < m; ++i) ext(i, r + j) = rng.uniform01();
    bool good = mode == ExtensionCase::Linear
                    ? linearly_independent(ext, rel_tol)
                    : affinely_independent(VectorFamily{ext}, rel_tol);
    if (good) ++ok;
  }
  return trials > 0 ? static_cast<double>(ok) / trials : 1.0;
}

// Structured pattern for the affine-independence lemma on matrices
// A(t_1..t_r) = (t_{M(i,j)}): values 1..r, no value twice in a row or
// column, each value at most twice overall.
struct PatternMatrix {
  std::vector<std::vector<int>> entries;  // (k-1) rows, l cols

  int rows() const { return static_cast<int>(entries.size()); }
  int cols() const { return entries.empty() ? 0 : static_cast<int>(entries[0].size()); }
  int value_count() const {
    int r = 0;
    for (const auto& row : entries)
      for (int v : row) r = std::max(r, v);
    return r;
  }

  void validate() const {
    if (rows() == 0 || cols() == 0) throw InvalidPattern("empty pattern");
    int r = value_count();
    std::vector<int> total(r + 1, 0);
    for (const auto& row : entries) {
      if (static_cast<int>(row.size()) != cols()) throw InvalidPattern("ragged pattern");
      std::vector<int> in_row(r + 1, 0);
      for (int v : row) {
        if (v < 1 || v > r) throw InvalidPattern("value out of range");
        if (++in_row[v] > 1) throw InvalidPattern("value repeats in a row");
        ++total[v];
      }
    }
    for (int j = 0; j < cols(); ++j) {
      std::vector<int> in_col(r + 1, 0);
      for (int i = 0; i < rows(); ++i)
        if (++in_col[entries[i][j]] > 1) throw InvalidPattern("value repeats in a column");
    }
    for (int v = 1; v <= r; ++v) {
      if (total[v] == 0) throw InvalidPattern("value " + std::to_string(v) + " unused");
      if (total[v] > 2) throw InvalidPattern("value appears more than twice");
    }
  }
};

struct PatternVerdict {
  double empirical_rate = 0.0;  // trials with affinely independent columns
  bool pit_nonzero = false;     // randomized determinant identity test
  int trials = 0;
};

namespace detail {

// Exact determinant of a small integer matrix (Bareiss elimination).
inline __int128 integer_determinant(std::vector<std::vector<long long>> m) {
  int n = static_cast<int>(m.size());
  std::vector<std::vector<__int128>> a(n, std::vector<__int128>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i][j] = m[i][j];
  __int128 prev = 1;
  int sign = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (a[k][k] == 0) {
      int piv = -1;
      for (int i = k + 1; i < n; ++i)
        if (a[i][k] != 0) {
          piv = i;
          break;
        }
      if (piv < 0) return 0;
      std::swap(a[k], a[piv]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j)
        a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
    prev = a[k][k];
  }
  return sign * a[n - 1][n - 1];
}

// Enlarge the pattern to (k-1) x k with fresh-valued columns, then append
// the all-ones row encoded as one shared fresh value.
inline std::vector<std::vector<int>> enlarged_square_pattern(const PatternMatrix& p) {
  int rows = p.rows(), cols = p.cols();
  int k = rows + 1;
  int next = p.value_count() + 1;
  std::vector<std::vector<int>> n(rows + 1, std::vector<int>(k));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) n[i][j] = p.entries[i][j];
    for (int j = cols; j < k; ++j) n[i][j] = next++;
  }
  int ones = next;  // last row is constant: all-ones up to substitution
  for (int j = 0; j < k; ++j) n[rows][j] = ones;
  return n;
}

}  // namespace detail

// Per trial: instantiate A(t) with uniform t and test affine independence of
// the columns; the PIT verdict evaluates det of the ones-row enlargement at
// random large-denominator rationals, exactly in integers.
inline PatternVerdict pattern_generic_independent(const PatternMatrix& p, int trials,
                                                  uint64_t seed, double rel_tol = 1e-8) {
  p.validate();
  PatternVerdict verdict;
  verdict.trials = trials;
  int r = p.value_count();
  int ok = 0;
  for (int t = 0; t < trials; ++t) {
    StreamRng rng(seed, "pattern_trial", static_cast<uint64_t>(t));
    std::vector<double> vals(r + 1);
    for (int v = 1; v <= r; ++v) vals[v] = rng.uniform01();
    Eigen::MatrixXd a(p.rows(), p.cols());
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < p.cols(); ++j) a(i, j) = vals[p.entries[i][j]];
    if (affinely_independent(VectorFamily{a}, rel_tol)) ++ok;
  }
  verdict.empirical_rate = trials > 0 ? static_cast<double>(ok) / trials : 1.0;

  auto square = detail::enlarged_square_pattern(p);
  int k = static_cast<int>(square.size());
  int nvals = 0;
  for (const auto& row : square)
    for (int v : row) nvals = std::max(nvals, v);
  const long long denom = 1'000'003;  // evaluation at rationals a/denom
  const int pit_reps = 8;
  for (int rep = 0; rep < pit_reps && !verdict.pit_nonzero; ++rep) {
    StreamRng rng(seed, "pattern_pit", static_cast<uint64_t>(rep));
    std::vector<long long> num(nvals + 1);
    for (int v = 1; v < nvals; ++v) num[v] = static_cast<long long>(rng.uniform_int(denom));
    num[nvals] = denom;  // the appended row evaluates to exactly 1
    std::vector<std::vector<long long>> m(k, std::vector<long long>(k));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) m[i][j] = num[square[i][j]];
    if (detail::integer_determinant(std::move(m)) != 0) verdict.pit_nonzero = true;
  }
  return verdict;
}

// All invariant-satisfying patterns with rows = k-1, cols = l, values
// canonical under relabeling (first occurrence order, row major).
inline std::vector<PatternMatrix> enumerate_patterns(int k, int l, int r_max) {
  if (k > 5 || l > 5) throw ParseError("enumerate_patterns limited to k,l <= 5");
  int rows = k - 1, cols = l;
  if (rows < 1 || cols < 1) return {};
  std::vector<PatternMatrix> out;
  std::vector<std::vector<int>> grid(rows, std::vector<int>(cols, 0));
  std::vector<int> occurrences(rows * cols + 2, 0);

  auto ok_here = [&](int i, int j, int v) {
    if (occurrences[v] >= 2) return false;
    for (int jj = 0; jj < j; ++jj)
      if (grid[i][jj] == v) return false;
    for (int ii = 0; ii < i; ++ii)
      if (grid[ii][j] == v) return false;
    return true;
  };

  std::function<void(int, int)> rec = [&](int cell, int max_used) {
    if (cell == rows * cols) {
      if (max_used <= r_max) {
        PatternMatrix p{grid};
        p.validate();
        out.push_back(p);
      }
      return;
    }
    int i = cell / cols, j = cell % cols;
    for (int v = 1; v <= std::min(max_used + 1, r_max); ++v) {
      if (!ok_here(i, j, v)) continue;
      grid[i][j] = v;
      ++occurrences[v];
      rec(cell + 1, std::max(max_used, v));
      --occurrences[v];
      grid[i][j] = 0;
    }
  };
  rec(0, 0);
  return out;
}

}  // namespace meandim

#endif  // MEANDIM_GENLIN_HPP
