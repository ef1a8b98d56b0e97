#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "meandim/covers.hpp"
#include "meandim/systems.hpp"

namespace testsupport {

inline meandim::SampledSpace line_space(const std::vector<double>& xs) {
  int n = static_cast<int>(xs.size());
  std::vector<std::string> labels(n);
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    labels[i] = "x" + std::to_string(i);
    for (int j = 0; j < n; ++j) d[i][j] = std::abs(xs[i] - xs[j]);
  }
  meandim::SampledSpace sp(labels, d, 1);
  std::vector<std::vector<double>> coords(n);
  for (int i = 0; i < n; ++i) coords[i] = {xs[i]};
  sp.set_coords(coords);
  return sp;
}

inline meandim::SampledSpace circle_space(int n) {
  std::vector<std::string> labels(n);
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    labels[i] = "c" + std::to_string(i);
    for (int j = 0; j < n; ++j)
      d[i][j] = meandim::circle_dist(double(i) / n, double(j) / n);
  }
  return meandim::SampledSpace(labels, d, 1);
}

// Minimum cover order by exhaustive enumeration of ball-generated covers.
// Candidates are regenerated from scratch here: every metric ball with a
// realized radius <= eps whose diameter is <= eps. A cover is admissible when
// each point's closed lam-ball lies inside some chosen set; the search walks
// every irredundant cover (branching on the first unserved point), which is
// enough because adding sets never lowers the order. Returns INT_MAX when no
// admissible cover exists.
inline int widim_bruteforce(const meandim::SampledSpace& sp, double eps, double lam) {
  using meandim::Index;
  const double slack = 1e-12;
  int n = sp.size();
  std::set<double> radii{0.0, eps};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (sp.dist(i, j) <= eps + slack) radii.insert(sp.dist(i, j));

  std::vector<std::vector<Index>> lam_ball(n);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y)
      if (sp.dist(x, y) <= lam + slack) lam_ball[x].push_back(y);

  std::set<std::vector<Index>> seen;
  std::vector<std::vector<Index>> cands;
  std::vector<std::vector<Index>> serves;  // points whose lam-ball fits in the candidate
  auto admit = [&](const std::vector<Index>& s) {
    if (s.empty()) return;
    for (size_t i = 0; i < s.size(); ++i)
      for (size_t j = i + 1; j < s.size(); ++j)
        if (sp.dist(s[i], s[j]) > eps + slack) return;
    if (!seen.insert(s).second) return;
    std::vector<char> in(n, 0);
    for (Index i : s) in[i] = 1;
    std::vector<Index> sv;
    for (Index x : s) {
      bool fits = true;
      for (Index y : lam_ball[x])
        if (!in[y]) {
          fits = false;
          break;
        }
      if (fits) sv.push_back(x);
    }
    cands.push_back(s);
    serves.push_back(sv);
  };
  for (Index ctr = 0; ctr < n; ++ctr) {
    for (double r : radii) {
      std::vector<Index> s;
      for (Index y = 0; y < n; ++y)
        if (sp.dist(ctr, y) <= r + slack) s.push_back(y);
      admit(s);
    }
  }
  for (Index a = 0; a < n; ++a)
    for (Index b = a + 1; b < n; ++b) {
      double r = sp.dist(a, b);
      if (r > eps + slack) continue;
      std::vector<Index> s;
      for (Index y = 0; y < n; ++y)
        if (sp.dist(a, y) <= r + slack && sp.dist(b, y) <= r + slack) s.push_back(y);
      admit(s);
    }

  std::vector<std::vector<int>> by_point(n);
  for (size_t ci = 0; ci < cands.size(); ++ci)
    for (Index x : serves[ci]) by_point[x].push_back(static_cast<int>(ci));

  int best = INT_MAX;
  std::vector<int> served(n, 0), mult(n, 0);
  std::vector<char> chosen(cands.size(), 0);
  int cur_peak = 0;

  std::function<void()> dfs = [&]() {
    if (cur_peak - 1 >= best) return;
    int pick = -1;
    for (Index x = 0; x < n; ++x)
      if (served[x] == 0) {
        pick = x;
        break;
      }
    if (pick < 0) {
      best = std::min(best, cur_peak - 1);
      return;
    }
    for (int ci : by_point[pick]) {
      if (chosen[ci]) continue;
      chosen[ci] = 1;
      int prev_peak = cur_peak;
      for (Index x : serves[ci]) ++served[x];
      for (Index x : cands[ci]) cur_peak = std::max(cur_peak, ++mult[x]);
      dfs();
      for (Index x : cands[ci]) --mult[x];
      for (Index x : serves[ci]) --served[x];
      cur_peak = prev_peak;
      chosen[ci] = 0;
    }
  };
  dfs();
  return best;
}

}  // namespace testsupport
