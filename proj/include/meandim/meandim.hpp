#ifndef MEANDIM_MEANDIM_HPP
#define MEANDIM_MEANDIM_HPP

#include <cmath>
#include <string>
#include <vector>

#include "meandim/common.hpp"
#include "meandim/covers.hpp"
#include "meandim/systems.hpp"

namespace meandim {

// Normalized widim sequence: widim_eps(X, d_[n]) / n^k.
struct MdimCurve {
  double eps = 0.0;
  double lam = 0.0;
  struct Row {
    long n = 0;
    int widim_value = 0;
    double ratio = 0.0;
    bool upper_bound_only = false;
  };
  std::vector<Row> rows;
};

inline MdimCurve mdim_curve(const SampledAction& a, double eps, double lam,
                            const std::vector<long>& n_list, WidimMode mode,
                            const WidimOptions& opt = {}) {
  MdimCurve curve;
  curve.eps = eps;
  curve.lam = lam;
  int k = a.k();
  for (long n : n_list) {
    auto dn = dynamical_metric(a, n);
    auto sp = a.space().with_metric(std::move(dn));
    auto w = widim(sp, eps, lam, mode, opt);
    MdimCurve::Row row;
    row.n = n;
    row.widim_value = w.order;
    row.ratio = static_cast<double>(w.order) / std::pow(static_cast<double>(n), k);
    row.upper_bound_only = w.upper_bound_only;
    curve.rows.push_back(row);
  }
  return curve;
}

struct MdimEstimate {
  double value = 0.0;
  bool upper_bound_only = false;
  int plateau_window = 0;
};

// Plateau statistic: mean of the last `plateau_window` ratios.
inline MdimEstimate mdim_estimate(const MdimCurve& curve, int plateau_window) {
  if (plateau_window < 1) throw ParseError("plateau_window must be >= 1");
  if (static_cast<int>(curve.rows.size()) < plateau_window)
    throw InsufficientRows("curve has " + std::to_string(curve.rows.size()) +
                           " rows, need " + std::to_string(plateau_window));
  MdimEstimate est;
  est.plateau_window = plateau_window;
  double sum = 0.0;
  for (int i = static_cast<int>(curve.rows.size()) - plateau_window;
       i < static_cast<int>(curve.rows.size()); ++i) {
    sum += curve.rows[i].ratio;
    est.upper_bound_only = est.upper_bound_only || curve.rows[i].upper_bound_only;
  }
  est.value = sum / plateau_window;
  return est;
}

}  // namespace meandim

#endif  // MEANDIM_MEANDIM_HPP
