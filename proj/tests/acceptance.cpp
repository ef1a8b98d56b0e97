// Acceptance gate: one pass/fail line per criterion, exit 0 iff all pass.
// argv[1] is the path to the meandim-lab binary (used by the determinism
// criterion); everything else runs in-process against the library.

#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "meandim/covers.hpp"
#include "meandim/embedders.hpp"
#include "meandim/genlin.hpp"
#include "meandim/meandim.hpp"
#include "meandim/rokhlin.hpp"
#include "meandim/systems.hpp"
#include "support.hpp"

using namespace meandim;
using nlohmann::json;

namespace {

const double kGolden = 0.618033988749895;
const double kSilver = 0.41421356237309515;

struct Check {
  bool ok = true;
  std::string note;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      note = what;
    }
  }
};

// --- shared small helpers ----------------------------------------------------

SampledSpace random_line_space(std::mt19937& rng, int npts) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> xs;
  while (true) {
    xs.resize(npts);
    for (double& x : xs) x = unif(rng);
    std::sort(xs.begin(), xs.end());
    double min_gap = 1.0;
    for (int i = 1; i < npts; ++i) min_gap = std::min(min_gap, xs[i] - xs[i - 1]);
    if (min_gap > 0.005) break;
  }
  return testsupport::line_space(xs);
}

double min_gap_of(const SampledSpace& sp) {
  double g = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < sp.size(); ++i)
    for (Index j = i + 1; j < sp.size(); ++j) g = std::min(g, sp.dist(i, j));
  return g;
}

// exact determinant sign-expansion of the (rows+1)-square lemma matrix:
// pattern rows of variables x_v plus a constant ones row, as a sparse
// multivariate polynomial keyed by sorted variable multisets
bool symbolic_lemma_det_nonzero(const PatternMatrix& p) {
  int rows = static_cast<int>(p.entries.size());
  int cols = static_cast<int>(p.entries[0].size());
  if (cols != rows + 1) return false;  // oracle only covers square lemma matrices
  int n = rows + 1;
  std::map<std::vector<int>, long long> poly;
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  do {
    int sign = 1;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) sign = -sign;
    std::vector<int> mono;
    for (int r = 0; r < rows; ++r)  // the ones row contributes no factor
      mono.push_back(p.entries[r][perm[r]]);
    std::sort(mono.begin(), mono.end());
    poly[mono] += sign;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (const auto& [mono, coeff] : poly)
    if (coeff != 0) return true;
  return false;
}

SampledAction identity_grid(int g) {
  long n = static_cast<long>(g) * g;
  std::vector<std::string> labels(n);
  std::vector<std::vector<double>> coords(n, std::vector<double>(2));
  for (long p = 0; p < n; ++p) {
    coords[p][0] = static_cast<double>(p / g) / (g - 1);
    coords[p][1] = static_cast<double>(p % g) / (g - 1);
    labels[p] = std::to_string(p);
  }
  std::vector<std::vector<double>> dist(n, std::vector<double>(n));
  for (long p = 0; p < n; ++p)
    for (long q = 0; q < n; ++q)
      dist[p][q] = std::max(std::abs(coords[p][0] - coords[q][0]),
                            std::abs(coords[p][1] - coords[q][1]));
  SampledSpace sp(labels, dist, 2);
  sp.set_coords(coords);
  std::vector<Index> id(n);
  for (long i = 0; i < n; ++i) id[i] = static_cast<Index>(i);
  return SampledAction(sp, {id});
}

// --- CLI plumbing for the determinism criterion --------------------------------

std::string g_lab;

std::pair<int, std::string> run_cli(const std::string& args) {
  std::string cmd = g_lab + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  int st = pclose(p);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::filesystem::path work_dir() {
  static std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() / "meandim_acceptance";
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_json(const std::string& name, const json& j) {
  auto path = work_dir() / name;
  std::ofstream(path) << j.dump();
  return path.string();
}

// --- criteria ------------------------------------------------------------------

Check criterion1() {
  Check c;
  // pinned example
  auto line11 = testsupport::line_space(
      {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  auto pinned = widim(line11, 0.35, 0.1, WidimMode::Exact);
  c.require(pinned.order == 1, "line sample order at (0.35, 0.1)");

  std::mt19937 rng(424243);
  std::uniform_real_distribution<double> eps_pick(0.2, 0.5);
  for (int s = 0; s < 24; ++s) {
    int npts = 5 + s % 10;  // 5..14 points
    auto sp = random_line_space(rng, npts);
    double eps = eps_pick(rng);
    double lam = std::min(1.5 * min_gap_of(sp), eps / 4.0);
    auto exact = widim(sp, eps, lam, WidimMode::Exact);
    auto greedy = widim(sp, eps, lam, WidimMode::Greedy);
    int brute = testsupport::widim_bruteforce(sp, eps, lam);
    c.require(brute != INT_MAX, "oracle feasibility on sample " + std::to_string(s));
    c.require(exact.order == brute, "exact vs oracle on sample " + std::to_string(s));
    c.require(greedy.order >= exact.order, "greedy lower than exact on sample " +
                                               std::to_string(s));
  }
  return c;
}

Check criterion2() {
  Check c;
  auto shift = make_shift_window(1, 5, 2, 0.25, 0.5);
  auto curve = mdim_curve(shift, 0.4, 0.125, {1, 2, 3, 4}, WidimMode::Greedy);
  auto est = mdim_estimate(curve, 2);
  c.require(est.value >= 0.8 && est.value <= 1.2,
            "plateau estimate " + std::to_string(est.value) + " outside [0.8, 1.2]");
  c.require(est.upper_bound_only, "estimate not flagged as an upper bound");

  SampledSpace pt({"pt"}, {{0.0}});
  SampledAction one(pt, {std::vector<Index>{0}});
  auto one_curve = mdim_curve(one, 0.5, 0.0, {1, 2, 3, 4}, WidimMode::Exact);
  auto one_est = mdim_estimate(one_curve, 2);
  c.require(one_est.value == 0.0, "one-point system estimate is not exactly 0");
  return c;
}

Check criterion3() {
  Check c;
  for (int k = 2; k <= 3; ++k)
    for (int l = 1; l <= k; ++l) {
      auto patterns = enumerate_patterns(k, l, 6);
      c.require(!patterns.empty(), "no patterns at k=" + std::to_string(k));
      for (const auto& p : patterns) {
        auto v = pattern_generic_independent(p, 1000, 20240601);
        c.require(v.empirical_rate == 1.0, "rate below 1.0 at k=" + std::to_string(k) +
                                               " l=" + std::to_string(l));
        c.require(v.pit_nonzero, "PIT zero at k=" + std::to_string(k));
      }
    }
  // exact symbolic determinant agrees with the randomized PIT on the 2x3 family
  for (const auto& p : enumerate_patterns(3, 3, 6)) {
    auto v = pattern_generic_independent(p, 200, 7);
    c.require(symbolic_lemma_det_nonzero(p) == v.pit_nonzero, "symbolic oracle disagrees");
  }
  return c;
}

Check criterion4() {
  Check c;
  for (int s = 0; s < 20; ++s) {
    int n = 16 + s;
    auto a = make_circle_rotation(kGolden, n);
    const auto& sp = a.space();
    auto f = Observable::random_trig(sp, 3, 2, 1000 + s);
    Cover chain;
    for (Index i = 0; i < n; ++i) chain.sets.push_back({i, (i + 1) % n});
    for (auto& st : chain.sets) std::sort(st.begin(), st.end());
    double eps = 1.6 / n, delta = 0.4;
    auto res = eps_embed(sp, f, eps, delta, chain, 40 + s);
    c.require(res.report.sup_deviation < delta, "sup deviation over delta at seed " +
                                                    std::to_string(s));
    // independent re-scan, bit for bit against the emitted report
    double sup = 0.0;
    for (Index x = 0; x < n; ++x) sup = std::max(sup, linf(res.g(x), f(x)));
    c.require(sup == res.report.sup_deviation, "sup deviation re-scan mismatch");
    double min_sep = std::numeric_limits<double>::infinity();
    double margin = std::numeric_limits<double>::infinity();
    int collisions = 0;
    for (Index x = 0; x < n; ++x)
      for (Index y = x + 1; y < n; ++y) {
        double out = linf(res.g(x), res.g(y));
        min_sep = std::min(min_sep, out);
        if (sp.dist(x, y) >= eps) {
          margin = std::min(margin, out);
          if (out <= 1e-10) ++collisions;
        }
      }
    c.require(collisions == 0, "far pair with equal outputs at seed " + std::to_string(s));
    c.require(min_sep == res.report.min_separation && margin == res.report.margin,
              "separation re-scan mismatch at seed " + std::to_string(s));
  }
  // gate-violating instance: order 1 cover with m = 2 fails order < m/2
  {
    auto a = make_circle_rotation(kGolden, 16);
    auto f2 = Observable::random_trig(a.space(), 2, 2, 5);
    Cover chain;
    for (Index i = 0; i < 16; ++i) {
      std::vector<Index> st{i, static_cast<Index>((i + 1) % 16)};
      std::sort(st.begin(), st.end());
      chain.sets.push_back(st);
    }
    bool threw = false;
    try {
      eps_embed(a.space(), f2, 0.1, 0.4, chain, 5);
    } catch (const PreconditionFailed&) {
      threw = true;
    }
    c.require(threw, "order-gate violation not refused");
  }
  return c;
}

Check criterion5() {
  Check c;
  auto golden = make_circle_rotation(kGolden, 200);
  auto rg = genericity_experiment(golden, 1, 1, 5, 100, 0.05, 2024, 1e-3);
  c.require(rg.rate >= 0.95, "golden-rotation rate " + std::to_string(rg.rate) + " below 0.95");
  auto grid = identity_grid(12);
  auto ro = genericity_experiment(grid, 2, 1, 3, 100, 0.05, 2024, 1e-3);
  c.require(ro.rate <= 0.05, "identity-obstruction rate " + std::to_string(ro.rate) +
                                 " above 0.05");
  return c;
}

Check criterion6() {
  Check c;
  // Case B: five-cycle
  {
    auto a = make_circle_rotation(0.2, 5);
    auto f = Observable::random_trig(a.space(), 2, 2, 314);
    LocalRegion region;
    region.takens_case = TakensCase::B;
    region.region_x = {0};
    region.shift = 2;
    region.cover_x = Cover{{{0}}};
    double eps = 0.2;
    auto r = takens_local_construct(region, a, 1, f, eps, 99);
    c.require(r.verification.separation, "case B separation flag");
    long p = 5, ptilde = 3, l = 2;
    for (size_t xi = 0; xi < r.F_x.size(); ++xi)
      for (size_t yi = 0; yi < r.F_x.size(); ++yi) {
        double gap = 0.0;
        for (long i = 0; i < ptilde; ++i)
          gap = std::max(gap, linf(r.F_x[xi].block(static_cast<int>(i)),
                                   r.F_x[yi].block(static_cast<int>((i + l) % p))));
        c.require(gap > 1e-10, "case B pair not separated");
      }
    c.require(r.verification.f_prime_sup_dev < eps, "case B assembled deviation");
  }
  // Case C: golden rotation, shift l = 3
  {
    auto a = make_circle_rotation(kGolden, 89);
    auto f = Observable::random_trig(a.space(), 1, 3, 512);
    LocalRegion region;
    region.takens_case = TakensCase::C;
    region.region_x = {0, 1};
    region.shift = 3;
    region.cover_x = Cover{{{0, 1}}};
    double eps = 0.2;
    int d = 1;
    auto r = takens_local_construct(region, a, d, f, eps, 55);
    c.require(r.verification.separation, "case C separation flag");
    for (size_t xi = 0; xi < r.F_x.size(); ++xi)
      for (size_t yi = 0; yi < r.F_x.size(); ++yi) {
        double gap = delay_dist(r.F_x[xi].slice(0, 2 * d), r.F_x[yi].slice(3, 3 + 2 * d));
        c.require(gap > 1e-10, "case C pair not separated");
      }
    c.require(r.verification.f_prime_sup_dev < eps, "case C assembled deviation");
  }
  return c;
}

Check criterion7() {
  Check c;
  auto ct = build_circle_towers(kSilver, 10, 2000);
  c.require(ct.system.D() == 1, "circle towers D != 1");
  auto a = make_circle_rotation(kSilver, 2000);
  auto rep = verify_towers(ct.system, a);
  c.require(rep.ok && rep.violations.empty(), "circle tower verification violations");

  double a2 = 1.0 - kGolden;
  auto f1 = build_circle_towers(kGolden, 3, 64);
  auto f2 = build_circle_towers(a2, 3, 64);
  auto prod = product_towers({f1.system, f2.system}, {64, 64}, 3);
  c.require(prod.D() == 3, "product towers D != 3");
  auto torus = make_torus_rotation({kGolden, a2}, 64);
  auto prep = verify_towers(prod, torus);
  c.require(prep.ok && prep.violations.empty(), "product tower verification violations");
  return c;
}

Check criterion8() {
  Check c;
  auto base = make_circle_rotation(kGolden, 1000);
  auto total = make_trivial_fiber_product(base, 3);
  int npts = total.space().size();
  FactorMap pi;
  pi.to_base.resize(npts);
  for (Index p = 0; p < npts; ++p) pi.to_base[p] = p / 3;
  auto ct = build_circle_towers(kGolden, 10, 1000);
  auto f = Observable::random_trig(total.space(), 2, 2, 12345);
  auto res = theorem2_pipeline(total, base, pi, ct.system, 1, f, 0.05, 0.4, 0.1, 777);
  c.require(res.reassembly_exact, "reassembly identity fails at a sampled point");
  c.require(res.report.eta_injective, "pipeline report not eta-injective");

  // independent all-pairs scan of I_g x pi at eta = 0.1 over the window
  long n = ct.system.n;
  std::vector<std::vector<std::vector<double>>> gv(n);
  for (long t = 0; t < n; ++t) {
    gv[t].resize(npts);
    for (Index x = 0; x < npts; ++x) gv[t][x] = res.g(total.act(GroupElement{{t}}, x));
  }
  double margin = std::numeric_limits<double>::infinity();
  for (Index x = 0; x < npts; ++x)
    for (Index y = x + 1; y < npts; ++y) {
      if (total.space().dist(x, y) < 0.1) continue;
      double sep = pi.to_base[x] == pi.to_base[y]
                       ? 0.0
                       : base.space().dist(pi.to_base[x], pi.to_base[y]);
      for (long t = 0; t < n && sep <= 1e-10; ++t) sep = std::max(sep, linf(gv[t][x], gv[t][y]));
      if (sep < margin) margin = sep;
      if (margin <= 1e-10) break;
    }
  c.require(margin > 1e-10, "independent eta-injectivity scan found a collision");
  return c;
}

Check criterion9() {
  Check c;
  if (g_lab.empty()) {
    c.require(false, "meandim-lab path missing (argv[1])");
    return c;
  }
  // inputs
  json line11{{"schema", "system/1"}, {"generator", "explicit"}, {"declared_dim", 1}};
  {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> dist(11, std::vector<double>(11));
    std::vector<int> gen;
    for (int i = 0; i < 11; ++i) {
      labels.push_back(std::to_string(i));
      gen.push_back(i);
      for (int k = 0; k < 11; ++k) dist[i][k] = 0.1 * std::abs(i - k);
    }
    line11["points"] = labels;
    line11["dist"] = dist;
    line11["generators"] = json::array({gen});
  }
  auto line11_path = write_json("line11.json", line11);
  json circle{{"schema", "system/1"}, {"generator", "circle"}, {"alpha", kGolden},
              {"points", 120}};
  auto circle_path = write_json("circle.json", circle);
  auto total_path = write_json("total.json", json{{"schema", "system/1"},
                                                  {"generator", "fiber"},
                                                  {"base", circle},
                                                  {"fiber", 3}});
  std::vector<int> to_base;
  for (int p = 0; p < 360; ++p) to_base.push_back(p / 3);
  auto factor_path = write_json("factor.json", json{{"schema", "factor/1"},
                                                    {"to_base", to_base}});
  auto obs_path = write_json("obs.json", json{{"schema", "observable/1"},
                                              {"family", "random_trig"},
                                              {"m", 2},
                                              {"degree", 2},
                                              {"seed", 9}});
  auto pat_path = write_json("pat.json", json{{"schema", "pattern/1"},
                                              {"entries", {{1, 2}, {2, 3}}}});
  std::string prefix = (work_dir() / "tow").string();
  auto built = run_cli("towers --alpha 0.618033988749895 --n 3 --resolution 120 --emit " +
                       prefix);
  c.require(built.first == 0, "tower build for the CLI suite failed");

  std::vector<std::string> cmds = {
      "widim --space " + line11_path + " --eps 0.35 --lam 0.1 --mode exact",
      "mdim --system " + circle_path + " --eps 0.2 --lam 0.02 --n-list 1,2 --mode exact",
      "towers --alpha 0.618033988749895 --n 3 --resolution 120",
      "verify --system " + circle_path + " --towers " + prefix + ".json",
      "delay --system " + circle_path + " --observable " + obs_path + " --d 1",
      "generic --system " + circle_path +
          " --d 1 --m 1 --degree 3 --seeds 20 --eta 0 --seed 4",
      "genlin --k 3 --l 2 --trials 500 --seed 12",
      "genlin --pattern " + pat_path + " --trials 500 --seed 12",
      "pipeline --system " + total_path + " --base " + circle_path + " --factor " +
          factor_path + " --towers " + prefix + ".json --observable " + obs_path +
          " --L 1 --eps 0.06 --delta 0.4 --eta 0.1 --seed 31337",
  };
  for (const auto& cmd : cmds) {
    auto r1 = run_cli(cmd);
    auto r2 = run_cli(cmd);
    std::string head = cmd.substr(0, cmd.find(' '));
    c.require(r1.first == 0, head + " exited " + std::to_string(r1.first));
    c.require(r1.first == r2.first && r1.second == r2.second,
              head + " output not byte-identical");
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_lab = argv[1];
  struct Entry {
    int id;
    const char* what;
    Check (*fn)();
  };
  const Entry entries[] = {
      {1, "regularized cover order vs independent enumerator", criterion1},
      {2, "mean-dimension surrogate plateau and one-point zero", criterion2},
      {3, "pattern independence sweep and symbolic oracle", criterion3},
      {4, "eps-embedding self-certification and gate", criterion4},
      {5, "delay-map genericity rates", criterion5},
      {6, "local constructions, periodic and aperiodic cases", criterion6},
      {7, "tower correctness, circle and product", criterion7},
      {8, "tower embedding pipeline with independent scan", criterion8},
      {9, "CLI determinism", criterion9},
  };
  bool all = true;
  for (const auto& e : entries) {
    Check c;
    try {
      c = e.fn();
    } catch (const std::exception& ex) {
      c.ok = false;
      c.note = std::string("exception: ") + ex.what();
    }
    std::printf("criterion %d (%s): %s%s%s\n", e.id, e.what, c.ok ? "PASS" : "FAIL",
                c.ok ? "" : " - ", c.ok ? "" : c.note.c_str());
    std::fflush(stdout);
    all = all && c.ok;
  }
  return all ? 0 : 1;
}
