// meandim-lab: widim / mean-dimension estimation, delay embeddings,
// Rokhlin towers and the tower embedding pipeline on sampled systems.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meandim/covers.hpp"
#include "meandim/embedders.hpp"
#include "meandim/genlin.hpp"
#include "meandim/io.hpp"
#include "meandim/meandim.hpp"
#include "meandim/rokhlin.hpp"
#include "meandim/systems.hpp"

using namespace meandim;

namespace {

WidimMode parse_mode(const std::string& s) {
  if (s == "exact") return WidimMode::Exact;
  if (s == "greedy") return WidimMode::Greedy;
  throw ParseError("mode must be exact or greedy");
}

// FNV-1a over the argument vector; stamped into JSON outputs so a result
// file can be matched back to the exact invocation that produced it.
std::string config_digest(int argc, char** argv) {
  uint64_t h = 1469598103934665603ull;
  for (int i = 1; i < argc; ++i) {
    h = fnv1a(std::string(argv[i]), h);
    h = fnv1a(std::string("\x1f"), h);  // argument boundary
  }
  char b[17];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(h));
  return b;
}

std::vector<long> parse_long_list(const std::string& s) {
  std::vector<long> out;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    out.push_back(std::stol(s.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  if (out.empty()) throw ParseError("empty list");
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"sampled-system mean dimension and embedding toolkit"};
  app.require_subcommand(1);

  // shared option storage
  std::string system_path, base_path, observable_path, cover_path, towers_path, factor_path;
  std::string out_path = "-", csv_path, emit_prefix, mode_str = "exact", n_list_str = "1,2,3,4";
  std::string alphas_str, pattern_str;
  double eps = 0.1, lam = 0.0, delta = 0.1, eta = 0.0, alpha = 0.0;
  int d = 1, m = 1, degree = 2, seeds = 100, resolution = 200, L = 1, plateau = 2;
  int k = 2, l = 2, r_max = 4, trials = 1000;
  long n = 1;
  uint64_t seed = 0;

  std::string witness_path;
  auto* c_widim = app.add_subcommand("widim", "cover order at mesh <= eps");
  c_widim->add_option("--system,--space", system_path)->required();
  c_widim->add_option("--eps", eps)->required();
  c_widim->add_option("--lam", lam);
  c_widim->add_option("--mode", mode_str);
  c_widim->add_option("--witness", witness_path, "also write the witness cover as JSON");
  c_widim->add_option("--out", out_path);

  auto* c_mdim = app.add_subcommand("mdim", "normalized widim curve and plateau estimate");
  c_mdim->add_option("--system", system_path)->required();
  c_mdim->add_option("--eps", eps)->required();
  c_mdim->add_option("--lam", lam);
  c_mdim->add_option("--n-list", n_list_str);
  c_mdim->add_option("--mode", mode_str);
  c_mdim->add_option("--plateau-window", plateau);
  c_mdim->add_option("--out", out_path);
  c_mdim->add_option("--csv", csv_path);

  auto* c_towers = app.add_subcommand("towers", "build circle or product towers");
  c_towers->add_option("--alpha", alpha);
  c_towers->add_option("--alphas", alphas_str);
  c_towers->add_option("--n", n)->required();
  c_towers->add_option("--resolution", resolution)->required();
  c_towers->add_option("--out", out_path);
  c_towers->add_option("--emit", emit_prefix, "write <prefix>.json and <prefix>_arcs.csv");

  auto* c_verify = app.add_subcommand("verify", "verify a tower system against a system");
  c_verify->add_option("--system", system_path)->required();
  c_verify->add_option("--towers", towers_path)->required();
  c_verify->add_option("--out", out_path);

  auto* c_delay = app.add_subcommand("delay", "delay-observation vectors over the [0,2d]^k box");
  c_delay->add_option("--system", system_path)->required();
  c_delay->add_option("--observable", observable_path)->required();
  c_delay->add_option("--d", d)->required();
  c_delay->add_option("--eta", eta);
  c_delay->add_option("--out", out_path);

  auto* c_embed = app.add_subcommand("embed", "eps-embedding from a cover");
  c_embed->add_option("--system", system_path)->required();
  c_embed->add_option("--observable", observable_path)->required();
  c_embed->add_option("--cover", cover_path)->required();
  c_embed->add_option("--eps", eps)->required();
  c_embed->add_option("--delta", delta)->required();
  c_embed->add_option("--seed", seed)->required();
  c_embed->add_option("--out", out_path);

  auto* c_generic = app.add_subcommand("generic", "seeded delay-map genericity rate");
  c_generic->add_option("--system", system_path)->required();
  c_generic->add_option("--d", d)->required();
  c_generic->add_option("--m", m)->required();
  c_generic->add_option("--degree", degree);
  c_generic->add_option("--seeds", seeds);
  c_generic->add_option("--eta", eta)->required();
  c_generic->add_option("--seed", seed)->required();
  c_generic->add_option("--out", out_path);

  auto* c_genlin = app.add_subcommand("genlin", "pattern-matrix generic independence");
  c_genlin->add_option("--pattern", pattern_str, "JSON pattern file; omit to sweep k,l");
  c_genlin->add_option("--k", k);
  c_genlin->add_option("--l", l);
  c_genlin->add_option("--r-max", r_max);
  c_genlin->add_option("--trials", trials);
  c_genlin->add_option("--seed", seed)->required();
  c_genlin->add_option("--out", out_path);

  auto* c_pipe = app.add_subcommand("pipeline", "tower embedding pipeline");
  c_pipe->add_option("--system", system_path)->required();
  c_pipe->add_option("--base", base_path)->required();
  c_pipe->add_option("--factor", factor_path)->required();
  c_pipe->add_option("--towers", towers_path)->required();
  c_pipe->add_option("--observable", observable_path)->required();
  c_pipe->add_option("--L", L);
  c_pipe->add_option("--eps", eps)->required();
  c_pipe->add_option("--delta", delta)->required();
  c_pipe->add_option("--eta", eta)->required();
  c_pipe->add_option("--seed", seed)->required();
  c_pipe->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);
  const std::string digest = config_digest(argc, argv);

  if (c_widim->parsed()) {
    auto a = load_system(load_json_file(system_path));
    auto res = widim(a.space(), eps, lam, parse_mode(mode_str));
    CsvWriter csv({"eps", "lam", "mode", "order", "upper_bound_only"});
    csv.row({fmt_double(eps), fmt_double(lam), mode_str, std::to_string(res.order),
             res.upper_bound_only ? "1" : "0"});
    if (!witness_path.empty()) {
      json w = dump_cover(res.witness);
      w["config_digest"] = digest;
      write_atomic(witness_path, w.dump(2) + "\n");
    }
    emit(out_path, csv.str());
  } else if (c_mdim->parsed()) {
    auto a = load_system(load_json_file(system_path));
    auto curve = mdim_curve(a, eps, lam, parse_long_list(n_list_str), parse_mode(mode_str));
    auto est = mdim_estimate(curve, plateau);
    json rows = json::array();
    CsvWriter csv({"n", "widim", "ratio", "upper_bound_only"});
    for (const auto& r : curve.rows) {
      rows.push_back(json{{"n", r.n},
                          {"widim", r.widim_value},
                          {"ratio", r.ratio},
                          {"upper_bound_only", r.upper_bound_only}});
      csv.row({std::to_string(r.n), std::to_string(r.widim_value), fmt_double(r.ratio),
               r.upper_bound_only ? "1" : "0"});
    }
    if (!csv_path.empty()) write_atomic(csv_path, csv.str());
    json j{{"schema", "mdim/1"},
           {"eps", eps},
           {"lam", lam},
           {"rows", rows},
           {"estimate", est.value},
           {"upper_bound_only", est.upper_bound_only},
           {"plateau_window", est.plateau_window},
           {"config_digest", digest}};
    emit(out_path, j.dump(2) + "\n");
  } else if (c_towers->parsed()) {
    json j;
    std::string arcs_csv;
    if (!alphas_str.empty()) {
      std::vector<double> alphas;
      size_t pos = 0;
      while (pos < alphas_str.size()) {
        size_t comma = alphas_str.find(',', pos);
        if (comma == std::string::npos) comma = alphas_str.size();
        alphas.push_back(std::stod(alphas_str.substr(pos, comma - pos)));
        pos = comma + 1;
      }
      std::vector<TowerSystem> parts;
      std::vector<int> sizes;
      CsvWriter csv({"axis", "tower", "start", "width", "column", "level"});
      for (size_t i = 0; i < alphas.size(); ++i) {
        auto ct = build_circle_towers(alphas[i], n, resolution);
        for (const auto& arc : ct.arcs)
          csv.row({std::to_string(i), std::to_string(arc.tower), fmt_double(arc.start),
                   fmt_double(arc.width), std::to_string(arc.column), std::to_string(arc.level)});
        parts.push_back(std::move(ct.system));
        sizes.push_back(resolution);
      }
      j = dump_towers(product_towers(parts, sizes, n));
      arcs_csv = csv.str();
    } else {
      auto ct = build_circle_towers(alpha, n, resolution);
      CsvWriter csv({"axis", "tower", "start", "width", "column", "level"});
      for (const auto& arc : ct.arcs)
        csv.row({"0", std::to_string(arc.tower), fmt_double(arc.start), fmt_double(arc.width),
                 std::to_string(arc.column), std::to_string(arc.level)});
      j = dump_towers(ct.system);
      j["q"] = ct.q;
      j["beta"] = ct.beta;
      arcs_csv = csv.str();
    }
    j["config_digest"] = digest;
    if (!emit_prefix.empty()) {
      write_atomic(emit_prefix + ".json", j.dump(2) + "\n");
      write_atomic(emit_prefix + "_arcs.csv", arcs_csv);
    } else {
      emit(out_path, j.dump(2) + "\n");
    }
  } else if (c_verify->parsed()) {
    auto a = load_system(load_json_file(system_path));
    auto t = load_towers(load_json_file(towers_path));
    auto rep = verify_towers(t, a);
    json j = dump_tower_report(rep);
    j["config_digest"] = digest;
    emit(out_path, j.dump(2) + "\n");
    if (!rep.ok) return 3;
  } else if (c_delay->parsed()) {
    auto a = load_system(load_json_file(system_path));
    auto h = load_observable(load_json_file(observable_path), a.space());
    auto vecs = a.k() == 1 ? delay_map_Z(a, h, d) : delay_map_Zk(a, h, d);
    std::vector<std::string> header{"point"};
    for (size_t c = 0; c < vecs[0].payload.size(); ++c) header.push_back("c" + std::to_string(c));
    CsvWriter csv(header);
    for (size_t x = 0; x < vecs.size(); ++x) {
      std::vector<std::string> row{std::to_string(x)};
      for (double v : vecs[x].payload) row.push_back(fmt_double(v));
      csv.row(row);
    }
    emit(out_path, csv.str());
  } else if (c_embed->parsed()) {
    auto a = load_system(load_json_file(system_path));
    auto f = load_observable(load_json_file(observable_path), a.space());
    auto cover = load_cover(load_json_file(cover_path));
    auto res = eps_embed(a.space(), f, eps, delta, cover, seed);
    json j{{"schema", "embed/1"},
           {"report", dump_report(res.report)},
           {"retries_used", res.retries_used},
           {"g", dump_observable(res.g)},
           {"config_digest", digest}};
    emit(out_path, j.dump(2) + "\n");
  } else if (c_generic->parsed()) {
    auto a = load_system(load_json_file(system_path));
    auto res = genericity_experiment(a, d, m, degree, seeds, eta, seed);
    json j{{"schema", "generic/1"},
           {"rate", res.rate},
           {"seeds", res.seeds},
           {"hypothesis_note", res.hypothesis_note},
           {"config_digest", digest}};
    emit(out_path, j.dump(2) + "\n");
  } else if (c_genlin->parsed()) {
    if (!pattern_str.empty()) {
      json pj = load_json_file(pattern_str);
      require_schema(pj, "pattern/1");
      PatternMatrix p;
      p.entries = field<std::vector<std::vector<int>>>(pj, "entries");
      auto verdict = pattern_generic_independent(p, trials, seed);
      json j{{"schema", "genlin/1"},
             {"rate", verdict.empirical_rate},
             {"pit_verdict", verdict.pit_nonzero ? "nonzero" : "zero"},
             {"trials", verdict.trials},
             {"config_digest", digest}};
      emit(out_path, j.dump(2) + "\n");
    } else {
      auto patterns = enumerate_patterns(k, l, r_max);
      CsvWriter csv({"pattern", "rate", "pit_nonzero", "trials"});
      for (const auto& p : patterns) {
        auto verdict = pattern_generic_independent(p, trials, seed);
        std::string repr;
        for (const auto& row : p.entries) {
          if (!repr.empty()) repr += ";";
          for (size_t i = 0; i < row.size(); ++i) repr += (i ? " " : "") + std::to_string(row[i]);
        }
        csv.row({"\"" + repr + "\"", fmt_double(verdict.empirical_rate),
                 verdict.pit_nonzero ? "1" : "0", std::to_string(verdict.trials)});
      }
      emit(out_path, csv.str());
    }
  } else if (c_pipe->parsed()) {
    auto total = load_system(load_json_file(system_path));
    auto base = load_system(load_json_file(base_path));
    auto pi = load_factor_map(load_json_file(factor_path));
    auto t = load_towers(load_json_file(towers_path));
    auto f = load_observable(load_json_file(observable_path), total.space());
    auto res = theorem2_pipeline(total, base, pi, t, L, f, eps, delta, eta, seed);
    json tower_reports = json::array();
    for (const auto& r : res.tower_reports) tower_reports.push_back(dump_report(r));
    json j{{"schema", "pipeline/1"},
           {"report", dump_report(res.report)},
           {"gate_order", res.gate.order},
           {"gate_upper_bound_only", res.gate.upper_bound_only},
           {"tower_reports", tower_reports},
           {"tower_retries", res.tower_retries},
           {"reassembly_exact", res.reassembly_exact},
           {"extended_points", res.extended_points},
           {"g", dump_observable(res.g)},
           {"config_digest", digest}};
    emit(out_path, j.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
