#ifndef MEANDIM_IO_HPP
#define MEANDIM_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "meandim/covers.hpp"
#include "meandim/embedders.hpp"
#include "meandim/rokhlin.hpp"
#include "meandim/systems.hpp"

namespace meandim {

using nlohmann::json;

inline void require_schema(const json& j, const std::string& want) {
  if (!j.is_object()) throw ParseError("expected a JSON object");
  if (!j.contains("schema") || j["schema"] != want)
    throw ParseError("missing or wrong schema field, expected \"" + want + "\"");
}

template <typename T>
T field(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ParseError("missing field \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError("field \"" + key + "\": " + e.what());
  }
}

template <typename T>
T field_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return field<T>(j, key);
}

// --- systems ---------------------------------------------------------------

// { "schema": "system/1", "generator": "circle"|"torus"|"shift"|"fiber"|"explicit", ... }
inline SampledAction load_system(const json& j) {
  require_schema(j, "system/1");
  auto gen = field<std::string>(j, "generator");
  long horizon = field_or<long>(j, "horizon", 4096);
  if (gen == "circle")
    return make_circle_rotation(field<double>(j, "alpha"), field<int>(j, "points"), horizon);
  if (gen == "torus")
    return make_torus_rotation(field<std::vector<double>>(j, "alphas"), field<int>(j, "grid"),
                               horizon);
  if (gen == "shift")
    return make_shift_window(field<int>(j, "m"), field<int>(j, "levels"),
                             field<int>(j, "window"), field_or<double>(j, "decay", 0.25),
                             field_or<double>(j, "scale", 1.0), horizon);
  if (gen == "fiber") {
    auto base = load_system(field<json>(j, "base"));
    return make_trivial_fiber_product(base, field<int>(j, "fiber"),
                                      field_or<double>(j, "fiber_gap", 0.5));
  }
  if (gen == "explicit") {
    auto labels = field<std::vector<std::string>>(j, "points");
    auto dist = field<std::vector<std::vector<double>>>(j, "dist");
    std::optional<int> dim;
    if (j.contains("declared_dim") && !j["declared_dim"].is_null())
      dim = field<int>(j, "declared_dim");
    SampledSpace sp(std::move(labels), std::move(dist), dim);
    if (j.contains("coords")) sp.set_coords(field<std::vector<std::vector<double>>>(j, "coords"));
    auto gens = field<std::vector<std::vector<Index>>>(j, "generators");
    return SampledAction(std::move(sp), std::move(gens), horizon);
  }
  throw ParseError("unknown generator \"" + gen + "\"");
}

// --- covers / observables / towers ------------------------------------------

inline Cover load_cover(const json& j) {
  require_schema(j, "cover/1");
  Cover c;
  c.sets = field<std::vector<std::vector<Index>>>(j, "sets");
  return c;
}

inline json dump_cover(const Cover& c) {
  return json{{"schema", "cover/1"}, {"sets", c.sets}};
}

inline Observable load_observable(const json& j, const SampledSpace& sp) {
  require_schema(j, "observable/1");
  auto family = field<std::string>(j, "family");
  if (family == "random_trig")
    return Observable::random_trig(sp, field<int>(j, "m"), field_or<int>(j, "degree", 2),
                                   field<uint64_t>(j, "seed"));
  if (family == "table") {
    auto values = field<std::vector<std::vector<double>>>(j, "values");
    if (static_cast<int>(values.size()) != sp.size())
      throw ParseError("table size does not match the sample");
    return Observable::table(std::move(values));
  }
  throw ParseError("unknown observable family \"" + family + "\"");
}

inline json dump_observable(const Observable& o) {
  json j{{"schema", "observable/1"}, {"m", o.m()}};
  switch (o.family()) {
    case Observable::Family::RandomTrig:
      j["family"] = "random_trig";
      j["degree"] = o.degree();
      j["seed"] = o.seed();
      j["values"] = o.values();
      break;
    case Observable::Family::PouAffine:
      j["family"] = "pou_affine";
      j["values"] = o.values();
      break;
    case Observable::Family::Table:
      j["family"] = "table";
      j["values"] = o.values();
      break;
  }
  return j;
}

inline TowerSystem load_towers(const json& j) {
  require_schema(j, "towers/1");
  TowerSystem t;
  t.n = field<long>(j, "n");
  t.k = field<int>(j, "k");
  t.margin = field<double>(j, "margin");
  t.cover_tol = field<double>(j, "cover_tol");
  t.bases = field<std::vector<std::vector<Index>>>(j, "bases");
  return t;
}

inline json dump_towers(const TowerSystem& t) {
  return json{{"schema", "towers/1"}, {"n", t.n},
              {"k", t.k},             {"margin", t.margin},
              {"cover_tol", t.cover_tol}, {"D", t.D()},
              {"bases", t.bases}};
}

inline FactorMap load_factor_map(const json& j) {
  require_schema(j, "factor/1");
  FactorMap f;
  f.to_base = field<std::vector<Index>>(j, "to_base");
  return f;
}

// --- reports -----------------------------------------------------------------

inline json dump_report(const EmbeddingReport& r) {
  return json{{"schema", "report/1"},
              {"min_separation", r.min_separation},
              {"eta", r.eta},
              {"margin", r.margin},
              {"eta_injective", r.eta_injective},
              {"worst_pair", {r.worst_pair.first, r.worst_pair.second}},
              {"sup_deviation", r.sup_deviation},
              {"window", r.window}};
}

inline json dump_tower_report(const TowerVerifyReport& r) {
  json v = json::array();
  for (const auto& viol : r.violations)
    v.push_back(json{{"kind", viol.kind},
                     {"tower", viol.tower},
                     {"g1", viol.g1},
                     {"g2", viol.g2},
                     {"witness", viol.witness}});
  return json{{"schema", "tower_report/1"},
              {"ok", r.ok},
              {"disjoint", r.disjoint},
              {"covering", r.covering},
              {"violations", v}};
}

// --- output plumbing ----------------------------------------------------------

// write through a temp file and rename, so partial output never lands
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open " + tmp.string() + " for writing");
    out << content;
  }
  fs::rename(tmp, target);
}

inline void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-")
    std::fputs(content.c_str(), stdout);
  else
    write_atomic(out_path, content);
}

struct CsvWriter {
  std::ostringstream buf;

  explicit CsvWriter(const std::vector<std::string>& header) {
    for (size_t i = 0; i < header.size(); ++i) buf << (i ? "," : "") << header[i];
    buf << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) buf << (i ? "," : "") << cells[i];
    buf << "\n";
  }
  std::string str() const { return buf.str(); }
};

inline std::string fmt_double(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.12g", v);
  return b;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
}

}  // namespace meandim

#endif  // MEANDIM_IO_HPP
