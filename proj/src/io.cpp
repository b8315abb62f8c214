#include "finsler/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace finsler {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw FinslerError(ErrorKind::Config, what);
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed,
                const std::set<std::string>& required = {}) {
  if (!obj.is_object()) config_error(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) config_error("missing key '" + key + "' in " + where);
  }
}

double get_number(const json& obj, const std::string& key, const std::string& where,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) config_error(where + "." + key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) config_error(where + "." + key + " must be finite");
  return d;
}

int get_int(const json& obj, const std::string& key, const std::string& where, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) config_error(where + "." + key + " must be an integer");
  return v.get<int>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& where,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) config_error(where + "." + key + " must be a string");
  return v.get<std::string>();
}

StructureSpec parse_structure(const json& obj, const std::string& where) {
  check_keys(obj, where, {"name", "params"}, {"name"});
  StructureSpec s;
  s.name = get_string(obj, "name", where, "");
  if (s.name.empty()) config_error(where + ".name must not be empty");
  if (obj.contains("params")) {
    const json& p = obj.at("params");
    if (!p.is_object()) config_error(where + ".params must be an object");
    for (const auto& [key, value] : p.items()) {
      if (key == "path" && s.name == "grid_sampled") {
        if (!value.is_string()) config_error(where + ".params.path must be a string");
        s.path = value.get<std::string>();
      } else {
        if (!value.is_number()) config_error(where + ".params." + key + " must be a number");
        s.params[key] = value.get<double>();
      }
    }
  }
  if (s.name == "grid_sampled" && s.path.empty()) {
    config_error(where + ": grid_sampled needs params.path");
  }
  return s;
}

nlohmann::ordered_json structure_json(const StructureSpec& s) {
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.params) params[k] = v;
  if (!s.path.empty()) params["path"] = s.path;
  return {{"name", s.name}, {"params", params}};
}

Vec2 parse_bounds_axis(const json& axis, int a) {
  if (!axis.is_array() || axis.size() != 2 || !axis[0].is_number() || !axis[1].is_number()) {
    config_error("grid.bounds[" + std::to_string(a) + "] must be [lower, upper]");
  }
  return {axis[0].get<double>(), axis[1].get<double>()};
}

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void append_int(std::string& out, long v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%ld", v);
  out += buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

}  // namespace

SphereBundleGrid GridSpec::grid() const {
  SphereBundleGrid g;
  g.nx1 = nx1;
  g.nx2 = nx2;
  g.ntheta = ntheta;
  g.domain.lower = lower;
  g.domain.upper = upper;
  g.domain.boundary = boundary;
  return g;
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, "config", {"structure", "grid", "flow", "background", "output", "tolerances"},
             {"structure", "grid", "flow"});

  RunConfig c;
  c.structure = parse_structure(doc.at("structure"), "structure");

  const json& g = doc.at("grid");
  check_keys(g, "grid", {"nx1", "nx2", "bounds", "boundary", "ntheta"},
             {"nx1", "nx2", "bounds", "ntheta"});
  c.grid.nx1 = get_int(g, "nx1", "grid", 0);
  c.grid.nx2 = get_int(g, "nx2", "grid", 0);
  c.grid.ntheta = get_int(g, "ntheta", "grid", 0);
  const json& b = g.at("bounds");
  if (!b.is_array() || b.size() != 2) config_error("grid.bounds must be [[lo1, hi1], [lo2, hi2]]");
  const Vec2 ax1 = parse_bounds_axis(b[0], 0), ax2 = parse_bounds_axis(b[1], 1);
  c.grid.lower = {ax1[0], ax2[0]};
  c.grid.upper = {ax1[1], ax2[1]};
  const std::string mode = get_string(g, "boundary", "grid", "pinned");
  if (mode == "pinned") {
    c.grid.boundary = BoundaryMode::Pinned;
  } else if (mode == "periodic") {
    c.grid.boundary = BoundaryMode::Periodic;
  } else {
    config_error("grid.boundary must be 'pinned' or 'periodic'");
  }
  c.grid.grid().validate();

  const json& f = doc.at("flow");
  check_keys(f, "flow", {"kind", "integrator", "dt", "t_end", "snapshot_stride", "fiber_modes"},
             {"dt", "t_end"});
  const std::string kind = get_string(f, "kind", "flow", "ricci");
  if (kind == "ricci") {
    c.flow.kind = FlowKind::Ricci;
  } else if (kind == "deturck") {
    c.flow.kind = FlowKind::DeTurck;
  } else {
    config_error("flow.kind must be 'ricci' or 'deturck'");
  }
  const std::string integ = get_string(f, "integrator", "flow", "rk4");
  if (integ == "rk4") {
    c.flow.integrator = Integrator::RK4;
  } else if (integ == "euler") {
    c.flow.integrator = Integrator::Euler;
  } else {
    config_error("flow.integrator must be 'euler' or 'rk4'");
  }
  c.flow.dt = get_number(f, "dt", "flow", 0.0);
  c.flow.t_end = get_number(f, "t_end", "flow", 0.0);
  c.flow.snapshot_stride = get_int(f, "snapshot_stride", "flow", c.flow.snapshot_stride);
  c.flow.fiber_modes = get_int(f, "fiber_modes", "flow", c.flow.fiber_modes);
  if (!(c.flow.dt > 0.0)) config_error("flow.dt must be positive");
  if (!(c.flow.t_end > 0.0)) config_error("flow.t_end must be positive");
  if (c.flow.snapshot_stride < 1) config_error("flow.snapshot_stride must be >= 1");
  if (c.flow.fiber_modes < -1) config_error("flow.fiber_modes must be >= -1");

  if (doc.contains("background")) c.background = parse_structure(doc.at("background"), "background");
  if (c.flow.kind == FlowKind::DeTurck && !c.background) {
    config_error("deturck flows need a background structure");
  }
  if (c.flow.kind == FlowKind::Ricci && c.background) {
    config_error("background is only meaningful for deturck flows");
  }

  if (doc.contains("output")) {
    const json& o = doc.at("output");
    check_keys(o, "output", {"directory", "formats"});
    c.output.directory = get_string(o, "directory", "output", c.output.directory);
    if (c.output.directory.empty()) config_error("output.directory must not be empty");
    if (o.contains("formats")) {
      const json& fm = o.at("formats");
      if (!fm.is_array() || fm.empty()) config_error("output.formats must be a non-empty array");
      c.output.formats.clear();
      for (const auto& v : fm) {
        if (!v.is_string() || (v != "csv" && v != "json")) {
          config_error("output.formats entries must be 'csv' or 'json'");
        }
        c.output.formats.push_back(v.get<std::string>());
      }
    }
  }

  if (doc.contains("tolerances")) {
    const json& t = doc.at("tolerances");
    check_keys(t, "tolerances", {"degeneracy", "integrability_alarm"});
    c.tolerances.degeneracy = get_number(t, "degeneracy", "tolerances", c.tolerances.degeneracy);
    c.tolerances.integrability_alarm =
        get_number(t, "integrability_alarm", "tolerances", c.tolerances.integrability_alarm);
    if (!(c.tolerances.degeneracy >= 0.0)) config_error("tolerances.degeneracy must be >= 0");
    if (!(c.tolerances.integrability_alarm > 0.0)) {
      config_error("tolerances.integrability_alarm must be positive");
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string serialize_config(const RunConfig& c) {
  nlohmann::ordered_json doc;
  doc["structure"] = structure_json(c.structure);
  doc["grid"] = nlohmann::ordered_json{{"nx1", c.grid.nx1},
                     {"nx2", c.grid.nx2},
                     {"bounds", nlohmann::ordered_json::array({nlohmann::ordered_json::array({c.grid.lower[0], c.grid.upper[0]}),
                                             nlohmann::ordered_json::array({c.grid.lower[1], c.grid.upper[1]})})},
                     {"boundary", c.grid.boundary == BoundaryMode::Pinned ? "pinned" : "periodic"},
                     {"ntheta", c.grid.ntheta}};
  doc["flow"] = nlohmann::ordered_json{{"kind", to_string(c.flow.kind)},
                     {"integrator", to_string(c.flow.integrator)},
                     {"dt", c.flow.dt},
                     {"t_end", c.flow.t_end},
                     {"snapshot_stride", c.flow.snapshot_stride},
                     {"fiber_modes", c.flow.fiber_modes}};
  if (c.background) doc["background"] = structure_json(*c.background);
  doc["output"] = nlohmann::ordered_json{{"directory", c.output.directory}, {"formats", c.output.formats}};
  doc["tolerances"] = nlohmann::ordered_json{{"degeneracy", c.tolerances.degeneracy},
                           {"integrability_alarm", c.tolerances.integrability_alarm}};
  return doc.dump(2) + "\n";
}

StructurePtr build_structure(const StructureSpec& spec, const SphereBundleGrid& grid) {
  if (spec.name == "grid_sampled") return load_grid_sampled(spec.path, grid);
  return catalog(spec.name, spec.params).structure;
}

FlowSetup make_flow_setup(const RunConfig& config) {
  FlowSetup s;
  s.grid = config.grid.grid();
  s.grid.validate();
  s.initial = build_structure(config.structure, s.grid);
  if (config.background) s.background = build_structure(*config.background, s.grid);
  s.kind = config.flow.kind;
  s.integrator = config.flow.integrator;
  s.dt = config.flow.dt;
  s.t_end = config.flow.t_end;
  s.snapshot_stride = config.flow.snapshot_stride;
  s.fiber_modes = config.flow.fiber_modes;
  s.tolerances = config.tolerances;
  s.record_xi = s.kind == FlowKind::DeTurck;
  if (s.kind == FlowKind::Ricci && !s.grid.periodic() && config.structure.name != "grid_sampled") {
    const CatalogEntry entry = catalog(config.structure.name, config.structure.params);
    if (entry.exact_F) s.boundary = exact_boundary(s.grid, entry.exact_F);
  }
  // Evaluate the initial data once so chart and degeneracy problems surface
  // as configuration errors before any output exists.
  FlowProblem probe(s.initial, s.grid, s.kind, s.background, s.tolerances.degeneracy);
  probe.set_fiber_modes(s.fiber_modes);
  RhsResult first;
  probe.evaluate(probe.initial_field(), first, false);
  return s;
}

StructurePtr load_grid_sampled(const std::string& path, const SphereBundleGrid& grid) {
  grid.validate();
  std::ifstream in(path);
  if (!in) config_error("cannot read snapshot file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "t,i1,i2,itheta,x1,x2,theta,F,Ric") {
    config_error("'" + path + "' is not a snapshot CSV");
  }
  // Keep only the latest time slice.
  double latest = -std::numeric_limits<double>::infinity();
  FieldOnSM phi(grid, 1);
  std::vector<char> seen(grid.size(), 0);
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 9) config_error("malformed snapshot row in '" + path + "'");
    double t, x1, x2, F;
    int i1, i2, k;
    try {
      t = std::stod(cells[0]);
      i1 = std::stoi(cells[1]);
      i2 = std::stoi(cells[2]);
      k = std::stoi(cells[3]);
      x1 = std::stod(cells[4]);
      x2 = std::stod(cells[5]);
      F = std::stod(cells[7]);
    } catch (const std::exception&) {
      config_error("malformed snapshot row in '" + path + "'");
    }
    if (t > latest) {
      latest = t;
      std::fill(seen.begin(), seen.end(), 0);
      count = 0;
    } else if (t < latest) {
      continue;
    }
    if (i1 < 0 || i1 >= grid.nx1 || i2 < 0 || i2 >= grid.nx2 || k < 0 || k >= grid.ntheta) {
      config_error("snapshot '" + path + "' does not fit the configured grid");
    }
    const double scale = 1e-9 * (1.0 + std::abs(grid.x1(i1)) + std::abs(grid.x2(i2)));
    if (std::abs(x1 - grid.x1(i1)) > scale || std::abs(x2 - grid.x2(i2)) > scale) {
      config_error("snapshot '" + path + "' node coordinates differ from the configured grid");
    }
    if (!(F > 0.0) || !std::isfinite(F)) config_error("snapshot '" + path + "' has F <= 0");
    const std::size_t n = grid.index(i1, i2, k);
    if (!seen[n]) ++count;
    seen[n] = 1;
    phi.values[n] = F;
  }
  if (count != grid.size()) {
    config_error("snapshot '" + path + "' does not cover every node of the configured grid");
  }
  return std::make_shared<GridSampledStructure>("grid_sampled", std::move(phi));
}

std::string snapshots_csv(const std::vector<Snapshot>& snapshots) {
  std::string out = "t,i1,i2,itheta,x1,x2,theta,F,Ric\n";
  for (const Snapshot& s : snapshots) {
    const SphereBundleGrid& g = s.phi.grid;
    out.reserve(out.size() + g.size() * 110);
    for (int i2 = 0; i2 < g.nx2; ++i2)
      for (int i1 = 0; i1 < g.nx1; ++i1)
        for (int k = 0; k < g.ntheta; ++k) {
          append_number(out, s.t);
          out += ',';
          append_int(out, i1);
          out += ',';
          append_int(out, i2);
          out += ',';
          append_int(out, k);
          out += ',';
          append_number(out, g.x1(i1));
          out += ',';
          append_number(out, g.x2(i2));
          out += ',';
          append_number(out, g.theta(k));
          out += ',';
          append_number(out, s.phi(i1, i2, k));
          out += ',';
          append_number(out, s.ric(i1, i2, k));
          out += '\n';
        }
  }
  return out;
}

std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& records) {
  std::string out = "t,min_eig_g,integrability_residual,max_abs_ric,dt\n";
  for (const auto& r : records) {
    for (double v : {r.t, r.min_eig_g, r.integrability_residual, r.max_abs_ric}) {
      append_number(out, v);
      out += ',';
    }
    append_number(out, r.dt);
    out += '\n';
  }
  return out;
}

namespace {

// nlohmann writes NaN as null; keep the value visible instead.
json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

std::string snapshots_json(const std::vector<Snapshot>& snapshots) {
  json arr = json::array();
  for (const Snapshot& s : snapshots) {
    const SphereBundleGrid& g = s.phi.grid;
    json F = json::array(), ric = json::array();
    for (std::size_t n = 0; n < g.size(); ++n) {
      F.push_back(number_or_string(s.phi.values[n]));
      ric.push_back(number_or_string(s.ric.values[n]));
    }
    arr.push_back(json{{"t", s.t},
                       {"nx1", g.nx1},
                       {"nx2", g.nx2},
                       {"ntheta", g.ntheta},
                       {"layout", "itheta fastest, then i1, then i2"},
                       {"F", std::move(F)},
                       {"Ric", std::move(ric)}});
  }
  return json{{"snapshots", std::move(arr)}}.dump() + "\n";
}

std::string diagnostics_json(const FlowResult& result) {
  json rows = json::array();
  for (const auto& r : result.diagnostics) {
    rows.push_back(json{{"t", number_or_string(r.t)},
                        {"min_eig_g", number_or_string(r.min_eig_g)},
                        {"integrability_residual", number_or_string(r.integrability_residual)},
                        {"max_abs_ric", number_or_string(r.max_abs_ric)},
                        {"dt", number_or_string(r.dt)}});
  }
  json doc{{"diagnostics", std::move(rows)},
           {"early_stop", result.early_stop},
           {"integrability_alarm", result.integrability_alarm}};
  if (result.early_stop) {
    doc["stop_kind"] = to_string(result.stop_kind);
    doc["stop_reason"] = result.stop_reason;
  }
  return doc.dump(2) + "\n";
}

namespace {

template <typename Emit>
void for_each_quantity(const GeometryJet& j, Emit&& emit) {
  emit("F", j.F);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) emit("g" + std::to_string(i + 1) + std::to_string(k + 1), j.g(i, k));
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l)
        emit("C" + std::to_string(i + 1) + std::to_string(k + 1) + std::to_string(l + 1),
             j.cartan[l](i, k));
  for (int i = 0; i < 2; ++i) emit("G" + std::to_string(i + 1), j.spray[i]);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) emit("N" + std::to_string(i + 1) + "_" + std::to_string(k + 1), j.N(i, k));
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l)
        emit("Gamma" + std::to_string(i + 1) + "_" + std::to_string(k + 1) + std::to_string(l + 1),
             j.chern[i](k, l));
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      emit("R" + std::to_string(i + 1) + "_" + std::to_string(k + 1), j.reduced(i, k));
  emit("Ric", j.ric);
}

}  // namespace

std::string geometry_csv(const GeometryJet& jet) {
  std::string out = "quantity,value\n";
  for_each_quantity(jet, [&](const std::string& name, double v) {
    out += name;
    out += ',';
    append_number(out, v);
    out += '\n';
  });
  return out;
}

std::string geometry_json(const GeometryJet& jet) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for_each_quantity(jet, [&](const std::string& name, double v) {
    if (std::isfinite(v)) {
      doc[name] = v;
    } else {
      doc[name] = std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    }
  });
  return doc.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace finsler
