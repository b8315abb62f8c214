#include "finsler/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "finsler/catalog.hpp"
#include "finsler/deturck.hpp"
#include "finsler/flow.hpp"
#include "finsler/geometry.hpp"
#include "finsler/io.hpp"
#include "finsler/validation.hpp"
#include "json.hpp"

namespace finsler {

namespace {

struct GlobalFlags {
  std::string out;
  std::string format;
  int threads = 1;
};

Vec2 parse_pair(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  double a, b;
  char comma;
  if (!(in >> a >> comma >> b) || comma != ',' || !(in >> std::ws).eof()) {
    throw FinslerError(ErrorKind::Config, what + " must look like 'a,b', got '" + text + "'");
  }
  return {a, b};
}

ParamMap parse_params(const std::vector<std::string>& items) {
  ParamMap p;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw FinslerError(ErrorKind::Config, "--param expects key=value, got '" + item + "'");
    }
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(item.substr(eq + 1), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() - eq - 1) {
      throw FinslerError(ErrorKind::Config, "--param value is not a number in '" + item + "'");
    }
    p[item.substr(0, eq)] = v;
  }
  return p;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateMetric:
    case ErrorKind::DegeneratePullback:
    case ErrorKind::CollapsedMetric:
      return kExitDegenerate;
    default:
      return kExitUsage;
  }
}

void ensure_format(const std::string& format) {
  if (!format.empty() && format != "csv" && format != "json") {
    throw FinslerError(ErrorKind::Config, "--format must be csv or json");
  }
}

void write_outputs(const std::string& dir, const std::map<std::string, std::string>& files) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, contents] : files) write_file((std::filesystem::path(dir) / name).string(), contents);
}

int cmd_geom(const GlobalFlags& flags, const std::string& structure,
             const std::vector<std::string>& params, const std::string& at, const std::string& dir,
             std::ostream& out) {
  ensure_format(flags.format);
  const Vec2 x = parse_pair(at, "--at");
  const Vec2 y = parse_pair(dir, "--dir");
  const StructurePtr s = catalog(structure, parse_params(params)).structure;
  const GeometryJet jet = geometry_jet(*s, {x[0], x[1]}, {y[0], y[1]});
  const bool json = flags.format == "json";
  const std::string report = json ? geometry_json(jet) : geometry_csv(jet);
  if (!flags.out.empty()) write_outputs(flags.out, {{json ? "geometry.json" : "geometry.csv", report}});
  out << report;
  return kExitOk;
}

int cmd_flow(const GlobalFlags& flags, const std::string& config_path, std::ostream& out,
             std::ostream& err) {
  ensure_format(flags.format);
  RunConfig config = load_config(config_path);
  if (!flags.out.empty()) config.output.directory = flags.out;
  if (!flags.format.empty()) config.output.formats = {flags.format};
  // Every check that can fail on the inputs runs here, before any file exists.
  FlowSetup setup = make_flow_setup(config);
  setup.threads = flags.threads;

  const FlowResult result = run_flow(setup);

  std::map<std::string, std::string> files;
  files["run_config.json"] = serialize_config(config);
  const auto& formats = config.output.formats;
  const bool csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
  const bool json = std::find(formats.begin(), formats.end(), "json") != formats.end();
  if (csv) {
    files["snapshots.csv"] = snapshots_csv(result.snapshots);
    files["diagnostics.csv"] = diagnostics_csv(result.diagnostics);
  }
  if (json) {
    files["snapshots.json"] = snapshots_json(result.snapshots);
    files["diagnostics.json"] = diagnostics_json(result);
  }
  if (setup.kind == FlowKind::DeTurck && !result.xi_history.empty()) {
    try {
      const DiffeoFamily family = integrate_diffeomorphisms(result.xi_history, setup.grid,
                                                            setup.dt, LeftChartPolicy::Freeze);
      files["diffeo.csv"] = diffeo_csv(family);
    } catch (const FinslerError& e) {
      err << "warning: no diffeomorphism output: " << e.what() << "\n";
    }
  }
  write_outputs(config.output.directory, files);

  out << "t_final=" << result.final_state.t << " snapshots=" << result.snapshots.size()
      << " diagnostics=" << result.diagnostics.size() << " out=" << config.output.directory << "\n";
  if (result.integrability_alarm) err << "warning: integrability residual exceeded the alarm level\n";
  if (result.early_stop) {
    err << "early stop (" << to_string(result.stop_kind) << "): " << result.stop_reason << "\n";
    return kExitEarlyStop;
  }
  return kExitOk;
}

int cmd_validate(const GlobalFlags& flags, const std::string& suite, std::ostream& out) {
  ensure_format(flags.format);
  ValidationOptions options;
  options.threads = flags.threads;
  const std::vector<CheckResult> results = run_suite(suite, options);
  bool all = true;
  for (const auto& r : results) all = all && r.pass;

  std::string report;
  if (flags.format == "json") {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : results) {
      rows.push_back({{"suite", r.suite},
                      {"criterion", r.criterion},
                      {"name", r.name},
                      {"pass", r.pass},
                      {"measured", std::isfinite(r.measured) ? nlohmann::ordered_json(r.measured)
                                                             : nlohmann::ordered_json("nan")},
                      {"tolerance", std::isfinite(r.tolerance) ? nlohmann::ordered_json(r.tolerance)
                                                               : nlohmann::ordered_json("inf")},
                      {"bound", r.lower_bound ? ">=" : "<="},
                      {"seconds", r.seconds},
                      {"note", r.note}});
    }
    report = nlohmann::ordered_json{{"suite", suite}, {"pass", all}, {"checks", rows}}.dump(2) + "\n";
  } else {
    for (const auto& r : results) report += format_check(r) + "\n";
    report += all ? "ALL PASS\n" : "FAILURES\n";
  }
  if (!flags.out.empty()) {
    write_outputs(flags.out, {{flags.format == "json" ? "validation.json" : "validation.txt", report}});
  }
  out << report;
  return all ? kExitOk : kExitValidationFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ricci and Ricci-DeTurck flows of Finsler surfaces", "finsler"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--format", flags.format, "Output format: csv or json");
  app.add_option("--threads", flags.threads, "Worker threads (advisory)")->check(CLI::PositiveNumber);

  std::string structure, at = "0,0", dir = "1,0", config_path, suite = "all";
  std::vector<std::string> params;
  CLI::App* geom = app.add_subcommand("geom", "Every geometric quantity of a catalog structure at (x, y)");
  geom->fallthrough();
  geom->add_option("--structure", structure, "Catalog entry")->required();
  geom->add_option("--param", params, "Entry parameter key=value (repeatable)");
  geom->add_option("--at", at, "Chart point x1,x2");
  geom->add_option("--dir", dir, "Tangent vector y1,y2");

  CLI::App* flow = app.add_subcommand("flow", "Run a flow described by a JSON config");
  flow->fallthrough();
  flow->add_option("config", config_path, "Config file")->required();

  CLI::App* validate = app.add_subcommand("validate", "Run validation suites");
  validate->fallthrough();
  validate->add_option("--suite", suite, "kernel | flows | deturck | all");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*geom) return cmd_geom(flags, structure, params, at, dir, out);
    if (*flow) return cmd_flow(flags, config_path, out, err);
    return cmd_validate(flags, suite, out);
  } catch (const FinslerError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace finsler
