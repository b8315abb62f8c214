#pragma once

#include <optional>
#include <string>
#include <vector>

#include "finsler/catalog.hpp"
#include "finsler/flow.hpp"
#include "finsler/geometry.hpp"

namespace finsler {

struct StructureSpec {
  std::string name;
  ParamMap params;
  /// Snapshot CSV for grid_sampled structures (stored as params.path in JSON).
  std::string path;

  bool operator==(const StructureSpec&) const = default;
};

struct GridSpec {
  int nx1 = 33;
  int nx2 = 33;
  Vec2 lower{-1.0, -1.0};
  Vec2 upper{1.0, 1.0};
  BoundaryMode boundary = BoundaryMode::Pinned;
  int ntheta = 64;

  bool operator==(const GridSpec& o) const {
    return nx1 == o.nx1 && nx2 == o.nx2 && lower == o.lower && upper == o.upper &&
           boundary == o.boundary && ntheta == o.ntheta;
  }
  SphereBundleGrid grid() const;
};

struct FlowSpec {
  FlowKind kind = FlowKind::Ricci;
  Integrator integrator = Integrator::RK4;
  double dt = 1e-3;
  double t_end = 0.1;
  int snapshot_stride = 10;
  int fiber_modes = 2;

  bool operator==(const FlowSpec&) const = default;
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<std::string> formats{"csv"};

  bool operator==(const OutputSpec&) const = default;
};

/// A flow run as read from a JSON document:
///
///   {
///     "structure":  {"name": "round_sphere", "params": {}},
///     "grid":       {"nx1": 33, "nx2": 33, "bounds": [[-1, 1], [-1, 1]],
///                    "boundary": "pinned", "ntheta": 64},
///     "flow":       {"kind": "ricci", "integrator": "rk4", "dt": 0.001,
///                    "t_end": 0.1, "snapshot_stride": 10, "fiber_modes": 2},
///     "background": {"name": "round_sphere", "params": {}},
///     "output":     {"directory": "out", "formats": ["csv"]},
///     "tolerances": {"degeneracy": 1e-12, "integrability_alarm": 0.001}
///   }
///
/// structure, grid and flow are required; the rest have defaults. background
/// is required for DeTurck flows and rejected for Ricci flows.
struct RunConfig {
  StructureSpec structure;
  GridSpec grid;
  FlowSpec flow;
  std::optional<StructureSpec> background;
  OutputSpec output;
  FlowTolerances tolerances;

  bool operator==(const RunConfig& o) const {
    return structure == o.structure && grid == o.grid && flow == o.flow &&
           background == o.background && output == o.output &&
           tolerances.degeneracy == o.tolerances.degeneracy &&
           tolerances.integrability_alarm == o.tolerances.integrability_alarm;
  }
};

/// Parses and schema-checks a config. Throws FinslerError(Config) on syntax
/// errors, unknown keys, wrong types and out-of-range values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical JSON text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// Builds the structure named by a spec; grid_sampled entries are loaded
/// onto `grid`.
StructurePtr build_structure(const StructureSpec& spec, const SphereBundleGrid& grid);

/// Everything run_flow needs, with every catalog and grid check done. Pinned
/// Ricci runs use the entry's closed-form flow at the boundary when there is
/// one and hold the initial values otherwise.
FlowSetup make_flow_setup(const RunConfig& config);

/// The last time slice of a snapshot CSV as a grid-sampled structure on
/// `grid`. Throws Config when the file does not match the grid.
StructurePtr load_grid_sampled(const std::string& path, const SphereBundleGrid& grid);

// Writers. Numbers use %.17g so files round-trip exactly and repeat bytewise.

/// t,i1,i2,itheta,x1,x2,theta,F,Ric
std::string snapshots_csv(const std::vector<Snapshot>& snapshots);
/// t,min_eig_g,integrability_residual,max_abs_ric,dt
std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& records);
std::string snapshots_json(const std::vector<Snapshot>& snapshots);
std::string diagnostics_json(const FlowResult& result);

/// Every field of a GeometryJet as "quantity,value" rows or a JSON object.
std::string geometry_csv(const GeometryJet& jet);
std::string geometry_json(const GeometryJet& jet);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace finsler
