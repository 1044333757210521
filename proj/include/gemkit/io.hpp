#pragma once

#include "gemkit/evaluation.hpp"
#include "gemkit/gem.hpp"
#include "gemkit/graph.hpp"
#include "gemkit/simulator.hpp"
#include "gemkit/snapshot.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gemkit::io {

/// Shortest decimal that round-trips; "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view bytes);

/// "# gemkit <version> config=<16 hex digits> seed=<seed|none>"
std::string provenance_line(std::string_view config_text, std::optional<std::uint64_t> seed);

/// Comma-separated, header row mandatory; blank lines and lines starting with
/// '#' (provenance) are skipped. No quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws InputError when absent
};
CsvTable parse_csv(std::string_view text, std::string_view what = "csv");
CsvTable read_csv(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

double parse_double(std::string_view s, std::string_view what);
long parse_long(std::string_view s, std::string_view what);

// Graph JSON: {side_length_m, adjacent_distance_m, vertices:[{id, q, r}],
// blocked:[{from, to}], neighborhood_order, self_cost}; ids 0..N-1.
struct GraphFile {
  HexGridSpec spec;
  int neighborhood_order = 2;

  WeightedGraph build() const { return build_hex_grid(spec, neighborhood_order); }
};
GraphFile parse_graph_json(std::string_view text);
std::string graph_json(const GraphFile& g);

/// `timestamp,vertex_id,demand,supply`; missing rows are zero, duplicate rows
/// are rejected, timestamps ascend in the result. Throws
/// InputError("no snapshots") on an empty file.
SnapshotSeries parse_snapshots(const CsvTable& table, int vertices);
std::string snapshots_csv(const SnapshotSeries& series);

std::string plan_csv(const TransportPlan<double>& plan);     // from_vertex,to_vertex,flow (positive flows)
std::string maps_csv(std::span<const EquilibriumMap<double>> maps);  // timestamp,vertex_id,dsr,dsd

/// day,interval,arm,outcome_name,outcome,demand_total,supply_time_total
std::string panels_csv(std::span<const PanelDataset> panels);
std::vector<PanelDataset> parse_panels(const CsvTable& table);

/// SimConfig from JSON. An optional "world" object seeds the config from
/// synthetic_world; explicit fields override it. Without a world the graph
/// must be supplied.
SimConfig parse_sim_config(std::string_view text, std::shared_ptr<const WeightedGraph> graph = nullptr);

}  // namespace gemkit::io
