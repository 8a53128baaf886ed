#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"

namespace hcf {

struct Bus {
  BusId id = 0;
  double demand = 0.0;      // power units
  double generation = 0.0;  // power units
};

struct Line {
  LineId id = 0;
  BusId from = 0;
  BusId to = 0;
  double susceptance = 0.0;  // per unit, 1/reactance under the DC approximation
  double capacity = 0.0;     // power units
  bool in_service = true;
};

/// Physical transmission grid: buses with injections plus lines.
/// Ids are unique, every line references existing buses, susceptance is
/// positive on in-service lines and capacity is positive everywhere.
struct GridCase {
  std::vector<Bus> buses;  // sorted by id
  std::vector<Line> lines; // sorted by id

  const Bus* find_bus(BusId id) const;
  const Line* find_line(LineId id) const;
  std::vector<LineId> line_ids(bool in_service_only = false) const;

  double total_demand() const;
  double total_generation() const;
};

enum class GridFormat { case_csv, matpower };

struct BalanceReport {
  double surplus = 0.0;  // generation - demand
  bool balanced = false; // |surplus| <= 1e-6
};

// Parses a case description. Sorts buses/lines by id and checks the
// structural invariants (balance is checked separately); throws
// Error(ErrorCode::data) with the offending entity and source line on
// failure.
GridCase parse_grid_case(std::string_view text, GridFormat format);

// Format inferred from extension: ".m" -> matpower, otherwise case CSV.
GridCase load_grid_case(const std::string& path);

BalanceReport validate_balance(const GridCase& grid);

// Canonical ".case.csv" serialization (sorted ids, round-trip exact floats).
std::string serialize_grid_case(const GridCase& grid);
void save_grid_case(const GridCase& grid, const std::string& path);

// Grid edits used by the mitigation and transfer workflows. Both return a
// new grid and leave the input untouched.
GridCase double_capacities(const GridCase& grid, const std::vector<LineId>& lines);
GridCase scale_demand(const GridCase& grid, double factor, bool scale_generation);

}  // namespace hcf
