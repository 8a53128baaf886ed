#include "grid.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace hcf {

namespace {

constexpr double kBalanceTol = 1e-6;

struct Cursor {
  std::string_view text;
  std::size_t pos = 0;
  int line = 1;

  bool done() const { return pos >= text.size(); }
  std::string_view next_line() {
    std::size_t start = pos;
    while (pos < text.size() && text[pos] != '\n') ++pos;
    std::string_view out = text.substr(start, pos - start);
    if (pos < text.size()) ++pos;
    ++line;
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    return out;
  }
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void syntax_error(int line, int field, const std::string& what) {
  throw_data("syntax error at line " + std::to_string(line) + ", field " +
             std::to_string(field) + ": " + what);
}

double parse_real(std::string_view tok, int line, int field) {
  tok = trim(tok);
  if (tok.empty()) syntax_error(line, field, "empty numeric field");
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    syntax_error(line, field, "expected a number, got '" + std::string(tok) + "'");
  return value;
}

std::int64_t parse_int(std::string_view tok, int line, int field) {
  double v = parse_real(tok, line, field);
  auto i = static_cast<std::int64_t>(std::llround(v));
  if (static_cast<double>(i) != v)
    syntax_error(line, field, "expected an integer, got '" + std::string(tok) + "'");
  return i;
}

std::vector<std::string_view> split_csv(std::string_view row) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= row.size(); ++i) {
    if (i == row.size() || row[i] == ',') {
      out.push_back(trim(row.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

// Whitespace-separated numbers; trailing ';' and '%' comments are stripped.
std::vector<double> split_numeric_row(std::string_view row, int line) {
  if (auto c = row.find('%'); c != std::string_view::npos) row = row.substr(0, c);
  std::vector<double> out;
  std::size_t i = 0;
  int field = 0;
  while (i < row.size()) {
    while (i < row.size() &&
           (std::isspace(static_cast<unsigned char>(row[i])) || row[i] == ';'))
      ++i;
    if (i >= row.size()) break;
    std::size_t start = i;
    while (i < row.size() && !std::isspace(static_cast<unsigned char>(row[i])) &&
           row[i] != ';')
      ++i;
    out.push_back(parse_real(row.substr(start, i - start), line, ++field));
  }
  return out;
}

void validate_structure(GridCase& grid) {
  std::sort(grid.buses.begin(), grid.buses.end(),
            [](const Bus& a, const Bus& b) { return a.id < b.id; });
  std::sort(grid.lines.begin(), grid.lines.end(),
            [](const Line& a, const Line& b) { return a.id < b.id; });

  std::unordered_set<BusId> bus_ids;
  for (const Bus& b : grid.buses) {
    if (!bus_ids.insert(b.id).second)
      throw_data("duplicate bus id " + std::to_string(b.id));
  }
  std::unordered_set<LineId> line_ids;
  for (const Line& l : grid.lines) {
    if (!line_ids.insert(l.id).second)
      throw_data("duplicate line id " + std::to_string(l.id));
    if (!bus_ids.count(l.from))
      throw_data("line " + std::to_string(l.id) + " references missing bus " +
                 std::to_string(l.from));
    if (!bus_ids.count(l.to))
      throw_data("line " + std::to_string(l.id) + " references missing bus " +
                 std::to_string(l.to));
    if (l.from == l.to)
      throw_data("line " + std::to_string(l.id) + " is a self-loop at bus " +
                 std::to_string(l.from));
    if (l.in_service && l.susceptance <= 0.0)
      throw_data("line " + std::to_string(l.id) + " has non-positive susceptance");
    if (l.capacity <= 0.0)
      throw_data("line " + std::to_string(l.id) + " has non-positive capacity");
  }
  if (grid.buses.empty()) throw_data("case has no buses");
}

GridCase parse_case_csv(std::string_view text) {
  enum class Section { none, buses, gens, lines };
  GridCase grid;
  std::unordered_map<BusId, std::size_t> bus_index;
  Cursor cur{text};
  Section section = Section::none;
  while (!cur.done()) {
    int line_no = cur.line;
    std::string_view row = trim(cur.next_line());
    if (row.empty()) continue;
    if (row[0] == '#') {
      if (row == "#buses") section = Section::buses;
      else if (row == "#gens") section = Section::gens;
      else if (row == "#lines") section = Section::lines;
      continue;  // other '#' lines are comments
    }
    auto fields = split_csv(row);
    switch (section) {
      case Section::none:
        syntax_error(line_no, 1, "data before any section header");
      case Section::buses: {
        if (fields.size() != 2) syntax_error(line_no, 1, "bus row needs: id,demand");
        Bus b;
        b.id = parse_int(fields[0], line_no, 1);
        b.demand = parse_real(fields[1], line_no, 2);
        bus_index[b.id] = grid.buses.size();
        grid.buses.push_back(b);
        break;
      }
      case Section::gens: {
        if (fields.size() != 2) syntax_error(line_no, 1, "gen row needs: bus,output");
        BusId bus = parse_int(fields[0], line_no, 1);
        double output = parse_real(fields[1], line_no, 2);
        auto it = bus_index.find(bus);
        if (it == bus_index.end())
          throw_data("generator at line " + std::to_string(line_no) +
                     " references missing bus " + std::to_string(bus));
        grid.buses[it->second].generation += output;
        break;
      }
      case Section::lines: {
        if (fields.size() != 5 && fields.size() != 6)
          syntax_error(line_no, 1,
                       "line row needs: id,from,to,susceptance,capacity[,status]");
        Line l;
        l.id = parse_int(fields[0], line_no, 1);
        l.from = parse_int(fields[1], line_no, 2);
        l.to = parse_int(fields[2], line_no, 3);
        l.susceptance = parse_real(fields[3], line_no, 4);
        l.capacity = parse_real(fields[4], line_no, 5);
        l.in_service = fields.size() < 6 || parse_int(fields[5], line_no, 6) != 0;
        grid.lines.push_back(l);
        break;
      }
    }
  }
  validate_structure(grid);
  return grid;
}

// Pragmatic subset of the MATPOWER case syntax: the numeric mpc.bus,
// mpc.gen and mpc.branch tables. Unknown columns are ignored.
GridCase parse_matpower(std::string_view text) {
  struct Table {
    std::vector<std::vector<double>> rows;
    std::vector<int> lines;
  };
  std::unordered_map<std::string, Table> tables;
  Cursor cur{text};
  std::string active;
  while (!cur.done()) {
    int line_no = cur.line;
    std::string_view row = trim(cur.next_line());
    if (row.empty() || row[0] == '%') continue;
    if (active.empty()) {
      for (const char* name : {"bus", "gen", "branch"}) {
        std::string head = std::string("mpc.") + name;
        if (row.substr(0, head.size()) == head) {
          auto rest = trim(row.substr(head.size()));
          if (!rest.empty() && rest[0] == '=' &&
              trim(rest.substr(1)).substr(0, 1) == "[") {
            active = name;
          }
        }
      }
      continue;
    }
    if (row.substr(0, 2) == "];" || row == "]") {
      active.clear();
      continue;
    }
    auto values = split_numeric_row(row, line_no);
    if (values.empty()) continue;
    tables[active].rows.push_back(std::move(values));
    tables[active].lines.push_back(line_no);
  }
  if (!tables.count("bus")) throw_data("matpower case has no mpc.bus table");
  if (!tables.count("branch")) throw_data("matpower case has no mpc.branch table");

  GridCase grid;
  std::unordered_map<BusId, std::size_t> bus_index;
  const Table& bus = tables["bus"];
  for (std::size_t r = 0; r < bus.rows.size(); ++r) {
    const auto& row = bus.rows[r];
    if (row.size() < 3) syntax_error(bus.lines[r], 3, "bus row needs >= 3 columns");
    Bus b;
    b.id = static_cast<BusId>(std::llround(row[0]));
    b.demand = row[2];  // Pd
    bus_index[b.id] = grid.buses.size();
    grid.buses.push_back(b);
  }
  if (tables.count("gen")) {
    const Table& gen = tables["gen"];
    for (std::size_t r = 0; r < gen.rows.size(); ++r) {
      const auto& row = gen.rows[r];
      if (row.size() < 2) syntax_error(gen.lines[r], 2, "gen row needs >= 2 columns");
      auto bus_id = static_cast<BusId>(std::llround(row[0]));
      auto it = bus_index.find(bus_id);
      if (it == bus_index.end())
        throw_data("generator references missing bus " + std::to_string(bus_id));
      grid.buses[it->second].generation += row[1];  // Pg
    }
  }
  const Table& branch = tables["branch"];
  for (std::size_t r = 0; r < branch.rows.size(); ++r) {
    const auto& row = branch.rows[r];
    if (row.size() < 6) syntax_error(branch.lines[r], 6, "branch row needs >= 6 columns");
    Line l;
    l.id = static_cast<LineId>(r + 1);  // branches carry no ids; number them
    l.from = static_cast<BusId>(std::llround(row[0]));
    l.to = static_cast<BusId>(std::llround(row[1]));
    double reactance = row[3];  // x
    if (reactance <= 0.0)
      throw_data("line " + std::to_string(l.id) + " has non-positive reactance");
    l.susceptance = 1.0 / reactance;
    l.capacity = row[5];  // rateA
    l.in_service = row.size() < 11 || row[10] != 0.0;
    grid.lines.push_back(l);
  }
  validate_structure(grid);
  return grid;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const Bus* GridCase::find_bus(BusId id) const {
  auto it = std::lower_bound(buses.begin(), buses.end(), id,
                             [](const Bus& b, BusId v) { return b.id < v; });
  return it != buses.end() && it->id == id ? &*it : nullptr;
}

const Line* GridCase::find_line(LineId id) const {
  auto it = std::lower_bound(lines.begin(), lines.end(), id,
                             [](const Line& l, LineId v) { return l.id < v; });
  return it != lines.end() && it->id == id ? &*it : nullptr;
}

std::vector<LineId> GridCase::line_ids(bool in_service_only) const {
  std::vector<LineId> out;
  out.reserve(lines.size());
  for (const Line& l : lines)
    if (!in_service_only || l.in_service) out.push_back(l.id);
  return out;
}

double GridCase::total_demand() const {
  double d = 0.0;
  for (const Bus& b : buses) d += b.demand;
  return d;
}

double GridCase::total_generation() const {
  double g = 0.0;
  for (const Bus& b : buses) g += b.generation;
  return g;
}

GridCase parse_grid_case(std::string_view text, GridFormat format) {
  if (trim(text).empty()) throw_data("empty case text");
  return format == GridFormat::matpower ? parse_matpower(text) : parse_case_csv(text);
}

GridCase load_grid_case(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open case file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  GridFormat fmt = path.size() > 2 && path.substr(path.size() - 2) == ".m"
                       ? GridFormat::matpower
                       : GridFormat::case_csv;
  return parse_grid_case(buf.str(), fmt);
}

BalanceReport validate_balance(const GridCase& grid) {
  BalanceReport rep;
  rep.surplus = grid.total_generation() - grid.total_demand();
  rep.balanced = std::abs(rep.surplus) <= kBalanceTol;
  return rep;
}

std::string serialize_grid_case(const GridCase& grid) {
  std::ostringstream out;
  out << "#buses\n";
  for (const Bus& b : grid.buses)
    out << b.id << ',' << format_real(b.demand) << '\n';
  out << "#gens\n";
  for (const Bus& b : grid.buses)
    if (b.generation != 0.0) out << b.id << ',' << format_real(b.generation) << '\n';
  out << "#lines\n";
  for (const Line& l : grid.lines)
    out << l.id << ',' << l.from << ',' << l.to << ',' << format_real(l.susceptance)
        << ',' << format_real(l.capacity) << ',' << (l.in_service ? 1 : 0) << '\n';
  return out.str();
}

void save_grid_case(const GridCase& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write case file: " + path);
  out << serialize_grid_case(grid);
}

GridCase double_capacities(const GridCase& grid, const std::vector<LineId>& lines) {
  GridCase out = grid;
  for (LineId id : lines) {
    auto it = std::lower_bound(out.lines.begin(), out.lines.end(), id,
                               [](const Line& l, LineId v) { return l.id < v; });
    if (it == out.lines.end() || it->id != id)
      throw_data("unknown line id " + std::to_string(id));
    it->capacity *= 2.0;
  }
  return out;
}

GridCase scale_demand(const GridCase& grid, double factor, bool scale_generation) {
  if (factor <= 0.0) throw_usage("demand factor must be positive");
  GridCase out = grid;
  for (Bus& b : out.buses) {
    b.demand *= factor;
    if (scale_generation) b.generation *= factor;
  }
  return out;
}

}  // namespace hcf
