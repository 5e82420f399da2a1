#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "stratum/experiments.hpp"

namespace stratum::experiments {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

// Metadata is free text; keep it inside one field.
std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

void write_result_csv(std::ostream& os, const std::string& hash, const std::vector<ResultRow>& rows) {
  os << "schema=" << kSchemaVersion << '\n';
  os << "config_hash,experiment,kind,eps,xi,stiff_energy,soft_energy,approx_error,weak_error,value,bound,slope,"
        "metadata\n";
  for (const ResultRow& r : rows) {
    os << hash << ',' << r.experiment << ',' << r.kind << ',' << opt(r.eps) << ',' << opt(r.xi) << ','
       << opt(r.stiff_energy) << ',' << opt(r.soft_energy) << ',' << opt(r.approx_error) << ','
       << opt(r.weak_error) << ',' << opt(r.value) << ',' << opt(r.bound) << ',' << opt(r.slope) << ','
       << quote(r.metadata) << '\n';
  }
}

void write_cell_csv(std::ostream& os, const std::string& hash, int n, const std::vector<CellRow>& rows) {
  os << "schema=" << kSchemaVersion << '\n';
  os << "config_hash,kind";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) os << ",F_" << i + 1 << j + 1;
  os << ",w_convex,w_cell,w_cell_rigid,delta,converged,iterations,metadata\n";
  for (const CellRow& r : rows) {
    os << hash << ',' << r.kind;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) os << ',' << format_double(r.F(i, j));
    os << ',' << opt(r.w_convex) << ',' << opt(r.w_cell) << ',' << opt(r.w_cell_rigid) << ',' << opt(r.delta)
       << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << ',' << quote(r.metadata) << '\n';
  }
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line) || line.rfind("schema=", 0) != 0) throw std::runtime_error("csv: missing schema line");
  t.schema = std::stoi(line.substr(7));
  if (!std::getline(in, line)) throw std::runtime_error("csv: missing header");
  t.header = split_row(line);
  if (t.header.empty() || t.header.front() != "config_hash") throw std::runtime_error("csv: first column must be config_hash");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split_row(line);
    if (row.size() != t.header.size()) throw std::runtime_error("csv: row width differs from header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable aggregate(const std::vector<CsvTable>& tables) {
  if (tables.empty()) throw std::invalid_argument("aggregate: nothing to merge");
  CsvTable out;
  out.schema = tables.front().schema;
  out.header = tables.front().header;
  std::optional<std::string> hash;
  for (const CsvTable& t : tables) {
    if (t.schema != out.schema) throw std::invalid_argument("aggregate: schema versions differ");
    if (t.header != out.header) throw std::invalid_argument("aggregate: headers differ");
    for (const auto& row : t.rows) {
      if (!hash) hash = row.front();
      if (row.front() != *hash) throw std::invalid_argument("aggregate: rows come from different configurations");
      out.rows.push_back(row);
    }
  }
  return out;
}

}  // namespace stratum::experiments
