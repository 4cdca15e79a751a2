#include "rbci/panel_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace rbci::io {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

bool parse_number(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

// Time labels sort numerically when every label parses as a number,
// lexicographically otherwise.
std::vector<std::string> ordered_time_ids(const std::vector<std::string>& seen) {
  std::vector<std::string> ids = seen;
  bool all_numeric = true;
  double tmp;
  for (const auto& s : ids)
    if (!parse_number(s, tmp)) {
      all_numeric = false;
      break;
    }
  if (all_numeric) {
    std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
      double x = 0, y = 0;
      parse_number(a, x);
      parse_number(b, y);
      return x < y;
    });
  } else {
    std::sort(ids.begin(), ids.end());
  }
  return ids;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

PanelFile read_panel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_panel: cannot open " + path);

  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split_csv(line);
    break;
  }
  if (header.empty()) throw std::runtime_error("read_panel: missing header in " + path);

  int col_unit = -1, col_time = -1, col_outcome = -1, col_start = -1, col_group = -1;
  std::vector<int> cov_cols;
  std::vector<std::string> cov_names;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& h = header[c];
    if (h == "unit")
      col_unit = c;
    else if (h == "time")
      col_time = c;
    else if (h == "outcome")
      col_outcome = c;
    else if (h == "treated_start")
      col_start = c;
    else if (h == "group")
      col_group = c;
    else {
      cov_cols.push_back(c);
      cov_names.push_back(h);
    }
  }
  if (col_unit < 0 || col_time < 0 || col_outcome < 0)
    throw std::runtime_error("read_panel: header must contain unit,time,outcome");

  struct Row {
    std::string unit, time, outcome, start, group;
    std::vector<std::string> covs;
  };
  std::vector<Row> rows;
  std::vector<std::string> unit_order, time_seen;
  std::unordered_map<std::string, int> unit_index, time_mark;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw std::runtime_error("read_panel: ragged row in " + path + ": " + line);
    Row r;
    r.unit = fields[col_unit];
    r.time = fields[col_time];
    r.outcome = fields[col_outcome];
    if (col_start >= 0) r.start = fields[col_start];
    if (col_group >= 0) r.group = fields[col_group];
    for (int c : cov_cols) r.covs.push_back(fields[c]);
    if (!unit_index.count(r.unit)) {
      unit_index[r.unit] = static_cast<int>(unit_order.size());
      unit_order.push_back(r.unit);
    }
    if (!time_mark.count(r.time)) {
      time_mark[r.time] = 1;
      time_seen.push_back(r.time);
    }
    rows.push_back(std::move(r));
  }

  PanelFile file;
  file.covariate_names = cov_names;
  PanelData& panel = file.panel;
  panel.unit_ids = unit_order;
  panel.time_ids = ordered_time_ids(time_seen);
  const int n = panel.n_units(), t_len = panel.n_times();
  std::unordered_map<std::string, int> time_index;
  for (int t = 0; t < t_len; ++t) time_index[panel.time_ids[t]] = t;

  panel.outcomes = Eigen::MatrixXd::Constant(n, t_len, std::nan(""));
  panel.covariates.assign(cov_cols.size(), Eigen::MatrixXd::Zero(n, t_len));
  panel.treatment_start.assign(n, std::nullopt);
  if (col_group >= 0) panel.unit_groups.assign(n, "");

  std::vector<std::vector<char>> seen(n, std::vector<char>(t_len, 0));
  for (const Row& r : rows) {
    const int i = unit_index[r.unit];
    const int t = time_index[r.time];
    if (seen[i][t])
      throw std::runtime_error("read_panel: duplicate cell (" + r.unit + "," + r.time + ")");
    seen[i][t] = 1;
    if (!r.outcome.empty()) {
      double y;
      if (!parse_number(r.outcome, y))
        throw std::runtime_error("read_panel: bad outcome '" + r.outcome + "'");
      panel.outcomes(i, t) = y;
    }
    if (!r.start.empty()) {
      const auto it = time_index.find(r.start);
      if (it == time_index.end())
        throw std::runtime_error("read_panel: treated_start '" + r.start +
                                 "' is not a time label");
      if (panel.treatment_start[i] && *panel.treatment_start[i] != it->second)
        throw std::runtime_error("read_panel: inconsistent treated_start for unit " + r.unit);
      panel.treatment_start[i] = it->second;
    }
    if (col_group >= 0) {
      if (!panel.unit_groups[i].empty() && panel.unit_groups[i] != r.group)
        throw std::runtime_error("read_panel: inconsistent group for unit " + r.unit);
      panel.unit_groups[i] = r.group;
    }
    for (std::size_t k = 0; k < r.covs.size(); ++k) {
      double v;
      if (!parse_number(r.covs[k], v))
        throw std::runtime_error("read_panel: bad covariate '" + r.covs[k] + "'");
      panel.covariates[k](i, t) = v;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < t_len; ++t)
      if (!seen[i][t])
        throw std::runtime_error("read_panel: cell (" + panel.unit_ids[i] + "," +
                                 panel.time_ids[t] + ") absent; panels must be rectangular");
  panel.validate();
  return file;
}

void write_panel(const std::string& path, const PanelData& panel,
                 const std::vector<std::string>& covariate_names, const std::string& digest) {
  if (static_cast<int>(covariate_names.size()) != panel.n_covariates())
    throw std::invalid_argument("write_panel: covariate name count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_panel: cannot open " + path);
  if (!digest.empty()) out << "# digest=" << digest << "\n";
  out << "unit,time,outcome,treated_start";
  if (!panel.unit_groups.empty()) out << ",group";
  for (const auto& name : covariate_names) out << "," << name;
  out << "\n";
  for (int i = 0; i < panel.n_units(); ++i) {
    for (int t = 0; t < panel.n_times(); ++t) {
      out << panel.unit_ids[i] << "," << panel.time_ids[t] << ",";
      if (panel.is_observed(i, t)) out << format_double(panel.outcomes(i, t));
      out << ",";
      if (panel.treatment_start[i]) out << panel.time_ids[*panel.treatment_start[i]];
      if (!panel.unit_groups.empty()) out << "," << panel.unit_groups[i];
      for (int k = 0; k < panel.n_covariates(); ++k)
        out << "," << format_double(panel.covariates[k](i, t));
      out << "\n";
    }
  }
}

void write_table(const std::string& path, const std::string& digest,
                 const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_table: cannot open " + path);
  if (!digest.empty()) out << "# digest=" << digest << "\n";
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::invalid_argument("write_table: ragged row");
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rbci::io
