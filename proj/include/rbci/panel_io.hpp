// Long-format delimited panel ingestion and table emission.
//
// Panel files are UTF-8 CSV with a header row. Reserved columns: unit, time,
// outcome, treated_start, group; any further column is a covariate. An empty
// outcome field marks a missing cell; treated_start holds the first treated
// time label (empty = never treated). Lines starting with '#' are skipped.

#pragma once

#include <string>
#include <vector>

#include "rbci/panel.hpp"

namespace rbci::io {

struct PanelFile {
  PanelData panel;
  std::vector<std::string> covariate_names;
};

PanelFile read_panel(const std::string& path);

void write_panel(const std::string& path, const PanelData& panel,
                 const std::vector<std::string>& covariate_names, const std::string& digest);

/// Doubles rendered with round-trip precision ("%.17g"); used everywhere a
/// number is written so reruns are byte-identical.
std::string format_double(double v);

/// Writes "# digest=..." then a header row then data rows.
void write_table(const std::string& path, const std::string& digest,
                 const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

std::string read_file(const std::string& path);

}  // namespace rbci::io
