// SPDX-License-Identifier: Apache-2.0
#pragma once

// Append-only run metrics written as CSV. Every row carries every column;
// columns that do not apply to a row type are left empty.

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pompc/config.hpp"

namespace pompc {

inline const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols = {
      "row_type", "step", "update", "episode",
      // episode rows
      "return", "length",
      // update rows
      "wm_loss", "consistency_loss", "reward_loss", "q_loss", "prior_loss", "klreg_q_loss", "policy_loss",
      "policy_kl_term", "policy_q_term", "policy_entropy_term", "kl_mean", "q_mean", "S_KL", "S_Q", "S_p",
      "grad_norm_model", "grad_norm_prior", "grad_norm_klreg_q", "grad_norm_policy", "reanalyze_writes",
      "reanalyze_failures", "elite_score_mean", "plan_std_mean"};
  return cols;
}

struct MetricRow {
  std::string row_type;  // "update" or "episode"
  long step = 0;
  long update = 0;
  long episode = 0;
  std::map<std::string, double> values;
};

inline std::string format_metric_row(const MetricRow& row) {
  std::string out = row.row_type + "," + std::to_string(row.step) + "," + std::to_string(row.update) + "," +
                    std::to_string(row.episode);
  const auto& cols = metric_columns();
  for (std::size_t i = 4; i < cols.size(); ++i) {
    out += ",";
    const auto it = row.values.find(cols[i]);
    if (it != row.values.end()) out += format_double(it->second);
  }
  return out;
}

inline std::string metric_header() {
  std::string h;
  for (const auto& c : metric_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

/// Rows are buffered and flushed at episode boundaries (or on request).
class MetricsWriter {
 public:
  MetricsWriter() = default;

  /// Opens `path`; truncate starts a fresh file with a header, otherwise
  /// rows are appended (checkpoint continuation).
  void open(const std::string& path, bool truncate) {
    path_ = path;
    if (path_.empty()) return;
    std::ofstream os(path_, truncate ? std::ios::trunc : std::ios::app);
    if (!os) throw std::runtime_error("cannot open metrics file '" + path_ + "'");
    if (truncate) os << metric_header() << "\n";
  }

  void add(const MetricRow& row) {
    if (!path_.empty()) pending_.push_back(format_metric_row(row));
    rows_.push_back(row);
  }

  void flush() {
    if (path_.empty() || pending_.empty()) return;
    std::ofstream os(path_, std::ios::app);
    if (!os) throw std::runtime_error("cannot append to metrics file '" + path_ + "'");
    for (const auto& l : pending_) os << l << "\n";
    pending_.clear();
  }

  /// All rows produced by this process, also kept in memory.
  const std::vector<MetricRow>& rows() const { return rows_; }

 private:
  std::string path_;
  std::vector<std::string> pending_;
  std::vector<MetricRow> rows_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw std::runtime_error("metrics: no column '" + name + "'");
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file '" + path + "'");
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) throw std::runtime_error("metrics file '" + path + "' is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    cells.resize(t.header.size());
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace pompc
