#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "rankfair/metrics.hpp"

namespace rankfair {

// One list's signed bias at one (measure, cut-off). delta is empty when the
// evaluated window held no gendered items.
struct QueryScore {
  std::string query_id;
  Field field = Field::Stem;
  std::string major;
  Measure measure = Measure::Representation;
  int cutoff = 0;
  std::optional<double> delta;
};

enum class GroupBy { Field, Major };

// Mean signed bias: direction and magnitude, cancels across opposing lists.
inline double mean_bias(std::span<const double> deltas) {
  if (deltas.empty())
    throw std::invalid_argument("mean_bias: no defined deltas");
  double sum = 0.0;
  for (double d : deltas) sum += d;
  return sum / static_cast<double>(deltas.size());
}

// Mean absolute bias: magnitude regardless of direction, never cancels.
inline double mean_absolute_bias(std::span<const double> deltas) {
  if (deltas.empty())
    throw std::invalid_argument("mean_absolute_bias: no defined deltas");
  double sum = 0.0;
  for (double d : deltas) sum += std::fabs(d);
  return sum / static_cast<double>(deltas.size());
}

// MB/MAB of one group at one (measure, cut-off). sample_size counts the
// defined deltas that entered the means; excluded_undefined counts scores
// that were dropped because their window held no gendered items. A group
// whose every score was undefined is kept with empty() == true rather than
// silently vanishing from the output.
struct AggregateSummary {
  std::string group_key;
  Measure measure = Measure::Representation;
  int cutoff = 0;
  double mb = std::numeric_limits<double>::quiet_NaN();
  double mab = std::numeric_limits<double>::quiet_NaN();
  std::size_t sample_size = 0;
  std::size_t excluded_undefined = 0;

  bool empty() const { return sample_size == 0; }
};

// Groups scores by field or major and summarizes each (group, measure,
// cut-off) cell. Output is sorted by (group key, measure, cut-off).
inline std::vector<AggregateSummary> aggregate(std::span<const QueryScore> scores,
                                               GroupBy group_by) {
  struct Cell {
    std::vector<double> deltas;
    std::size_t undefined = 0;
  };
  std::map<std::tuple<std::string, int, int>, Cell> cells;
  for (const QueryScore& s : scores) {
    std::string key = group_by == GroupBy::Field ? std::string(field_name(s.field)) : s.major;
    Cell& cell = cells[{std::move(key), static_cast<int>(s.measure), s.cutoff}];
    if (s.delta.has_value())
      cell.deltas.push_back(*s.delta);
    else
      ++cell.undefined;
  }
  std::vector<AggregateSummary> out;
  out.reserve(cells.size());
  for (const auto& [key, cell] : cells) {
    AggregateSummary summary;
    summary.group_key = std::get<0>(key);
    summary.measure = static_cast<Measure>(std::get<1>(key));
    summary.cutoff = std::get<2>(key);
    summary.sample_size = cell.deltas.size();
    summary.excluded_undefined = cell.undefined;
    if (!cell.deltas.empty()) {
      summary.mb = mean_bias(cell.deltas);
      summary.mab = mean_absolute_bias(cell.deltas);
    }
    out.push_back(std::move(summary));
  }
  return out;
}

}  // namespace rankfair
