#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "rankfair/aggregate.hpp"
#include "rankfair/dataset.hpp"
#include "rankfair/metrics.hpp"
#include "rankfair/stats.hpp"

namespace rankfair {

// Everything one audit run needs to know besides the dataset itself.
struct AuditConfig {
  std::vector<int> cutoffs{3, 6, 12};
  std::vector<Measure> measures{Measure::Representation, Measure::Exposure};
  double alpha = 0.05;
  // Family size for the cut-off contrast correction; defaults to the number
  // of contrasts the run actually computes.
  std::optional<std::size_t> bonferroni_m;
  CutoffMode cutoff_mode = CutoffMode::CompactFirst;
  // Attach one-sample tests to major-level cells (majors often have small
  // samples, so this is opt-in).
  bool major_tests = false;

  bool operator==(const AuditConfig&) const = default;
};

inline void validate_config(const AuditConfig& config) {
  if (config.cutoffs.empty())
    throw std::invalid_argument("config: at least one cut-off is required");
  for (std::size_t i = 0; i < config.cutoffs.size(); ++i) {
    if (config.cutoffs[i] < 1)
      throw std::invalid_argument("config: cut-offs must be >= 1");
    if (i > 0 && config.cutoffs[i] <= config.cutoffs[i - 1])
      throw std::invalid_argument("config: cut-offs must be strictly increasing");
  }
  if (config.measures.empty())
    throw std::invalid_argument("config: at least one measure is required");
  for (std::size_t i = 0; i < config.measures.size(); ++i)
    for (std::size_t j = i + 1; j < config.measures.size(); ++j)
      if (config.measures[i] == config.measures[j])
        throw std::invalid_argument("config: duplicate measure");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw std::invalid_argument("config: alpha must lie strictly between 0 and 1");
  if (config.bonferroni_m && *config.bonferroni_m < 1)
    throw std::invalid_argument("config: bonferroni m must be >= 1");
}

// Scores every list at every configured (measure, cut-off). Row order is
// (query_id, measure in config order, cut-off ascending) and is deterministic.
inline std::vector<QueryScore> score_dataset(const Dataset& ds, const AuditConfig& config) {
  validate_config(config);
  std::vector<QueryScore> scores;
  scores.reserve(ds.lists.size() * config.measures.size() * config.cutoffs.size());
  for (const auto& list : ds.lists) {
    for (Measure measure : config.measures) {
      for (int cutoff : config.cutoffs) {
        const SharePair pair = score(list, measure, cutoff, config.cutoff_mode);
        QueryScore qs{list.query_id, list.field, list.major, measure, cutoff, std::nullopt};
        if (pair.defined()) qs.delta = pair.delta;
        scores.push_back(std::move(qs));
      }
    }
  }
  return scores;
}

enum class Aggregation { MeanBias, MeanAbsoluteBias };

constexpr std::string_view aggregation_token(Aggregation a) {
  return a == Aggregation::MeanBias ? "MB" : "MAB";
}

// A hypothesis test slot: either the result, or a note saying why the test
// could not run (too few observations, zero variance, no queries).
struct TestCell {
  std::optional<HypothesisTestResult> test;
  std::string note;

  bool operator==(const TestCell&) const = default;
};

namespace detail {

inline bool d_eq(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

constexpr double report_nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace detail

// One group's MB or MAB at one (measure, cut-off), with the one-sample test
// of "mean differs from 0".
struct GroupStat {
  std::string group;
  double value = detail::report_nan();
  std::size_t sample_size = 0;
  std::size_t excluded_undefined = 0;
  TestCell one_sample;

  bool operator==(const GroupStat& o) const {
    return group == o.group && detail::d_eq(value, o.value) &&
           sample_size == o.sample_size && excluded_undefined == o.excluded_undefined &&
           one_sample == o.one_sample;
  }
};

// STEM vs NON-STEM at one (measure, cut-off, aggregation), with the
// between-field Welch test and effect size.
struct FieldComparison {
  Measure measure = Measure::Representation;
  int cutoff = 0;
  Aggregation aggregation = Aggregation::MeanBias;
  GroupStat stem;
  GroupStat non_stem;
  TestCell between;

  bool operator==(const FieldComparison&) const = default;
};

// Paired comparison of one group's aggregate at two cut-offs.
struct CutoffContrast {
  Field field = Field::Stem;
  Measure measure = Measure::Representation;
  Aggregation aggregation = Aggregation::MeanBias;
  int cutoff_a = 0;
  int cutoff_b = 0;
  double value_a = detail::report_nan();  // group aggregate at cutoff_a
  double value_b = detail::report_nan();
  std::size_t pair_count = 0;             // queries defined at both cut-offs
  TestCell paired;
  double threshold = detail::report_nan();  // alpha / m in effect
  std::optional<bool> significant;           // decision under the correction

  bool operator==(const CutoffContrast& o) const {
    return field == o.field && measure == o.measure && aggregation == o.aggregation &&
           cutoff_a == o.cutoff_a && cutoff_b == o.cutoff_b &&
           detail::d_eq(value_a, o.value_a) && detail::d_eq(value_b, o.value_b) &&
           pair_count == o.pair_count && paired == o.paired &&
           detail::d_eq(threshold, o.threshold) && significant == o.significant;
  }
};

// Mean bias of one major at one (measure, cut-off).
struct MajorCell {
  std::string major;
  std::string field;  // field name, or "mixed" if the major spans both
  Measure measure = Measure::Representation;
  int cutoff = 0;
  double mb = detail::report_nan();
  std::size_t sample_size = 0;
  std::size_t excluded_undefined = 0;
  TestCell one_sample;  // only populated when AuditConfig::major_tests is set

  bool operator==(const MajorCell& o) const {
    return major == o.major && field == o.field && measure == o.measure &&
           cutoff == o.cutoff && detail::d_eq(mb, o.mb) && sample_size == o.sample_size &&
           excluded_undefined == o.excluded_undefined && one_sample == o.one_sample;
  }
};

struct ReportMeta {
  std::string source_path;
  std::size_t list_count = 0;
  std::size_t record_count = 0;
  AuditConfig config;
  std::size_t contrasts_run = 0;    // paired tests that produced a p-value
  std::size_t bonferroni_m = 0;     // family size used for the correction
  double bonferroni_threshold = detail::report_nan();
  std::size_t undefined_scores = 0;  // scores dropped for having no gendered items
  std::vector<std::string> warnings;

  bool operator==(const ReportMeta& o) const {
    return source_path == o.source_path && list_count == o.list_count &&
           record_count == o.record_count && config == o.config &&
           contrasts_run == o.contrasts_run && bonferroni_m == o.bonferroni_m &&
           detail::d_eq(bonferroni_threshold, o.bonferroni_threshold) &&
           undefined_scores == o.undefined_scores && warnings == o.warnings;
  }
};

struct AuditReport {
  ReportMeta meta;
  std::vector<FieldComparison> field_table;
  std::vector<CutoffContrast> cutoff_contrasts;
  std::vector<MajorCell> major_table;

  bool operator==(const AuditReport&) const = default;
};

namespace detail {

inline std::vector<double> values_for(const std::vector<double>& deltas, Aggregation agg) {
  if (agg == Aggregation::MeanBias) return deltas;
  std::vector<double> out;
  out.reserve(deltas.size());
  for (double d : deltas) out.push_back(std::fabs(d));
  return out;
}

inline TestCell one_sample_cell(const std::vector<double>& values, double alpha) {
  TestCell cell;
  try {
    cell.test = one_sample_t(values, alpha);
  } catch (const InsufficientSampleError&) {
    cell.note = "needs at least 2 defined scores";
  } catch (const DegenerateSampleError&) {
    cell.note = "zero variance";
  }
  return cell;
}

inline TestCell welch_cell(const std::vector<double>& xs, const std::vector<double>& ys,
                           double alpha) {
  TestCell cell;
  try {
    cell.test = welch_t(xs, ys, alpha);
  } catch (const InsufficientSampleError&) {
    cell.note = "needs at least 2 defined scores per field";
  } catch (const DegenerateSampleError&) {
    cell.note = "zero variance";
  }
  return cell;
}

inline TestCell paired_cell(const std::vector<double>& xs, const std::vector<double>& ys,
                            double alpha) {
  TestCell cell;
  try {
    cell.test = paired_t(xs, ys, alpha);
  } catch (const InsufficientSampleError&) {
    cell.note = "needs at least 2 paired scores";
  } catch (const DegenerateSampleError&) {
    cell.note = "zero variance in paired differences";
  }
  return cell;
}

}  // namespace detail

inline AuditReport build_report(const Dataset& ds, const AuditConfig& config) {
  validate_config(config);
  const auto scores = score_dataset(ds, config);

  AuditReport report;
  report.meta.source_path = ds.provenance.source_path;
  report.meta.list_count = ds.lists.size();
  report.meta.record_count = ds.record_count();
  report.meta.config = config;
  report.meta.warnings = validate(ds, config.cutoffs).warnings;

  struct CellData {
    std::vector<double> deltas;
    std::size_t undefined = 0;
  };
  // (field index, measure, cutoff) -> defined deltas
  std::map<std::tuple<int, int, int>, CellData> field_cells;
  // (major, measure, cutoff) -> defined deltas
  std::map<std::tuple<std::string, int, int>, CellData> major_cells;
  std::map<std::string, std::set<std::string>> major_fields;
  // (query, measure) -> cutoff -> delta, for paired contrasts
  std::map<std::pair<std::string, int>, std::map<int, double>> query_deltas;
  std::map<std::string, Field> query_field;

  for (const QueryScore& s : scores) {
    const auto mi = static_cast<int>(s.measure);
    CellData& fc = field_cells[{static_cast<int>(s.field), mi, s.cutoff}];
    CellData& mc = major_cells[{s.major, mi, s.cutoff}];
    major_fields[s.major].insert(std::string(field_name(s.field)));
    query_field[s.query_id] = s.field;
    if (s.delta) {
      fc.deltas.push_back(*s.delta);
      mc.deltas.push_back(*s.delta);
      query_deltas[{s.query_id, mi}][s.cutoff] = *s.delta;
    } else {
      ++fc.undefined;
      ++mc.undefined;
      ++report.meta.undefined_scores;
    }
  }

  const auto group_stat = [&](Field field, Measure measure, int cutoff,
                              Aggregation agg) {
    GroupStat gs;
    gs.group = field_name(field);
    const auto it = field_cells.find({static_cast<int>(field), static_cast<int>(measure), cutoff});
    if (it == field_cells.end()) {
      gs.one_sample.note = "no queries for this field";
      return gs;
    }
    const CellData& cell = it->second;
    gs.sample_size = cell.deltas.size();
    gs.excluded_undefined = cell.undefined;
    if (cell.deltas.empty()) {
      gs.one_sample.note = cell.undefined > 0 ? "all scores undefined" : "no queries for this field";
      return gs;
    }
    const auto values = detail::values_for(cell.deltas, agg);
    gs.value = mean_bias(values);  // plain mean of the (possibly absolute) deltas
    gs.one_sample = detail::one_sample_cell(values, config.alpha);
    return gs;
  };

  for (Measure measure : config.measures) {
    for (int cutoff : config.cutoffs) {
      for (Aggregation agg : {Aggregation::MeanBias, Aggregation::MeanAbsoluteBias}) {
        FieldComparison fc;
        fc.measure = measure;
        fc.cutoff = cutoff;
        fc.aggregation = agg;
        fc.stem = group_stat(Field::Stem, measure, cutoff, agg);
        fc.non_stem = group_stat(Field::NonStem, measure, cutoff, agg);
        const auto stem_it =
            field_cells.find({static_cast<int>(Field::Stem), static_cast<int>(measure), cutoff});
        const auto non_it =
            field_cells.find({static_cast<int>(Field::NonStem), static_cast<int>(measure), cutoff});
        const std::vector<double> empty;
        fc.between = detail::welch_cell(
            detail::values_for(stem_it == field_cells.end() ? empty : stem_it->second.deltas, agg),
            detail::values_for(non_it == field_cells.end() ? empty : non_it->second.deltas, agg),
            config.alpha);
        report.field_table.push_back(std::move(fc));
      }
    }
  }

  // Pairwise cut-off contrasts per field, kept in (aggregation, field,
  // measure, pair) order so each aggregation renders as one block.
  for (Aggregation agg : {Aggregation::MeanBias, Aggregation::MeanAbsoluteBias}) {
    for (Field field : {Field::Stem, Field::NonStem}) {
      for (Measure measure : config.measures) {
        for (std::size_t i = 0; i < config.cutoffs.size(); ++i) {
          for (std::size_t j = i + 1; j < config.cutoffs.size(); ++j) {
            CutoffContrast cc;
            cc.field = field;
            cc.measure = measure;
            cc.aggregation = agg;
            cc.cutoff_a = config.cutoffs[i];
            cc.cutoff_b = config.cutoffs[j];
            const auto cell_value = [&](int cutoff) {
              const auto it = field_cells.find(
                  {static_cast<int>(field), static_cast<int>(measure), cutoff});
              if (it == field_cells.end() || it->second.deltas.empty())
                return detail::report_nan();
              return mean_bias(detail::values_for(it->second.deltas, agg));
            };
            cc.value_a = cell_value(cc.cutoff_a);
            cc.value_b = cell_value(cc.cutoff_b);
            std::vector<double> xs, ys;
            for (const auto& [key, per_cutoff] : query_deltas) {
              if (static_cast<Measure>(key.second) != measure) continue;
              if (query_field[key.first] != field) continue;
              const auto a = per_cutoff.find(cc.cutoff_a);
              const auto b = per_cutoff.find(cc.cutoff_b);
              if (a == per_cutoff.end() || b == per_cutoff.end()) continue;
              if (agg == Aggregation::MeanBias) {
                xs.push_back(a->second);
                ys.push_back(b->second);
              } else {
                xs.push_back(std::fabs(a->second));
                ys.push_back(std::fabs(b->second));
              }
            }
            cc.pair_count = xs.size();
            cc.paired = detail::paired_cell(xs, ys, config.alpha);
            report.cutoff_contrasts.push_back(std::move(cc));
          }
        }
      }
    }
  }

  // Family-wise correction across every contrast that produced a p-value.
  std::vector<double> contrast_ps;
  for (const auto& cc : report.cutoff_contrasts)
    if (cc.paired.test) contrast_ps.push_back(cc.paired.test->p_value);
  report.meta.contrasts_run = contrast_ps.size();
  report.meta.bonferroni_m = config.bonferroni_m.value_or(contrast_ps.size());
  if (report.meta.bonferroni_m > 0) {
    report.meta.bonferroni_threshold =
        config.alpha / static_cast<double>(report.meta.bonferroni_m);
    for (auto& cc : report.cutoff_contrasts) {
      cc.threshold = report.meta.bonferroni_threshold;
      if (cc.paired.test)
        cc.significant = cc.paired.test->p_value <= report.meta.bonferroni_threshold;
    }
  }

  for (const auto& [key, cell] : major_cells) {
    MajorCell mc;
    mc.major = std::get<0>(key);
    const auto& fields = major_fields[mc.major];
    mc.field = fields.size() == 1 ? *fields.begin() : "mixed";
    mc.measure = static_cast<Measure>(std::get<1>(key));
    mc.cutoff = std::get<2>(key);
    mc.sample_size = cell.deltas.size();
    mc.excluded_undefined = cell.undefined;
    if (!cell.deltas.empty()) {
      mc.mb = mean_bias(cell.deltas);
      if (config.major_tests) mc.one_sample = detail::one_sample_cell(cell.deltas, config.alpha);
    } else if (config.major_tests) {
      mc.one_sample.note = "all scores undefined";
    }
    report.major_table.push_back(std::move(mc));
  }

  return report;
}

// ---------------------------------------------------------------------------
// Rendering. Human-readable tables round to 4 decimals; JSON keeps full
// precision so a rendered report parses back to an equal AuditReport.

namespace detail {

inline std::string fmt(double v, int digits = 4) {
  if (std::isnan(v)) return "n/a";
  if (v == 0.0) v = 0.0;  // never print -0
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string display_name(Measure m, int cutoff) {
  return std::string(m == Measure::Representation ? "Rep@" : "Exp@") + std::to_string(cutoff);
}

inline std::string group_cell(const GroupStat& gs) {
  if (std::isnan(gs.value)) return "n/a (" + gs.one_sample.note + ")";
  std::string out = fmt(gs.value);
  if (gs.one_sample.test)
    out += gs.one_sample.test->significance;
  else if (!gs.one_sample.note.empty())
    out += " (" + gs.one_sample.note + ")";
  return out;
}

inline std::string test_kind_label(TestKind kind) {
  switch (kind) {
    case TestKind::OneSample: return "one-sample t";
    case TestKind::WelchIndependent: return "Welch t";
    case TestKind::Paired: return "paired t";
  }
  return "";
}

inline std::string p_cell(const TestCell& cell) {
  if (!cell.test) return "n/a (" + cell.note + ")";
  char df[32];
  std::snprintf(df, sizeof(df), "%.2f", cell.test->df);
  return fmt(cell.test->p_value) + " (" + test_kind_label(cell.test->kind) + ", df=" + df + ")";
}

inline std::string d_cell(const TestCell& cell) {
  if (!cell.test || !cell.test->effect_size_d) return "n/a";
  return fmt(*cell.test->effect_size_d);
}

inline std::string join_tokens(const std::vector<std::string>& tokens, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

}  // namespace detail

// Which report sections a markdown render includes; the metadata header is
// always present. The full report renders everything; the aggregate and
// cut-off CLI views slice it.
struct MarkdownSections {
  bool field_table = true;
  bool contrasts = true;
  bool majors = true;
};

inline std::string render_markdown(const AuditReport& report,
                                   MarkdownSections sections = {}) {
  const ReportMeta& meta = report.meta;
  std::ostringstream out;
  out << "# Ranked-list gender bias audit\n\n";
  out << "- source: `" << meta.source_path << "`\n";
  out << "- lists: " << meta.list_count << " (" << meta.record_count << " records)\n";
  {
    std::vector<std::string> ms, cs;
    for (Measure m : meta.config.measures) ms.emplace_back(measure_token(m));
    for (int c : meta.config.cutoffs) cs.push_back(std::to_string(c));
    out << "- measures: " << detail::join_tokens(ms, ", ") << "\n";
    out << "- cut-offs: " << detail::join_tokens(cs, ", ") << "\n";
  }
  out << "- cut-off mode: " << cutoff_mode_token(meta.config.cutoff_mode) << "\n";
  out << "- alpha: " << detail::fmt(meta.config.alpha, 2) << "\n";
  out << "- undefined scores excluded: " << meta.undefined_scores << "\n";
  out << "- cut-off contrasts run: " << meta.contrasts_run << "\n";
  out << "- Bonferroni family size m: " << meta.bonferroni_m << " (threshold "
      << detail::fmt(meta.bonferroni_threshold, 6) << ")\n";
  for (const auto& w : meta.warnings) out << "- warning: " << w << "\n";

  std::vector<std::pair<Measure, int>> columns;
  for (Measure m : meta.config.measures)
    for (int c : meta.config.cutoffs) columns.emplace_back(m, c);

  if (sections.field_table) {
  out << "\n## Field bias\n\n";
  out << "Positive values lean male, negative lean female. Stars mark two-sided\n"
         "one-sample significance: \\*\\*\\* p<0.001, \\*\\* p<0.01, \\* p<0.05.\n\n";
  const auto find_fc = [&](Measure m, int c, Aggregation a) -> const FieldComparison& {
    for (const auto& fc : report.field_table)
      if (fc.measure == m && fc.cutoff == c && fc.aggregation == a) return fc;
    throw std::logic_error("field table cell missing");
  };
  out << "| |";
  for (const auto& [m, c] : columns) out << " " << detail::display_name(m, c) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) out << "---|";
  out << "\n";
  for (Aggregation agg : {Aggregation::MeanBias, Aggregation::MeanAbsoluteBias}) {
    const auto tag = std::string(aggregation_token(agg));
    out << "| " << tag << " STEM |";
    for (const auto& [m, c] : columns)
      out << " " << detail::group_cell(find_fc(m, c, agg).stem) << " |";
    out << "\n| " << tag << " NON-STEM |";
    for (const auto& [m, c] : columns)
      out << " " << detail::group_cell(find_fc(m, c, agg).non_stem) << " |";
    out << "\n| " << tag << " between-field p |";
    for (const auto& [m, c] : columns)
      out << " " << detail::p_cell(find_fc(m, c, agg).between) << " |";
    out << "\n| " << tag << " effect size (d) |";
    for (const auto& [m, c] : columns)
      out << " " << detail::d_cell(find_fc(m, c, agg).between) << " |";
    out << "\n";
  }
  }

  if (sections.contrasts)
  for (Aggregation agg : {Aggregation::MeanBias, Aggregation::MeanAbsoluteBias}) {
    out << "\n## Cut-off contrasts (" << aggregation_token(agg) << ")\n\n";
    out << "Paired two-sided t per field; 'significant' applies the Bonferroni\n"
           "threshold shown above.\n\n";
    out << "| field | measure | a | b | value@a | value@b | t | df | p | significant |\n";
    out << "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& cc : report.cutoff_contrasts) {
      if (cc.aggregation != agg) continue;
      out << "| " << field_name(cc.field) << " | " << measure_token(cc.measure) << " | "
          << cc.cutoff_a << " | " << cc.cutoff_b << " | " << detail::fmt(cc.value_a) << " | "
          << detail::fmt(cc.value_b) << " | ";
      if (cc.paired.test) {
        char df[32];
        std::snprintf(df, sizeof(df), "%.2f", cc.paired.test->df);
        out << detail::fmt(cc.paired.test->t_stat) << " | " << df << " | "
            << detail::fmt(cc.paired.test->p_value) << " | "
            << (cc.significant.value_or(false) ? "yes" : "no") << " |\n";
      } else {
        out << "n/a | n/a | n/a (" << cc.paired.note << ") | n/a |\n";
      }
    }
  }

  if (!sections.majors) return out.str();
  out << "\n## Major-level mean bias\n\n";
  out << "| major | field | queries |";
  for (const auto& [m, c] : columns) out << " " << detail::display_name(m, c) << " |";
  out << "\n|---|---|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) out << "---|";
  out << "\n";
  std::vector<std::string> majors;
  for (const auto& mc : report.major_table)
    if (majors.empty() || majors.back() != mc.major) majors.push_back(mc.major);
  const auto find_mc = [&](const std::string& major, Measure m, int c) -> const MajorCell& {
    for (const auto& mc : report.major_table)
      if (mc.major == major && mc.measure == m && mc.cutoff == c) return mc;
    throw std::logic_error("major table cell missing");
  };
  for (const auto& major : majors) {
    const MajorCell& first = find_mc(major, columns.front().first, columns.front().second);
    out << "| " << major << " | " << first.field << " | "
        << first.sample_size + first.excluded_undefined << " |";
    for (const auto& [m, c] : columns) {
      const MajorCell& mc = find_mc(major, m, c);
      std::string cell = detail::fmt(mc.mb);
      if (mc.one_sample.test) cell += mc.one_sample.test->significance;
      out << " " << cell << " |";
    }
    out << "\n";
  }
  return out.str();
}

inline std::string render_csv(const AuditReport& report) {
  const ReportMeta& meta = report.meta;
  std::ostringstream out;
  out << "# source: " << meta.source_path << "\n";
  out << "# lists: " << meta.list_count << "\n";
  out << "# records: " << meta.record_count << "\n";
  {
    std::vector<std::string> ms, cs;
    for (Measure m : meta.config.measures) ms.emplace_back(measure_token(m));
    for (int c : meta.config.cutoffs) cs.push_back(std::to_string(c));
    out << "# measures: " << detail::join_tokens(ms, ",") << "\n";
    out << "# cutoffs: " << detail::join_tokens(cs, ",") << "\n";
  }
  out << "# cutoff_mode: " << cutoff_mode_token(meta.config.cutoff_mode) << "\n";
  out << "# alpha: " << detail::fmt(meta.config.alpha, 4) << "\n";
  out << "# undefined_scores: " << meta.undefined_scores << "\n";
  out << "# contrasts_run: " << meta.contrasts_run << "\n";
  out << "# bonferroni_m: " << meta.bonferroni_m << "\n";
  out << "# bonferroni_threshold: " << detail::fmt(meta.bonferroni_threshold, 6) << "\n";
  for (const auto& w : meta.warnings) out << "# warning: " << w << "\n";

  const std::vector<std::string> header{
      "section", "group",      "field",      "aggregation", "measure",
      "cutoff",  "cutoff_b",   "value",      "value_b",     "sample_size",
      "pair_count", "excluded_undefined", "test_kind", "t_stat", "df",
      "p_value", "effect_size_d", "stars", "threshold", "significant", "note"};
  out << csv::join(header);

  const auto test_fields = [](const TestCell& cell) {
    // test_kind, t, df, p, d, stars, note
    std::array<std::string, 7> f{"", "", "", "", "", "", cell.note};
    if (cell.test) {
      f[0] = test_kind_token(cell.test->kind);
      f[1] = detail::fmt(cell.test->t_stat);
      f[2] = detail::fmt(cell.test->df);
      f[3] = detail::fmt(cell.test->p_value);
      if (cell.test->effect_size_d) f[4] = detail::fmt(*cell.test->effect_size_d);
      f[5] = cell.test->significance;
    }
    return f;
  };
  const auto num = [](double v) { return std::isnan(v) ? std::string() : detail::fmt(v); };

  for (const auto& fc : report.field_table) {
    const auto agg = std::string(aggregation_token(fc.aggregation));
    const auto measure = std::string(measure_token(fc.measure));
    for (const GroupStat* gs : {&fc.stem, &fc.non_stem}) {
      const auto t = test_fields(gs->one_sample);
      out << csv::join({"field", gs->group, gs->group, agg, measure,
                        std::to_string(fc.cutoff), "", num(gs->value), "",
                        std::to_string(gs->sample_size), "",
                        std::to_string(gs->excluded_undefined), t[0], t[1], t[2], t[3],
                        t[4], t[5], "", "", t[6]});
    }
    const auto t = test_fields(fc.between);
    out << csv::join({"field", "between", "", agg, measure, std::to_string(fc.cutoff), "",
                      "", "", "", "", "", t[0], t[1], t[2], t[3], t[4], t[5], "", "", t[6]});
  }
  for (const auto& cc : report.cutoff_contrasts) {
    const auto t = test_fields(cc.paired);
    std::string significant;
    if (cc.significant) significant = *cc.significant ? "yes" : "no";
    out << csv::join({"cutoff_contrast", "", std::string(field_name(cc.field)),
                      std::string(aggregation_token(cc.aggregation)),
                      std::string(measure_token(cc.measure)), std::to_string(cc.cutoff_a),
                      std::to_string(cc.cutoff_b), num(cc.value_a), num(cc.value_b), "",
                      std::to_string(cc.pair_count), "", t[0], t[1], t[2], t[3], t[4], t[5],
                      num(cc.threshold), significant, t[6]});
  }
  for (const auto& mc : report.major_table) {
    const auto t = test_fields(mc.one_sample);
    out << csv::join({"major", mc.major, mc.field, "MB",
                      std::string(measure_token(mc.measure)), std::to_string(mc.cutoff), "",
                      num(mc.mb), "", std::to_string(mc.sample_size), "",
                      std::to_string(mc.excluded_undefined), t[0], t[1], t[2], t[3], t[4],
                      t[5], "", "", t[6]});
  }
  return out.str();
}

namespace detail {

inline nlohmann::ordered_json json_num(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

inline double num_json(const nlohmann::json& j) {
  if (j.is_null()) return report_nan();
  return j.get<double>();
}

inline nlohmann::ordered_json test_cell_json(const TestCell& cell) {
  nlohmann::ordered_json j;
  if (cell.test) {
    const auto& t = *cell.test;
    j["test"] = {{"kind", std::string(test_kind_token(t.kind))},
                 {"t_stat", t.t_stat},
                 {"df", t.df},
                 {"p_value", t.p_value},
                 {"effect_size_d", t.effect_size_d ? nlohmann::ordered_json(*t.effect_size_d)
                                                   : nlohmann::ordered_json(nullptr)},
                 {"alpha_used", t.alpha_used},
                 {"rejected", t.rejected},
                 {"significance", t.significance}};
  } else {
    j["test"] = nullptr;
  }
  j["note"] = cell.note;
  return j;
}

inline TestCell test_cell_from_json(const nlohmann::json& j) {
  TestCell cell;
  cell.note = j.at("note").get<std::string>();
  if (!j.at("test").is_null()) {
    const auto& t = j.at("test");
    HypothesisTestResult r;
    const std::string kind = t.at("kind").get<std::string>();
    if (kind == "one_sample") r.kind = TestKind::OneSample;
    else if (kind == "welch") r.kind = TestKind::WelchIndependent;
    else if (kind == "paired") r.kind = TestKind::Paired;
    else throw ValidationError("report JSON: unknown test kind '" + kind + "'");
    r.t_stat = t.at("t_stat").get<double>();
    r.df = t.at("df").get<double>();
    r.p_value = t.at("p_value").get<double>();
    if (!t.at("effect_size_d").is_null()) r.effect_size_d = t.at("effect_size_d").get<double>();
    r.alpha_used = t.at("alpha_used").get<double>();
    r.rejected = t.at("rejected").get<bool>();
    r.significance = t.at("significance").get<std::string>();
    cell.test = std::move(r);
  }
  return cell;
}

inline nlohmann::ordered_json group_stat_json(const GroupStat& gs) {
  nlohmann::ordered_json j;
  j["group"] = gs.group;
  j["value"] = json_num(gs.value);
  j["sample_size"] = gs.sample_size;
  j["excluded_undefined"] = gs.excluded_undefined;
  j["one_sample"] = test_cell_json(gs.one_sample);
  return j;
}

inline GroupStat group_stat_from_json(const nlohmann::json& j) {
  GroupStat gs;
  gs.group = j.at("group").get<std::string>();
  gs.value = num_json(j.at("value"));
  gs.sample_size = j.at("sample_size").get<std::size_t>();
  gs.excluded_undefined = j.at("excluded_undefined").get<std::size_t>();
  gs.one_sample = test_cell_from_json(j.at("one_sample"));
  return gs;
}

inline Measure measure_from_token(const std::string& token) {
  if (token == "rep") return Measure::Representation;
  if (token == "exp") return Measure::Exposure;
  throw ValidationError("report JSON: unknown measure '" + token + "'");
}

inline Aggregation aggregation_from_token(const std::string& token) {
  if (token == "MB") return Aggregation::MeanBias;
  if (token == "MAB") return Aggregation::MeanAbsoluteBias;
  throw ValidationError("report JSON: unknown aggregation '" + token + "'");
}

inline Field field_from_name(const std::string& name) {
  const auto f = parse_field(name);
  if (!f) throw ValidationError("report JSON: unknown field '" + name + "'");
  return *f;
}

inline CutoffMode cutoff_mode_from_token(const std::string& token) {
  if (token == "compact-first") return CutoffMode::CompactFirst;
  if (token == "window-first") return CutoffMode::WindowFirst;
  throw ValidationError("report JSON: unknown cutoff mode '" + token + "'");
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const AuditReport& report) {
  const ReportMeta& meta = report.meta;
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  nlohmann::ordered_json config;
  config["cutoffs"] = meta.config.cutoffs;
  {
    std::vector<std::string> ms;
    for (Measure m : meta.config.measures) ms.emplace_back(measure_token(m));
    config["measures"] = ms;
  }
  config["alpha"] = meta.config.alpha;
  config["bonferroni_m"] = meta.config.bonferroni_m
                               ? nlohmann::ordered_json(*meta.config.bonferroni_m)
                               : nlohmann::ordered_json(nullptr);
  config["cutoff_mode"] = cutoff_mode_token(meta.config.cutoff_mode);
  config["major_tests"] = meta.config.major_tests;
  j["meta"] = {{"source_path", meta.source_path},
               {"list_count", meta.list_count},
               {"record_count", meta.record_count},
               {"config", std::move(config)},
               {"contrasts_run", meta.contrasts_run},
               {"bonferroni_m", meta.bonferroni_m},
               {"bonferroni_threshold", detail::json_num(meta.bonferroni_threshold)},
               {"undefined_scores", meta.undefined_scores},
               {"warnings", meta.warnings}};
  auto field_table = nlohmann::ordered_json::array();
  for (const auto& fc : report.field_table) {
    nlohmann::ordered_json row;
    row["measure"] = measure_token(fc.measure);
    row["cutoff"] = fc.cutoff;
    row["aggregation"] = aggregation_token(fc.aggregation);
    row["stem"] = detail::group_stat_json(fc.stem);
    row["non_stem"] = detail::group_stat_json(fc.non_stem);
    row["between"] = detail::test_cell_json(fc.between);
    field_table.push_back(std::move(row));
  }
  j["field_table"] = std::move(field_table);
  auto contrasts = nlohmann::ordered_json::array();
  for (const auto& cc : report.cutoff_contrasts) {
    nlohmann::ordered_json row;
    row["field"] = field_name(cc.field);
    row["measure"] = measure_token(cc.measure);
    row["aggregation"] = aggregation_token(cc.aggregation);
    row["cutoff_a"] = cc.cutoff_a;
    row["cutoff_b"] = cc.cutoff_b;
    row["value_a"] = detail::json_num(cc.value_a);
    row["value_b"] = detail::json_num(cc.value_b);
    row["pair_count"] = cc.pair_count;
    row["paired"] = detail::test_cell_json(cc.paired);
    row["threshold"] = detail::json_num(cc.threshold);
    row["significant"] = cc.significant ? nlohmann::ordered_json(*cc.significant)
                                        : nlohmann::ordered_json(nullptr);
    contrasts.push_back(std::move(row));
  }
  j["cutoff_contrasts"] = std::move(contrasts);
  auto majors = nlohmann::ordered_json::array();
  for (const auto& mc : report.major_table) {
    nlohmann::ordered_json row;
    row["major"] = mc.major;
    row["field"] = mc.field;
    row["measure"] = measure_token(mc.measure);
    row["cutoff"] = mc.cutoff;
    row["mb"] = detail::json_num(mc.mb);
    row["sample_size"] = mc.sample_size;
    row["excluded_undefined"] = mc.excluded_undefined;
    row["one_sample"] = detail::test_cell_json(mc.one_sample);
    majors.push_back(std::move(row));
  }
  j["major_table"] = std::move(majors);
  return j;
}

inline std::string render_json(const AuditReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

inline AuditReport report_from_json(const nlohmann::json& j) {
  AuditReport report;
  try {
    if (j.at("schema_version").get<int>() != 1)
      throw ValidationError("report JSON: unsupported schema version");
    const auto& meta = j.at("meta");
    report.meta.source_path = meta.at("source_path").get<std::string>();
    report.meta.list_count = meta.at("list_count").get<std::size_t>();
    report.meta.record_count = meta.at("record_count").get<std::size_t>();
    const auto& config = meta.at("config");
    report.meta.config.cutoffs = config.at("cutoffs").get<std::vector<int>>();
    report.meta.config.measures.clear();
    for (const auto& token : config.at("measures"))
      report.meta.config.measures.push_back(detail::measure_from_token(token.get<std::string>()));
    report.meta.config.alpha = config.at("alpha").get<double>();
    if (!config.at("bonferroni_m").is_null())
      report.meta.config.bonferroni_m = config.at("bonferroni_m").get<std::size_t>();
    report.meta.config.cutoff_mode =
        detail::cutoff_mode_from_token(config.at("cutoff_mode").get<std::string>());
    report.meta.config.major_tests = config.at("major_tests").get<bool>();
    report.meta.contrasts_run = meta.at("contrasts_run").get<std::size_t>();
    report.meta.bonferroni_m = meta.at("bonferroni_m").get<std::size_t>();
    report.meta.bonferroni_threshold = detail::num_json(meta.at("bonferroni_threshold"));
    report.meta.undefined_scores = meta.at("undefined_scores").get<std::size_t>();
    report.meta.warnings = meta.at("warnings").get<std::vector<std::string>>();
    for (const auto& row : j.at("field_table")) {
      FieldComparison fc;
      fc.measure = detail::measure_from_token(row.at("measure").get<std::string>());
      fc.cutoff = row.at("cutoff").get<int>();
      fc.aggregation = detail::aggregation_from_token(row.at("aggregation").get<std::string>());
      fc.stem = detail::group_stat_from_json(row.at("stem"));
      fc.non_stem = detail::group_stat_from_json(row.at("non_stem"));
      fc.between = detail::test_cell_from_json(row.at("between"));
      report.field_table.push_back(std::move(fc));
    }
    for (const auto& row : j.at("cutoff_contrasts")) {
      CutoffContrast cc;
      cc.field = detail::field_from_name(row.at("field").get<std::string>());
      cc.measure = detail::measure_from_token(row.at("measure").get<std::string>());
      cc.aggregation = detail::aggregation_from_token(row.at("aggregation").get<std::string>());
      cc.cutoff_a = row.at("cutoff_a").get<int>();
      cc.cutoff_b = row.at("cutoff_b").get<int>();
      cc.value_a = detail::num_json(row.at("value_a"));
      cc.value_b = detail::num_json(row.at("value_b"));
      cc.pair_count = row.at("pair_count").get<std::size_t>();
      cc.paired = detail::test_cell_from_json(row.at("paired"));
      cc.threshold = detail::num_json(row.at("threshold"));
      if (!row.at("significant").is_null()) cc.significant = row.at("significant").get<bool>();
      report.cutoff_contrasts.push_back(std::move(cc));
    }
    for (const auto& row : j.at("major_table")) {
      MajorCell mc;
      mc.major = row.at("major").get<std::string>();
      mc.field = row.at("field").get<std::string>();
      mc.measure = detail::measure_from_token(row.at("measure").get<std::string>());
      mc.cutoff = row.at("cutoff").get<int>();
      mc.mb = detail::num_json(row.at("mb"));
      mc.sample_size = row.at("sample_size").get<std::size_t>();
      mc.excluded_undefined = row.at("excluded_undefined").get<std::size_t>();
      mc.one_sample = detail::test_cell_from_json(row.at("one_sample"));
      report.major_table.push_back(std::move(mc));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("report JSON: ") + e.what());
  }
  return report;
}

inline AuditReport parse_report_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("report JSON: ") + e.what());
  }
  return report_from_json(j);
}

}  // namespace rankfair
