// Command-line front end for the ranked-list gender bias audit library.
//
// Exit codes: 0 success, 1 usage error, 2 dataset validation failure,
// 3 statistical degeneracy, 4 I/O failure.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rankfair/aggregate.hpp"
#include "rankfair/dataset.hpp"
#include "rankfair/metrics.hpp"
#include "rankfair/report.hpp"
#include "rankfair/stats.hpp"
#include "rankfair/synth.hpp"

namespace {

using namespace rankfair;

struct ConfigOpts {
  std::vector<int> cutoffs{3, 6, 12};
  std::vector<std::string> measures{"rep", "exp"};
  std::string cutoff_mode = "compact-first";
  double alpha = 0.05;
  std::optional<std::size_t> bonferroni_m;
  bool major_tests = false;
};

void add_config_options(CLI::App* sub, ConfigOpts& opts, bool with_alpha) {
  sub->add_option("--cutoffs", opts.cutoffs, "Comma-separated cut-offs (default 3,6,12)")
      ->delimiter(',');
  sub->add_option("--measures", opts.measures, "Comma-separated measures: rep,exp")
      ->delimiter(',')
      ->check(CLI::IsMember({"rep", "exp"}));
  sub->add_option("--cutoff-mode", opts.cutoff_mode,
                  "How cut-offs interact with non-gendered items")
      ->check(CLI::IsMember({"compact-first", "window-first"}));
  if (with_alpha)
    sub->add_option("--alpha", opts.alpha, "Significance level (default 0.05)");
}

AuditConfig to_config(const ConfigOpts& opts) {
  AuditConfig config;
  config.cutoffs = opts.cutoffs;
  config.measures.clear();
  for (const auto& m : opts.measures)
    config.measures.push_back(m == "rep" ? Measure::Representation : Measure::Exposure);
  config.cutoff_mode = opts.cutoff_mode == "compact-first" ? CutoffMode::CompactFirst
                                                           : CutoffMode::WindowFirst;
  config.alpha = opts.alpha;
  config.bonferroni_m = opts.bonferroni_m;
  config.major_tests = opts.major_tests;
  validate_config(config);
  return config;
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + out_path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing to '" + out_path + "'");
}

void warn_clamps(const Dataset& ds, const AuditConfig& config) {
  for (const auto& w : validate(ds, config.cutoffs).warnings)
    std::cerr << "warning: " << w << "\n";
}

void run_validate(const std::string& path) {
  const Dataset ds = parse_dataset_file(path);
  const AuditConfig defaults;
  std::cout << render_text(validate(ds, defaults.cutoffs));
}

std::string fmt6(double v) {
  if (v == 0.0) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void run_score(const std::string& path, const ConfigOpts& opts, const std::string& out_path) {
  const AuditConfig config = to_config(opts);
  const Dataset ds = parse_dataset_file(path);
  warn_clamps(ds, config);
  std::string out = csv::join({"query_id", "field", "major", "measure", "cutoff", "mf_count",
                               "male_share", "female_share", "delta", "male_relative",
                               "female_relative", "defined"});
  for (const auto& list : ds.lists) {
    for (Measure measure : config.measures) {
      for (int cutoff : config.cutoffs) {
        const SharePair pair = score(list, measure, cutoff, config.cutoff_mode);
        std::vector<std::string> row{list.query_id, std::string(field_name(list.field)),
                                     list.major,    std::string(measure_token(measure)),
                                     std::to_string(cutoff), std::to_string(pair.mf_count)};
        if (pair.defined()) {
          row.push_back(fmt6(pair.male_share));
          row.push_back(fmt6(pair.female_share));
          row.push_back(fmt6(pair.delta));
          row.push_back(fmt6(relative_share(pair.male_share)));
          row.push_back(fmt6(relative_share(pair.female_share)));
          row.push_back("true");
        } else {
          row.insert(row.end(), {"", "", "", "", "", "false"});
        }
        out += csv::join(row);
      }
    }
  }
  write_output(out, out_path);
}

void run_aggregate(const std::string& path, const ConfigOpts& opts, const std::string& out_path) {
  const AuditConfig config = to_config(opts);
  const Dataset ds = parse_dataset_file(path);
  const AuditReport report = build_report(ds, config);
  write_output(render_markdown(report, {.field_table = true, .contrasts = false, .majors = true}),
               out_path);
}

void run_cutoffs(const std::string& path, const ConfigOpts& opts, const std::string& out_path) {
  if (opts.cutoffs.size() < 2)
    throw std::invalid_argument("cutoffs: needs at least two cut-offs to contrast");
  const AuditConfig config = to_config(opts);
  const Dataset ds = parse_dataset_file(path);
  const AuditReport report = build_report(ds, config);
  write_output(render_markdown(report, {.field_table = false, .contrasts = true, .majors = false}),
               out_path);
}

void run_report(const std::string& path, const ConfigOpts& opts, const std::string& format,
                const std::string& out_path) {
  const AuditConfig config = to_config(opts);
  const Dataset ds = parse_dataset_file(path);
  const AuditReport report = build_report(ds, config);
  std::string text;
  if (format == "md")
    text = render_markdown(report);
  else if (format == "csv")
    text = render_csv(report);
  else
    text = render_json(report);
  write_output(text, out_path);
}

void run_synth(std::size_t queries, std::size_t length, double pmale, double pfemale,
               double boost, std::uint64_t seed, const std::string& out_path) {
  const double leftover = 1.0 - pmale - pfemale;
  if (leftover < -1e-9)
    throw std::invalid_argument("synth: --pmale and --pfemale must sum to at most 1");
  const double rest = std::max(leftover, 0.0) / 3.0;
  SynthSpec spec;
  spec.num_queries = queries;
  spec.list_length = length;
  spec.label_probabilities = {pmale, pfemale, rest, rest, rest};
  spec.top_heavy_male_boost = boost;
  spec.seed = seed;
  const Dataset ds = synth_generate(spec);
  const DataFormat format = infer_format(out_path).value_or(DataFormat::Csv);
  write_output(render_dataset(ds, format), out_path);
}

void run_agreement(const std::string& path_a, const std::string& path_b) {
  const Dataset a = parse_dataset_file(path_a);
  const Dataset b = parse_dataset_file(path_b);
  if (a.lists.size() != b.lists.size())
    throw ValidationError("datasets do not align: " + std::to_string(a.lists.size()) + " vs " +
                          std::to_string(b.lists.size()) + " queries");
  std::vector<GenderLabel> xs, ys;
  for (std::size_t i = 0; i < a.lists.size(); ++i) {
    const auto& la = a.lists[i];
    const auto& lb = b.lists[i];
    if (la.query_id != lb.query_id)
      throw ValidationError("datasets do not align: query '" + la.query_id + "' vs '" +
                            lb.query_id + "'");
    if (la.size() != lb.size())
      throw ValidationError("query '" + la.query_id + "': lists differ in length (" +
                            std::to_string(la.size()) + " vs " + std::to_string(lb.size()) + ")");
    xs.insert(xs.end(), la.items.begin(), la.items.end());
    ys.insert(ys.end(), lb.items.begin(), lb.items.end());
  }
  const double ratio = agreement(xs, ys);
  std::cout << "agreement: " << fmt6(ratio) << " (" << xs.size() << " positions)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gender bias audit for annotated ranked lists"};
  app.require_subcommand(1);

  std::string path, path_b, out_path, format;
  ConfigOpts opts;
  std::size_t queries = 0, length = 0;
  double pmale = 0.0, pfemale = 0.0, boost = 0.0;
  std::uint64_t seed = 0;

  auto* validate_cmd = app.add_subcommand("validate", "Check a dataset and summarize its contents");
  validate_cmd->add_option("path", path, "Dataset file (.csv or .json)")->required();
  validate_cmd->callback([&] { run_validate(path); });

  auto* score_cmd = app.add_subcommand("score", "Per-query shares and deltas as CSV");
  score_cmd->add_option("path", path, "Dataset file")->required();
  add_config_options(score_cmd, opts, false);
  score_cmd->add_option("--out", out_path, "Write to a file instead of stdout");
  score_cmd->callback([&] { run_score(path, opts, out_path); });

  auto* aggregate_cmd = app.add_subcommand("aggregate", "Grouped MB/MAB tables with significance");
  aggregate_cmd->add_option("path", path, "Dataset file")->required();
  add_config_options(aggregate_cmd, opts, true);
  aggregate_cmd->add_flag("--major-tests", opts.major_tests,
                          "Attach one-sample tests to major-level cells");
  aggregate_cmd->add_option("--out", out_path, "Write to a file instead of stdout");
  aggregate_cmd->callback([&] { run_aggregate(path, opts, out_path); });

  auto* cutoffs_cmd = app.add_subcommand("cutoffs", "Paired cut-off contrasts with Bonferroni correction");
  cutoffs_cmd->add_option("path", path, "Dataset file")->required();
  add_config_options(cutoffs_cmd, opts, true);
  cutoffs_cmd->add_option("--bonferroni-m", opts.bonferroni_m,
                          "Family size for the correction (default: contrasts run)");
  cutoffs_cmd->add_option("--out", out_path, "Write to a file instead of stdout");
  cutoffs_cmd->callback([&] { run_cutoffs(path, opts, out_path); });

  auto* report_cmd = app.add_subcommand("report", "Full audit report");
  report_cmd->add_option("path", path, "Dataset file")->required();
  report_cmd->add_option("--format", format, "Output format")
      ->required()
      ->check(CLI::IsMember({"md", "csv", "json"}));
  report_cmd->add_option("--out", out_path, "Output file")->required();
  add_config_options(report_cmd, opts, true);
  report_cmd->add_option("--bonferroni-m", opts.bonferroni_m,
                         "Family size for the correction (default: contrasts run)");
  report_cmd->add_flag("--major-tests", opts.major_tests,
                       "Attach one-sample tests to major-level cells");
  report_cmd->callback([&] { run_report(path, opts, format, out_path); });

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic annotated dataset");
  synth_cmd->add_option("--queries", queries, "Number of queries")->required();
  synth_cmd->add_option("--length", length, "Items per query")->required();
  synth_cmd->add_option("--pmale", pmale, "Per-item probability of a male label")->required();
  synth_cmd->add_option("--pfemale", pfemale, "Per-item probability of a female label")->required();
  synth_cmd->add_option("--boost", boost, "Extra male probability at rank 1, fading to 0 at the end");
  synth_cmd->add_option("--seed", seed, "RNG seed (default 0)");
  synth_cmd->add_option("--out", out_path, "Output file (.csv or .json)")->required();
  synth_cmd->callback([&] { run_synth(queries, length, pmale, pfemale, boost, seed, out_path); });

  auto* agreement_cmd = app.add_subcommand("agreement", "Positionwise agreement of two annotation passes");
  agreement_cmd->add_option("fileA", path, "First dataset")->required();
  agreement_cmd->add_option("fileB", path_b, "Second dataset")->required();
  agreement_cmd->callback([&] { run_agreement(path, path_b); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const StatError& e) {
    std::cerr << "statistics error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
