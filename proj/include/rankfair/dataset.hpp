#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstddef>
#include <ctime>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rankfair/csv.hpp"
#include "rankfair/errors.hpp"
#include "rankfair/ranked_list.hpp"

namespace rankfair {

enum class DataFormat { Csv, Json };

// Where a dataset came from. The timestamp stays in memory for debugging and
// is never rendered into reports, which must be byte-reproducible.
struct Provenance {
  std::string source_path;
  std::string ingested_at;
};

struct Dataset {
  std::vector<AnnotatedRankedList> lists;  // sorted by query_id
  Provenance provenance;

  std::size_t record_count() const {
    std::size_t n = 0;
    for (const auto& list : lists) n += list.size();
    return n;
  }
};

namespace detail {

inline std::string utc_now_string() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline int parse_rank(const std::string& raw, std::size_t line) {
  const std::string t = trim(raw);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size() || value < 1)
    throw ValidationError("line " + std::to_string(line) + ": rank '" + raw +
                          "' is not a positive integer");
  return value;
}

// Collects rows per query, then checks each query's ranks are exactly 1..k.
class DatasetBuilder {
 public:
  void add(const std::string& locator, std::string query_id, std::string query_text,
           Field field, std::string major, int rank, GenderLabel label) {
    Accum& acc = queries_[query_id];
    if (acc.rows.empty()) {
      acc.query_text = std::move(query_text);
      acc.field = field;
      acc.major = std::move(major);
    } else {
      if (acc.field != field)
        throw ValidationError(locator + ": field differs from earlier records of query '" +
                              query_id + "'");
      if (acc.major != major)
        throw ValidationError(locator + ": major differs from earlier records of query '" +
                              query_id + "'");
    }
    if (!acc.ranks_seen.insert(rank).second)
      throw ValidationError(locator + ": duplicate rank " + std::to_string(rank) +
                            " for query '" + query_id + "'");
    acc.rows.emplace_back(rank, label);
  }

  std::vector<AnnotatedRankedList> finish() {
    if (queries_.empty()) throw ValidationError("dataset holds no records");
    std::vector<AnnotatedRankedList> lists;
    lists.reserve(queries_.size());
    for (auto& [query_id, acc] : queries_) {
      std::sort(acc.rows.begin(), acc.rows.end());
      for (std::size_t i = 0; i < acc.rows.size(); ++i) {
        if (acc.rows[i].first != static_cast<int>(i) + 1)
          throw ValidationError("query '" + query_id + "': ranks are not contiguous from 1 (missing rank " +
                                std::to_string(i + 1) + ")");
      }
      AnnotatedRankedList list;
      list.query_id = query_id;
      list.query_text = std::move(acc.query_text);
      list.field = acc.field;
      list.major = std::move(acc.major);
      list.items.reserve(acc.rows.size());
      for (const auto& [rank, label] : acc.rows) list.items.push_back(label);
      lists.push_back(std::move(list));
    }
    return lists;  // map iteration already sorted by query_id
  }

 private:
  struct Accum {
    std::string query_text;
    Field field = Field::Stem;
    std::string major;
    std::vector<std::pair<int, GenderLabel>> rows;
    std::set<int> ranks_seen;
  };
  std::map<std::string, Accum> queries_;
};

inline const std::vector<std::string>& csv_header() {
  static const std::vector<std::string> header{"query_id", "query_text", "field",
                                               "major",    "rank",       "label"};
  return header;
}

inline Dataset parse_csv(std::istream& in, std::string source_path) {
  csv::Reader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw ValidationError("empty file");
  if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF"))
    fields[0].erase(0, 3);  // UTF-8 BOM
  {
    std::vector<std::string> got;
    got.reserve(fields.size());
    for (const auto& f : fields) got.push_back(normalize_token(f));
    if (got != csv_header())
      throw ValidationError("line 1: header must be 'query_id,query_text,field,major,rank,label'");
  }
  DatasetBuilder builder;
  while (reader.next(fields)) {
    const std::string locator = "line " + std::to_string(reader.line());
    if (fields.size() != csv_header().size())
      throw ValidationError(locator + ": expected 6 columns, got " +
                            std::to_string(fields.size()));
    const auto field = parse_field(fields[2]);
    if (!field)
      throw ValidationError(locator + ": unknown field '" + fields[2] + "'");
    const int rank = parse_rank(fields[4], reader.line());
    const auto label = parse_label(fields[5]);
    if (!label)
      throw ValidationError(locator + ": unknown label '" + fields[5] + "'");
    builder.add(locator, fields[0], fields[1], *field, fields[3], rank, *label);
  }
  Dataset ds;
  ds.lists = builder.finish();
  ds.provenance = {std::move(source_path), utc_now_string()};
  return ds;
}

inline Dataset parse_json(std::istream& in, std::string source_path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("JSON parse error: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("top-level JSON value must be an array of queries");
  DatasetBuilder builder;
  std::size_t index = 0;
  for (const auto& entry : doc) {
    const std::string locator = "query #" + std::to_string(index + 1);
    if (!entry.is_object()) throw ValidationError(locator + ": not an object");
    for (const char* key : {"query_id", "query_text", "field", "major", "labels"})
      if (!entry.contains(key))
        throw ValidationError(locator + ": missing key '" + key + "'");
    if (!entry["labels"].is_array() || entry["labels"].empty())
      throw ValidationError(locator + ": 'labels' must be a non-empty array");
    const std::string query_id = entry["query_id"].get<std::string>();
    const auto field = parse_field(entry["field"].get<std::string>());
    if (!field)
      throw ValidationError(locator + ": unknown field '" +
                            entry["field"].get<std::string>() + "'");
    int rank = 0;
    for (const auto& raw : entry["labels"]) {
      if (!raw.is_string())
        throw ValidationError(locator + ": labels must be strings");
      const auto label = parse_label(raw.get<std::string>());
      if (!label)
        throw ValidationError(locator + ": unknown label '" + raw.get<std::string>() + "'");
      builder.add(locator, query_id, entry["query_text"].get<std::string>(), *field,
                  entry["major"].get<std::string>(), ++rank, *label);
    }
    ++index;
  }
  Dataset ds;
  ds.lists = builder.finish();
  ds.provenance = {std::move(source_path), utc_now_string()};
  return ds;
}

}  // namespace detail

inline std::optional<DataFormat> infer_format(std::string_view path) {
  const auto dot = path.rfind('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const std::string ext = detail::normalize_token(path.substr(dot + 1));
  if (ext == "csv") return DataFormat::Csv;
  if (ext == "json") return DataFormat::Json;
  return std::nullopt;
}

inline Dataset parse_dataset(std::istream& in, DataFormat format,
                             std::string source_path = {}) {
  return format == DataFormat::Csv ? detail::parse_csv(in, std::move(source_path))
                                   : detail::parse_json(in, std::move(source_path));
}

inline Dataset parse_dataset_file(const std::string& path,
                                  std::optional<DataFormat> format = std::nullopt) {
  const DataFormat fmt = format ? *format : infer_format(path).value_or(DataFormat::Csv);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return parse_dataset(in, fmt, path);
}

inline std::string render_dataset(const Dataset& ds, DataFormat format) {
  if (format == DataFormat::Csv) {
    std::string out = csv::join(detail::csv_header());
    for (const auto& list : ds.lists) {
      for (std::size_t i = 0; i < list.items.size(); ++i) {
        out += csv::join({list.query_id, list.query_text, std::string(field_name(list.field)),
                          list.major, std::to_string(i + 1),
                          std::string(label_name(list.items[i]))});
      }
    }
    return out;
  }
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& list : ds.lists) {
    nlohmann::ordered_json entry;
    entry["query_id"] = list.query_id;
    entry["query_text"] = list.query_text;
    entry["field"] = field_name(list.field);
    entry["major"] = list.major;
    auto labels = nlohmann::ordered_json::array();
    for (GenderLabel label : list.items) labels.push_back(label_name(label));
    entry["labels"] = std::move(labels);
    doc.push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

// Read-only health summary of a parsed dataset. cutoffs, when given, drive
// the clamp warnings for lists shorter than a requested cut-off.
struct ValidationReport {
  std::size_t list_count = 0;
  std::size_t record_count = 0;
  std::map<std::string, std::size_t> lists_per_field;
  std::map<std::string, std::size_t> lists_per_major;
  std::map<std::string, std::size_t> label_counts;
  std::vector<std::string> queries_without_mf;  // every score will be undefined
  std::vector<std::string> warnings;
};

inline ValidationReport validate(const Dataset& ds, std::span<const int> cutoffs = {}) {
  ValidationReport report;
  report.list_count = ds.lists.size();
  for (const auto& list : ds.lists) {
    report.record_count += list.size();
    ++report.lists_per_field[std::string(field_name(list.field))];
    ++report.lists_per_major[list.major];
    bool any_mf = false;
    for (GenderLabel label : list.items) {
      ++report.label_counts[std::string(label_name(label))];
      any_mf = any_mf || is_gendered(label);
    }
    if (!any_mf) report.queries_without_mf.push_back(list.query_id);
  }
  for (int n : cutoffs) {
    std::size_t clamped = 0;
    for (const auto& list : ds.lists)
      if (list.size() < static_cast<std::size_t>(n)) ++clamped;
    if (clamped > 0)
      report.warnings.push_back("cut-off " + std::to_string(n) + " exceeds the length of " +
                                std::to_string(clamped) + " list(s); scores clamp to the list length");
  }
  return report;
}

inline std::string render_text(const ValidationReport& report) {
  std::ostringstream out;
  out << "lists: " << report.list_count << "\n";
  out << "records: " << report.record_count << "\n";
  out << "lists per field:\n";
  for (const auto& [key, n] : report.lists_per_field)
    out << "  " << key << ": " << n << "\n";
  out << "lists per major:\n";
  for (const auto& [key, n] : report.lists_per_major)
    out << "  " << key << ": " << n << "\n";
  out << "label counts:\n";
  for (const auto& [key, n] : report.label_counts)
    out << "  " << key << ": " << n << "\n";
  if (!report.queries_without_mf.empty()) {
    out << "queries with no male/female items (scores will be undefined):\n";
    for (const auto& q : report.queries_without_mf) out << "  " << q << "\n";
  }
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  return out.str();
}

// Fraction of positions on which two annotation passes of the same lists
// agree exactly.
inline double agreement(std::span<const GenderLabel> a, std::span<const GenderLabel> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("agreement: label sequences differ in length");
  if (a.empty())
    throw std::invalid_argument("agreement: empty label sequences");
  std::size_t matches = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] == b[i]) ++matches;
  return static_cast<double>(matches) / static_cast<double>(a.size());
}

}  // namespace rankfair
