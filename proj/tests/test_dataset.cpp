#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rankfair/dataset.hpp"
#include "rankfair/metrics.hpp"
#include "rankfair/synth.hpp"

using namespace rankfair;
using Catch::Approx;

namespace {

constexpr auto M = GenderLabel::Male;
constexpr auto F = GenderLabel::Female;
constexpr auto N = GenderLabel::Neutral;

Dataset parse_csv_text(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in, DataFormat::Csv, "inline.csv");
}

Dataset parse_json_text(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in, DataFormat::Json, "inline.json");
}

const char* kHeader = "query_id,query_text,field,major,rank,label\n";

}  // namespace

TEST_CASE("CSV ingest builds sorted lists with canonical labels") {
  const std::string text = std::string(kHeader) +
                           "q2,second query,NON-STEM,history,1,female\n"
                           "q1,first query,STEM,maths,2, Female \n"
                           "q1,first query,STEM,maths,1,Male\n"
                           "q2,second query,NON-STEM,history,2,N/A\n"
                           "q2,second query,NON-STEM,history,3,not-relevant\n";
  const Dataset ds = parse_csv_text(text);
  REQUIRE(ds.lists.size() == 2);
  REQUIRE(ds.record_count() == 5);
  REQUIRE(ds.lists[0].query_id == "q1");  // sorted even though q2 came first
  REQUIRE(ds.lists[0].items == std::vector<GenderLabel>{M, F});
  REQUIRE(ds.lists[0].field == Field::Stem);
  REQUIRE(ds.lists[0].major == "maths");
  REQUIRE(ds.lists[1].items ==
          std::vector<GenderLabel>{F, GenderLabel::NotApplicable, GenderLabel::NotRelevant});
  REQUIRE(ds.provenance.source_path == "inline.csv");
  REQUIRE_FALSE(ds.provenance.ingested_at.empty());
}

TEST_CASE("CSV ingest accepts quoted fields with embedded delimiters") {
  const std::string text = std::string(kHeader) +
                           "q1,\"how, exactly?\",STEM,maths,1,male\n"
                           "q1,\"how, exactly?\",STEM,maths,2,\"female\"\n";
  const Dataset ds = parse_csv_text(text);
  REQUIRE(ds.lists[0].query_text == "how, exactly?");
  REQUIRE(ds.lists[0].items == std::vector<GenderLabel>{M, F});
}

TEST_CASE("CSV ingest errors carry line locators") {
  const auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_csv_text(text);
      FAIL("expected a validation error containing '" << needle << "'");
    } catch (const ValidationError& e) {
      REQUIRE(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error("a,b\nq,t,STEM,m,1,male\n", "header");
  expect_error(std::string(kHeader) + "q,t,STEM,m,1\n", "line 2");
  expect_error(std::string(kHeader) + "q,t,STEM,m,1,male\nq,t,STEM,m,2,robot\n",
               "unknown label 'robot'");
  expect_error(std::string(kHeader) + "q,t,STEM,m,0,male\n", "rank");
  expect_error(std::string(kHeader) + "q,t,STEM,m,x,male\n", "rank");
  expect_error(std::string(kHeader) + "q,t,ARTS,m,1,male\n", "unknown field");
  expect_error(std::string(kHeader) + "q,t,STEM,m,1,male\nq,t,STEM,m,1,female\n",
               "duplicate rank 1 for query 'q'");
  expect_error(std::string(kHeader) + "q,t,STEM,m,1,male\nq,t,STEM,m,3,female\n",
               "not contiguous");
  expect_error(std::string(kHeader) + "q,t,STEM,m,1,male\nq,t,NON-STEM,m,2,female\n",
               "field differs");
  expect_error(std::string(kHeader) + "q,t,STEM,m,1,male\nq,t,STEM,other,2,female\n",
               "major differs");
  expect_error(std::string(kHeader), "no records");
  expect_error("", "empty");
}

TEST_CASE("JSON ingest parses the query-object array") {
  const std::string text = R"([
    {"query_id": "q1", "query_text": "first", "field": "STEM", "major": "maths",
     "labels": ["male", "neutral", "female"]},
    {"query_id": "q0", "query_text": "zeroth", "field": "NON-STEM", "major": "dance",
     "labels": ["na"]}
  ])";
  const Dataset ds = parse_json_text(text);
  REQUIRE(ds.lists.size() == 2);
  REQUIRE(ds.lists[0].query_id == "q0");
  REQUIRE(ds.lists[1].items == std::vector<GenderLabel>{M, N, F});
}

TEST_CASE("JSON ingest rejects malformed documents") {
  REQUIRE_THROWS_AS(parse_json_text("{"), ValidationError);
  REQUIRE_THROWS_AS(parse_json_text("{}"), ValidationError);
  REQUIRE_THROWS_AS(parse_json_text("[]"), ValidationError);
  REQUIRE_THROWS_AS(parse_json_text(R"([{"query_id": "q"}])"), ValidationError);
  REQUIRE_THROWS_AS(
      parse_json_text(
          R"([{"query_id":"q","query_text":"t","field":"STEM","major":"m","labels":[]}])"),
      ValidationError);
  REQUIRE_THROWS_AS(
      parse_json_text(
          R"([{"query_id":"q","query_text":"t","field":"STEM","major":"m","labels":["android"]}])"),
      ValidationError);
  try {
    parse_json_text(
        R"([{"query_id":"q","query_text":"t","field":"STEM","major":"m","labels":["male"]},
            {"query_id":"q","query_text":"t","field":"STEM","major":"m","labels":["female"]}])");
    FAIL("expected duplicate query to be rejected");
  } catch (const ValidationError& e) {
    REQUIRE(std::string(e.what()).find("duplicate rank 1 for query 'q'") != std::string::npos);
  }
}

TEST_CASE("datasets survive a render-parse round trip in both formats") {
  std::mt19937_64 rng(606);
  for (int trial = 0; trial < 40; ++trial) {
    Dataset original;
    const std::size_t queries = 1 + rng() % 6;
    for (std::size_t q = 0; q < queries; ++q) {
      AnnotatedRankedList list;
      list.query_id = "q" + std::to_string(q);
      list.query_text = q % 3 == 0 ? "plain text"
                        : q % 3 == 1 ? "comma, \"quote\" and more"
                                     : "line\nbreak";
      list.field = rng() % 2 ? Field::Stem : Field::NonStem;
      list.major = rng() % 2 ? "maths" : "public relations";
      list.items.resize(1 + rng() % 12);
      for (auto& l : list.items) l = static_cast<GenderLabel>(rng() % 5);
      original.lists.push_back(std::move(list));
    }
    for (const DataFormat format : {DataFormat::Csv, DataFormat::Json}) {
      const std::string text = render_dataset(original, format);
      std::istringstream in(text);
      const Dataset reparsed = parse_dataset(in, format, "roundtrip");
      REQUIRE(reparsed.lists == original.lists);
    }
  }
}

TEST_CASE("format inference looks at the extension") {
  REQUIRE(infer_format("data.csv") == DataFormat::Csv);
  REQUIRE(infer_format("DATA.CSV") == DataFormat::Csv);
  REQUIRE(infer_format("data.json") == DataFormat::Json);
  REQUIRE_FALSE(infer_format("data.txt").has_value());
  REQUIRE_FALSE(infer_format("data").has_value());
}

TEST_CASE("missing files raise an I/O error") {
  REQUIRE_THROWS_AS(parse_dataset_file("/nonexistent/nowhere.csv"), IoError);
}

TEST_CASE("the bundled worked-example fixture parses") {
  const Dataset ds = parse_dataset_file(std::string(RANKFAIR_TEST_DATA_DIR) +
                                        "/worked_examples.csv");
  REQUIRE(ds.lists.size() == 4);
  REQUIRE(ds.record_count() == 48);
  const auto& mixed = ds.lists[3];
  REQUIRE(mixed.query_id == "ex-e-mixed-labels");
  REQUIRE(filter_mf(mixed).items == std::vector<GenderLabel>{F, F, F, F, M, M, M, M});
}

TEST_CASE("validation summarizes contents without mutating them") {
  const std::string text = std::string(kHeader) +
                           "q1,t,STEM,maths,1,male\n"
                           "q1,t,STEM,maths,2,female\n"
                           "q2,t,NON-STEM,dance,1,neutral\n"
                           "q2,t,NON-STEM,dance,2,na\n";
  const Dataset ds = parse_csv_text(text);
  const std::string before = render_dataset(ds, DataFormat::Csv);
  const auto report = validate(ds);
  REQUIRE(render_dataset(ds, DataFormat::Csv) == before);

  REQUIRE(report.list_count == 2);
  REQUIRE(report.record_count == 4);
  REQUIRE(report.lists_per_field.at("STEM") == 1);
  REQUIRE(report.lists_per_field.at("NON-STEM") == 1);
  REQUIRE(report.lists_per_major.at("maths") == 1);
  REQUIRE(report.label_counts.at("male") == 1);
  REQUIRE(report.label_counts.at("neutral") == 1);
  REQUIRE(report.queries_without_mf == std::vector<std::string>{"q2"});
  REQUIRE(report.warnings.empty());

  const std::vector<int> cutoffs{3, 6};
  const auto clamped = validate(ds, cutoffs);
  REQUIRE(clamped.warnings.size() == 2);
  REQUIRE(clamped.warnings[0].find("cut-off 3") != std::string::npos);

  const std::string rendered = render_text(report);
  REQUIRE(rendered.find("lists: 2") != std::string::npos);
  REQUIRE(rendered.find("q2") != std::string::npos);
}

TEST_CASE("validation handles a survey-shaped dataset") {
  Dataset ds;
  const std::vector<std::string> stem_majors{"maths", "physics", "chemistry", "biology",
                                             "computing"};
  const std::vector<std::string> nonstem_majors{"history", "dance", "law", "music",
                                                "public relations"};
  int counter = 0;
  for (int per_major = 0; per_major < 10; ++per_major) {
    for (std::size_t k = 0; k < 5; ++k) {
      for (bool stem : {true, false}) {
        AnnotatedRankedList list;
        list.query_id = "q" + std::to_string(1000 + counter++);
        list.query_text = "query";
        list.field = stem ? Field::Stem : Field::NonStem;
        list.major = stem ? stem_majors[k] : nonstem_majors[k];
        list.items.assign(12, counter % 2 ? M : F);
        ds.lists.push_back(std::move(list));
      }
    }
  }
  const auto report = validate(ds);
  REQUIRE(report.list_count == 100);
  REQUIRE(report.record_count == 1200);
  REQUIRE(report.lists_per_major.size() == 10);
  REQUIRE(report.lists_per_field.at("STEM") == 50);
  REQUIRE(report.queries_without_mf.empty());
}

TEST_CASE("agreement counts exact position matches") {
  const std::vector<GenderLabel> a{M, F, N};
  const std::vector<GenderLabel> b{M, F, F};
  REQUIRE(agreement(a, b) == Approx(2.0 / 3.0).margin(1e-15));
  REQUIRE(agreement(b, a) == agreement(a, b));
  REQUIRE(agreement(a, a) == 1.0);
  const std::vector<GenderLabel> longer{M, F, N, N};
  REQUIRE_THROWS_AS(agreement(a, longer), std::invalid_argument);
  const std::vector<GenderLabel> empty;
  REQUIRE_THROWS_AS(agreement(empty, empty), std::invalid_argument);
}

TEST_CASE("synthetic datasets are deterministic per seed") {
  SynthSpec spec;
  spec.num_queries = 20;
  spec.list_length = 12;
  spec.label_probabilities = {0.4, 0.3, 0.1, 0.1, 0.1};
  spec.seed = 42;
  const Dataset a = synth_generate(spec);
  const Dataset b = synth_generate(spec);
  REQUIRE(a.lists == b.lists);
  spec.seed = 43;
  const Dataset c = synth_generate(spec);
  REQUIRE(a.lists != c.lists);
  REQUIRE(a.lists.size() == 20);
  REQUIRE(a.lists[0].size() == 12);
  REQUIRE(a.lists[0].field == Field::Stem);
  REQUIRE(a.lists[1].field == Field::NonStem);
}

TEST_CASE("synthetic label frequencies track their probabilities") {
  SynthSpec spec;
  spec.num_queries = 500;
  spec.list_length = 10;
  spec.label_probabilities = {0.5, 0.5, 0.0, 0.0, 0.0};
  spec.seed = 7;
  const Dataset ds = synth_generate(spec);
  std::size_t males = 0, total = 0;
  for (const auto& list : ds.lists)
    for (auto l : list.items) {
      total += 1;
      if (l == M) ++males;
    }
  REQUIRE(total == 5000);
  REQUIRE(static_cast<double>(males) / static_cast<double>(total) ==
          Approx(0.5).margin(0.02));
}

TEST_CASE("a male boost tilts exposure above representation") {
  SynthSpec spec;
  spec.num_queries = 200;
  spec.list_length = 12;
  spec.label_probabilities = {0.35, 0.35, 0.1, 0.1, 0.1};
  spec.top_heavy_male_boost = 0.3;
  spec.seed = 11;
  const Dataset ds = synth_generate(spec);
  double rep_sum = 0.0, exp_sum = 0.0;
  std::size_t defined = 0;
  for (const auto& list : ds.lists) {
    const auto rep = rep_share(list, 12);
    const auto exp = exp_share(list, 12);
    if (!rep.defined()) continue;
    rep_sum += rep.delta;
    exp_sum += exp.delta;
    ++defined;
  }
  REQUIRE(defined > 150);
  REQUIRE(rep_sum / static_cast<double>(defined) > 0.0);   // boost leans male overall
  REQUIRE(exp_sum > rep_sum);                              // and more so at the top
}

TEST_CASE("synth specs are validated") {
  SynthSpec spec;
  spec.num_queries = 1;
  spec.list_length = 1;
  spec.label_probabilities = {0.5, 0.6, 0.0, 0.0, 0.0};
  REQUIRE_THROWS_AS(synth_generate(spec), std::invalid_argument);
  spec.label_probabilities = {0.5, 0.5, 0.0, 0.0, 0.0};
  spec.num_queries = 0;
  REQUIRE_THROWS_AS(synth_generate(spec), std::invalid_argument);
  spec.num_queries = 1;
  spec.list_length = 0;
  REQUIRE_THROWS_AS(synth_generate(spec), std::invalid_argument);
  spec.list_length = 1;
  spec.top_heavy_male_boost = 0.8;
  REQUIRE_THROWS_AS(synth_generate(spec), std::invalid_argument);
  spec.top_heavy_male_boost = 0.2;
  REQUIRE_NOTHROW(synth_generate(spec));
}
