#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "rankfair/ranked_list.hpp"

namespace rankfair {

enum class Measure { Representation, Exposure };

// How a cut-off n interacts with non-gendered items:
//   CompactFirst: drop non-gendered items, re-index, then keep the first n.
//   WindowFirst:  keep the first n original positions, then drop non-gendered.
// Either way the evaluated window holds gendered items only and exposure
// weights use positions within that window.
enum class CutoffMode { CompactFirst, WindowFirst };

constexpr std::string_view measure_token(Measure m) {
  return m == Measure::Representation ? "rep" : "exp";
}

constexpr std::string_view cutoff_mode_token(CutoffMode mode) {
  return mode == CutoffMode::CompactFirst ? "compact-first" : "window-first";
}

// Male/female share of one list at one cut-off. A window with no gendered
// items leaves the pair undefined: shares and delta are NaN and callers must
// exclude it from aggregation rather than read it as 0.
struct SharePair {
  Measure measure = Measure::Representation;
  int cutoff = 0;
  std::size_t mf_count = 0;  // gendered items inside the evaluated window
  double male_share = std::numeric_limits<double>::quiet_NaN();
  double female_share = std::numeric_limits<double>::quiet_NaN();
  double delta = std::numeric_limits<double>::quiet_NaN();

  bool defined() const { return mf_count > 0; }
};

// Signed bias of one score pair: positive means skew toward Male.
inline double delta(const SharePair& pair) { return pair.delta; }

// Centers a share on 0 so male and female columns mirror each other.
inline double relative_share(double share) {
  if (!(share >= 0.0 && share <= 1.0))
    throw std::domain_error("relative_share: share must lie in [0, 1]");
  return share - 0.5;
}

// Logarithmic position discount: 1 at the top, decaying with rank.
inline double position_weight(int position) {
  if (position < 1) throw std::domain_error("position_weight: position must be >= 1");
  return 1.0 / std::log2(static_cast<double>(position) + 1.0);
}

// Drops Neutral / NotRelevant / NotApplicable items and re-indexes the rest,
// keeping query metadata intact.
inline AnnotatedRankedList filter_mf(const AnnotatedRankedList& list) {
  AnnotatedRankedList out;
  out.query_id = list.query_id;
  out.query_text = list.query_text;
  out.field = list.field;
  out.major = list.major;
  out.items.reserve(list.items.size());
  for (GenderLabel label : list.items)
    if (is_gendered(label)) out.items.push_back(label);
  return out;
}

namespace detail {

// Gendered labels inside the evaluated window, in rank order. A cut-off
// beyond the end of the list clamps to the list length.
inline std::vector<GenderLabel> evaluated_window(const AnnotatedRankedList& list,
                                                 int cutoff, CutoffMode mode) {
  if (cutoff < 1) throw std::domain_error("cut-off must be >= 1");
  std::vector<GenderLabel> window;
  window.reserve(list.items.size());
  if (mode == CutoffMode::CompactFirst) {
    for (GenderLabel label : list.items)
      if (is_gendered(label)) window.push_back(label);
    if (window.size() > static_cast<std::size_t>(cutoff))
      window.resize(static_cast<std::size_t>(cutoff));
  } else {
    const std::size_t stop = std::min(list.items.size(), static_cast<std::size_t>(cutoff));
    for (std::size_t i = 0; i < stop; ++i)
      if (is_gendered(list.items[i])) window.push_back(list.items[i]);
  }
  return window;
}

}  // namespace detail

// Share of window slots held by each gender (head-count, position-blind).
inline SharePair rep_share(const AnnotatedRankedList& list, int cutoff,
                           CutoffMode mode = CutoffMode::CompactFirst) {
  const auto window = detail::evaluated_window(list, cutoff, mode);
  SharePair pair{.measure = Measure::Representation, .cutoff = cutoff,
                 .mf_count = window.size()};
  if (window.empty()) return pair;
  std::size_t males = 0;
  for (GenderLabel label : window)
    if (label == GenderLabel::Male) ++males;
  const auto n = static_cast<double>(window.size());
  pair.male_share = static_cast<double>(males) / n;
  pair.female_share = static_cast<double>(window.size() - males) / n;
  pair.delta = pair.male_share - pair.female_share;
  return pair;
}

// Share of position-discounted attention held by each gender: items higher in
// the window weigh more, and shares are normalized by the window's total
// weight so they still sum to 1.
inline SharePair exp_share(const AnnotatedRankedList& list, int cutoff,
                           CutoffMode mode = CutoffMode::CompactFirst) {
  const auto window = detail::evaluated_window(list, cutoff, mode);
  SharePair pair{.measure = Measure::Exposure, .cutoff = cutoff,
                 .mf_count = window.size()};
  if (window.empty()) return pair;
  double male_sum = 0.0;
  double female_sum = 0.0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const double w = position_weight(static_cast<int>(i) + 1);
    if (window[i] == GenderLabel::Male)
      male_sum += w;
    else
      female_sum += w;
  }
  const double total = male_sum + female_sum;
  pair.male_share = male_sum / total;
  pair.female_share = female_sum / total;
  pair.delta = pair.male_share - pair.female_share;
  return pair;
}

inline SharePair score(const AnnotatedRankedList& list, Measure measure, int cutoff,
                       CutoffMode mode = CutoffMode::CompactFirst) {
  return measure == Measure::Representation ? rep_share(list, cutoff, mode)
                                            : exp_share(list, cutoff, mode);
}

}  // namespace rankfair
