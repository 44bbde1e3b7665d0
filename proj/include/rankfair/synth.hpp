#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>

#include "rankfair/dataset.hpp"

namespace rankfair {

// Recipe for a synthetic annotated dataset. label_probabilities holds the
// per-item chances of male, female, neutral, not_relevant, na (sum 1).
// top_heavy_male_boost tilts lists toward male at the top: the male
// probability interpolates linearly from p_male + boost at rank 1 down to
// p_male at the last rank, with the remaining labels rescaled to keep the
// total at 1.
struct SynthSpec {
  std::size_t num_queries = 0;
  std::size_t list_length = 0;
  std::array<double, 5> label_probabilities{};
  double top_heavy_male_boost = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

// mt19937_64 output folded to a double in [0, 1). The standard library's
// distributions are not bit-identical across implementations, so the mapping
// is spelled out: top 53 bits scaled by 2^-53.
inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline void check_synth_spec(const SynthSpec& spec) {
  if (spec.num_queries < 1) throw std::invalid_argument("synth: num_queries must be >= 1");
  if (spec.num_queries > 99999)
    throw std::invalid_argument("synth: num_queries capped at 99999 (query ids are zero-padded to 5 digits)");
  if (spec.list_length < 1) throw std::invalid_argument("synth: list_length must be >= 1");
  double sum = 0.0;
  for (double p : spec.label_probabilities) {
    if (!(p >= 0.0)) throw std::invalid_argument("synth: label probabilities must be >= 0");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("synth: label probabilities must sum to 1");
  if (!(spec.top_heavy_male_boost >= 0.0))
    throw std::invalid_argument("synth: boost must be >= 0");
  if (spec.label_probabilities[0] + spec.top_heavy_male_boost > 1.0 + 1e-9)
    throw std::invalid_argument("synth: p_male + boost must not exceed 1");
}

}  // namespace detail

inline Dataset synth_generate(const SynthSpec& spec) {
  detail::check_synth_spec(spec);
  std::mt19937_64 rng(spec.seed);
  const double p_male = spec.label_probabilities[0];
  Dataset ds;
  ds.lists.reserve(spec.num_queries);
  for (std::size_t q = 0; q < spec.num_queries; ++q) {
    AnnotatedRankedList list;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%05zu", q + 1);
    list.query_id = id;
    list.query_text = "synthetic query " + std::to_string(q + 1);
    list.field = (q % 2 == 0) ? Field::Stem : Field::NonStem;
    list.major = (q % 2 == 0) ? "synthetic-stem" : "synthetic-nonstem";
    list.items.reserve(spec.list_length);
    const auto length = static_cast<double>(spec.list_length);
    for (std::size_t i = 1; i <= spec.list_length; ++i) {
      // Fraction of the boost still in effect at this rank (all of it at rank
      // 1, none at the last rank; a length-1 list gets the full boost).
      const double fade = spec.list_length == 1
                              ? 1.0
                              : (length - static_cast<double>(i)) / (length - 1.0);
      const double pm = p_male + spec.top_heavy_male_boost * fade;
      const double rescale = p_male < 1.0 ? (1.0 - pm) / (1.0 - p_male) : 0.0;
      std::array<double, 5> probs = spec.label_probabilities;
      probs[0] = pm;
      for (std::size_t k = 1; k < probs.size(); ++k) probs[k] *= rescale;
      const double u = detail::unit_draw(rng);
      double cumulative = 0.0;
      std::size_t chosen = probs.size() - 1;
      for (std::size_t k = 0; k < probs.size(); ++k) {
        cumulative += probs[k];
        if (u < cumulative) {
          chosen = k;
          break;
        }
      }
      list.items.push_back(static_cast<GenderLabel>(chosen));
    }
    ds.lists.push_back(std::move(list));
  }
  ds.provenance = {"synth(seed=" + std::to_string(spec.seed) + ")",
                   detail::utc_now_string()};
  return ds;
}

}  // namespace rankfair
