#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>

namespace rankfair {

// Annotation outcome for one ranked item. Only Male and Female take part in
// bias scores; the other three are dropped when a list is compacted.
enum class GenderLabel { Male, Female, Neutral, NotRelevant, NotApplicable };

// High-level subject area of a query.
enum class Field { Stem, NonStem };

constexpr bool is_gendered(GenderLabel label) {
  return label == GenderLabel::Male || label == GenderLabel::Female;
}

// Canonical on-disk spelling.
constexpr std::string_view label_name(GenderLabel label) {
  switch (label) {
    case GenderLabel::Male: return "male";
    case GenderLabel::Female: return "female";
    case GenderLabel::Neutral: return "neutral";
    case GenderLabel::NotRelevant: return "not_relevant";
    case GenderLabel::NotApplicable: return "na";
  }
  return "";
}

constexpr std::string_view field_name(Field field) {
  return field == Field::Stem ? "STEM" : "NON-STEM";
}

namespace detail {

inline std::string normalize_token(std::string_view raw) {
  std::size_t begin = 0;
  std::size_t end = raw.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(raw[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(raw[end - 1]))) --end;
  std::string out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i)
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
  return out;
}

}  // namespace detail

// Case-insensitive, whitespace-trimmed. Accepts the synonym spellings that
// show up in hand-annotated files.
inline std::optional<GenderLabel> parse_label(std::string_view raw) {
  const std::string t = detail::normalize_token(raw);
  if (t == "male") return GenderLabel::Male;
  if (t == "female") return GenderLabel::Female;
  if (t == "neutral") return GenderLabel::Neutral;
  if (t == "not_relevant" || t == "not-relevant") return GenderLabel::NotRelevant;
  if (t == "na" || t == "n/a" || t == "not applicable" || t == "not_applicable")
    return GenderLabel::NotApplicable;
  return std::nullopt;
}

inline std::optional<Field> parse_field(std::string_view raw) {
  const std::string t = detail::normalize_token(raw);
  if (t == "stem") return Field::Stem;
  if (t == "non-stem" || t == "non_stem" || t == "nonstem") return Field::NonStem;
  return std::nullopt;
}

}  // namespace rankfair
