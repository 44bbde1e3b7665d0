#pragma once

#include <string>
#include <vector>

#include "rankfair/labels.hpp"

namespace rankfair {

// One query's result list with per-item annotations. items[k] is the item at
// rank k+1; ranks are contiguous from 1 by construction.
struct AnnotatedRankedList {
  std::string query_id;
  std::string query_text;
  Field field = Field::Stem;
  std::string major;
  std::vector<GenderLabel> items;

  std::size_t size() const { return items.size(); }
  bool operator==(const AnnotatedRankedList&) const = default;
};

}  // namespace rankfair
