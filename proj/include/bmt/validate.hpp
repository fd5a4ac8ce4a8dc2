#pragma once

#include "json.hpp"

#include <string>

namespace bmt {

struct ValidationReport {
  std::string kind; // "space", "graph", "field", "tree" or "unknown"
  bool ok = false;
  std::string rule; // broken invariant, empty when ok
  std::string message;
};

// Detects the artifact kind by its keys and re-checks its invariants.
// Never throws for bad content; the report carries the broken rule.
ValidationReport validate_artifact(const nlohmann::json &j);

nlohmann::json report_to_json(const ValidationReport &r);

} // namespace bmt
