#pragma once

// JSON forms shared by the store files, the wire protocol and the CLI.
//
//   row   {"inputs":{...},"outputs":{...},"weight":n}
//   rule  {"antecedent":{...},"consequent":{...},"support":x,"confidence":y,
//          "source":"apriori","active":bool}
//   schema {"inputs":["name:input:{v1,...}",...],"outputs":[...]}
//
// Objects are emitted with keys in exactly the order above.

#include <string>

#include "json.hpp"

#include "arl/model.hpp"

namespace arl {

using Json = nlohmann::ordered_json;

Json row_to_json(const TrainingRow& row);
/// Throws `malformed-row` on shape errors; an explicit null input is
/// treated as unbound.
TrainingRow row_from_json(const Json& j);

Json itemset_to_json(const ItemSet& set);
ItemSet itemset_from_json(const Json& j);

Json rule_to_json(const Rule& rule, bool active);
Rule rule_from_json(const Json& j, bool* active = nullptr);

Json schema_to_json(const Schema& schema);
Schema schema_from_json(const Json& j);

/// Shortest decimal that round-trips to `value`.
std::string format_number(double value);

}  // namespace arl
