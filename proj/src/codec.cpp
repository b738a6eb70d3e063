#include "arl/codec.hpp"

#include <charconv>

namespace arl {

namespace {

[[noreturn]] void bad_row(const std::string& why) { throw Error(errc::malformed_row, why); }

std::map<std::string, std::string> string_map(const Json& j, const char* field, bool allow_null) {
  std::map<std::string, std::string> out;
  if (!j.is_object()) bad_row(std::string("'") + field + "' must be an object");
  for (const auto& [name, value] : j.items()) {
    if (value.is_null() && allow_null) continue;
    if (!value.is_string()) bad_row(std::string("'") + field + "." + name + "' must be a string");
    out.emplace(name, value.get<std::string>());
  }
  return out;
}

}  // namespace

Json row_to_json(const TrainingRow& row) {
  Json j = Json::object();
  j["inputs"] = Json::object();
  for (const auto& [k, v] : row.inputs) j["inputs"][k] = v;
  j["outputs"] = Json::object();
  for (const auto& [k, v] : row.outputs) j["outputs"][k] = v;
  j["weight"] = row.weight;
  return j;
}

TrainingRow row_from_json(const Json& j) {
  if (!j.is_object()) bad_row("row must be a JSON object");
  TrainingRow row;
  if (auto it = j.find("inputs"); it != j.end()) row.inputs = string_map(*it, "inputs", true);
  auto out = j.find("outputs");
  if (out == j.end()) bad_row("row lacks 'outputs'");
  row.outputs = string_map(*out, "outputs", false);
  if (auto w = j.find("weight"); w != j.end()) {
    if (!w->is_number_unsigned()) bad_row("'weight' must be a positive integer");
    row.weight = w->get<std::uint64_t>();
  }
  return row;
}

Json itemset_to_json(const ItemSet& set) {
  Json j = Json::object();
  for (const auto& item : set) j[item.attribute] = item.value;
  return j;
}

ItemSet itemset_from_json(const Json& j) {
  if (!j.is_object()) throw Error(errc::malformed_params, "item set must be a JSON object");
  std::vector<Item> items;
  for (const auto& [name, value] : j.items()) {
    if (!value.is_string()) throw Error(errc::malformed_params, "item '" + name + "' must be a string");
    items.push_back({name, value.get<std::string>()});
  }
  return ItemSet(std::move(items));
}

Json rule_to_json(const Rule& rule, bool active) {
  Json j = Json::object();
  j["antecedent"] = itemset_to_json(rule.antecedent);
  j["consequent"] = itemset_to_json(rule.consequent);
  j["support"] = rule.support;
  j["confidence"] = rule.confidence;
  j["source"] = std::string(to_string(rule.source));
  j["active"] = active;
  return j;
}

Rule rule_from_json(const Json& j, bool* active) {
  Rule r;
  r.antecedent = itemset_from_json(j.at("antecedent"));
  r.consequent = itemset_from_json(j.at("consequent"));
  r.support = j.at("support").get<double>();
  r.confidence = j.at("confidence").get<double>();
  r.source = parse_rule_source(j.at("source").get<std::string>());
  if (active) *active = j.value("active", true);
  return r;
}

Json schema_to_json(const Schema& schema) {
  Json j = Json::object();
  j["inputs"] = Json::array();
  for (const auto& a : schema.inputs()) j["inputs"].push_back(format_attribute_literal(a));
  j["outputs"] = Json::array();
  for (const auto& a : schema.outputs()) j["outputs"].push_back(format_attribute_literal(a));
  return j;
}

Schema schema_from_json(const Json& j) {
  auto list = [&](const char* field) {
    std::vector<AttributeSchema> out;
    auto it = j.find(field);
    if (!j.is_object() || it == j.end() || !it->is_array()) {
      throw Error(errc::invalid_schema, std::string("schema lacks a '") + field + "' array");
    }
    for (const auto& literal : *it) {
      if (!literal.is_string()) throw Error(errc::invalid_schema, "attribute literal must be a string");
      out.push_back(parse_attribute_literal(literal.get<std::string>()));
    }
    return out;
  };
  return Schema(list("inputs"), list("outputs"));
}

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

}  // namespace arl
