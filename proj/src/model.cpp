#include "arl/model.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace arl {

namespace {

constexpr std::string_view kNameReserved = ":{},=\\ \t\r\n\"";
constexpr std::string_view kValueReserved = "{},\\\t\r\n\"";

bool valid_name(std::string_view name) {
  return !name.empty() && name.find_first_of(kNameReserved) == std::string_view::npos;
}

bool valid_value(std::string_view value) {
  return !value.empty() && value.find_first_of(kValueReserved) == std::string_view::npos &&
         value.front() != ' ' && value.back() != ' ';
}

[[noreturn]] void bad_schema(const std::string& why) { throw Error(errc::invalid_schema, why); }

void check_attribute(const AttributeSchema& a, AttributeKind expected) {
  if (!valid_name(a.name)) bad_schema("invalid attribute name '" + a.name + "'");
  if (a.kind != expected) {
    bad_schema("attribute '" + a.name + "' declared as " + std::string(to_string(a.kind)) +
               " in the " + std::string(to_string(expected)) + " list");
  }
  if (a.domain.empty()) bad_schema("attribute '" + a.name + "' has an empty domain");
  std::set<std::string_view> seen;
  for (const auto& v : a.domain) {
    if (!valid_value(v)) bad_schema("attribute '" + a.name + "' has invalid value '" + v + "'");
    if (!seen.insert(v).second) bad_schema("attribute '" + a.name + "' repeats value '" + v + "'");
  }
}

void escape_into(std::string& out, std::string_view text) {
  for (char c : text) {
    if (c == '\\' || c == ',' || c == '=' || c == '{' || c == '}') out.push_back('\\');
    out.push_back(c);
  }
}

}  // namespace

std::string_view to_string(AttributeKind kind) {
  return kind == AttributeKind::input ? "input" : "output";
}

AttributeKind parse_attribute_kind(std::string_view text) {
  if (text == "input") return AttributeKind::input;
  if (text == "output") return AttributeKind::output;
  bad_schema("unknown attribute kind '" + std::string(text) + "'");
}

bool AttributeSchema::allows(std::string_view value) const {
  return std::find(domain.begin(), domain.end(), value) != domain.end();
}

AttributeSchema parse_attribute_literal(std::string_view literal) {
  const auto first = literal.find(':');
  const auto second = first == std::string_view::npos ? first : literal.find(':', first + 1);
  if (second == std::string_view::npos) {
    bad_schema("attribute literal '" + std::string(literal) + "' is not name:kind:{...}");
  }
  AttributeSchema a;
  a.name = std::string(literal.substr(0, first));
  a.kind = parse_attribute_kind(literal.substr(first + 1, second - first - 1));
  auto body = literal.substr(second + 1);
  if (body.size() < 2 || body.front() != '{' || body.back() != '}') {
    bad_schema("attribute literal '" + std::string(literal) + "' lacks a {...} domain");
  }
  body = body.substr(1, body.size() - 2);
  if (!body.empty()) {
    std::size_t start = 0;
    while (true) {
      const auto comma = body.find(',', start);
      a.domain.emplace_back(body.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  check_attribute(a, a.kind);
  return a;
}

std::string format_attribute_literal(const AttributeSchema& attribute) {
  std::string out = attribute.name;
  out += ':';
  out += to_string(attribute.kind);
  out += ":{";
  for (std::size_t i = 0; i < attribute.domain.size(); ++i) {
    if (i) out += ',';
    out += attribute.domain[i];
  }
  out += '}';
  return out;
}

Schema::Schema(std::vector<AttributeSchema> inputs, std::vector<AttributeSchema> outputs)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
  if (inputs_.empty()) bad_schema("schema needs at least one input attribute");
  if (outputs_.empty()) bad_schema("schema needs at least one output attribute");
  std::set<std::string_view> names;
  for (const auto& a : inputs_) {
    check_attribute(a, AttributeKind::input);
    if (!names.insert(a.name).second) bad_schema("duplicate attribute '" + a.name + "'");
  }
  for (const auto& a : outputs_) {
    check_attribute(a, AttributeKind::output);
    if (!names.insert(a.name).second) bad_schema("duplicate attribute '" + a.name + "'");
  }
}

const AttributeSchema* Schema::find(std::string_view name) const {
  if (const auto* a = find_input(name)) return a;
  return find_output(name);
}

const AttributeSchema* Schema::find_input(std::string_view name) const {
  for (const auto& a : inputs_)
    if (a.name == name) return &a;
  return nullptr;
}

const AttributeSchema* Schema::find_output(std::string_view name) const {
  for (const auto& a : outputs_)
    if (a.name == name) return &a;
  return nullptr;
}

ItemSet::ItemSet(std::initializer_list<Item> items) : ItemSet(std::vector<Item>(items)) {}

ItemSet::ItemSet(std::vector<Item> items) {
  items_.reserve(items.size());
  for (auto& item : items) {
    if (!insert(item)) {
      throw Error(errc::conflicting_items, "attribute '" + item.attribute + "' bound twice");
    }
  }
}

bool ItemSet::insert(Item item) {
  auto it = std::lower_bound(items_.begin(), items_.end(), item.attribute,
                             [](const Item& a, const std::string& attr) { return a.attribute < attr; });
  if (it != items_.end() && it->attribute == item.attribute) return it->value == item.value;
  items_.insert(it, std::move(item));
  return true;
}

bool ItemSet::contains(const Item& item) const {
  auto v = value_of(item.attribute);
  return v && *v == item.value;
}

std::optional<std::string_view> ItemSet::value_of(std::string_view attribute) const {
  auto it = std::lower_bound(items_.begin(), items_.end(), attribute,
                             [](const Item& a, std::string_view attr) { return a.attribute < attr; });
  if (it != items_.end() && it->attribute == attribute) return std::string_view(it->value);
  return std::nullopt;
}

bool ItemSet::is_subset_of(const ItemSet& other) const {
  return std::includes(other.items_.begin(), other.items_.end(), items_.begin(), items_.end());
}

bool ItemSet::compatible_with(const ItemSet& other) const {
  for (const auto& item : items_) {
    auto v = other.value_of(item.attribute);
    if (v && *v != item.value) return false;
  }
  return true;
}

ItemSet ItemSet::union_with(const ItemSet& other) const {
  ItemSet out = *this;
  for (const auto& item : other.items_) {
    if (!out.insert(item)) {
      throw Error(errc::conflicting_items, "attribute '" + item.attribute + "' bound twice");
    }
  }
  return out;
}

std::string canonical_encode(const ItemSet& set) {
  std::string out = "{";
  bool first = true;
  for (const auto& item : set) {
    if (!first) out += ',';
    first = false;
    escape_into(out, item.attribute);
    out += '=';
    escape_into(out, item.value);
  }
  out += '}';
  return out;
}

std::optional<RowIssue> validate_row(const Schema& schema, const TrainingRow& row) {
  if (row.weight == 0) return RowIssue{std::string(errc::invalid_weight), {}};
  for (const auto& [name, value] : row.inputs) {
    const auto* a = schema.find_input(name);
    if (!a) return RowIssue{std::string(errc::unknown_attribute), name};
    if (!a->allows(value)) return RowIssue{std::string(errc::out_of_domain_value), name};
  }
  for (const auto& [name, value] : row.outputs) {
    const auto* a = schema.find_output(name);
    if (!a) return RowIssue{std::string(errc::unknown_attribute), name};
    if (!a->allows(value)) return RowIssue{std::string(errc::out_of_domain_value), name};
  }
  for (const auto& a : schema.outputs()) {
    if (!row.outputs.contains(a.name)) return RowIssue{std::string(errc::missing_output), a.name};
  }
  return std::nullopt;
}

ItemSet row_to_itemset(const TrainingRow& row) {
  std::vector<Item> items;
  items.reserve(row.inputs.size() + row.outputs.size());
  for (const auto& [name, value] : row.inputs) items.push_back({name, value});
  for (const auto& [name, value] : row.outputs) items.push_back({name, value});
  return ItemSet(std::move(items));
}

std::uint64_t Dataset::total_weight() const {
  std::uint64_t total = 0;
  for (const auto& r : rows) total += r.weight;
  return total;
}

std::string_view to_string(RuleSource source) {
  switch (source) {
    case RuleSource::apriori: return "apriori";
    case RuleSource::maxminer: return "maxminer";
    case RuleSource::id3: return "id3";
  }
  return "apriori";
}

RuleSource parse_rule_source(std::string_view text) {
  if (text == "apriori") return RuleSource::apriori;
  if (text == "maxminer") return RuleSource::maxminer;
  if (text == "id3") return RuleSource::id3;
  throw Error(errc::malformed_params, "unknown algorithm '" + std::string(text) + "'");
}

std::string Rule::identity() const {
  return canonical_encode(antecedent) + "=>" + canonical_encode(consequent);
}

Thresholds Thresholds::make(double min_support, double min_confidence) {
  auto in_range = [](double x) { return x > 0.0 && x <= 1.0; };
  if (!in_range(min_support) || !in_range(min_confidence)) {
    throw Error(errc::invalid_thresholds, "support and confidence thresholds must be in (0, 1]");
  }
  return {min_support, min_confidence};
}

IdentificationKey::IdentificationKey(std::string text) : text_(std::move(text)) {
  if (!well_formed(text_)) throw Error(errc::unknown_key, "malformed identification key");
}

bool IdentificationKey::well_formed(std::string_view text) {
  return text.size() == length && std::all_of(text.begin(), text.end(), [](char c) {
           return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
         });
}

IdentificationKey IdentificationKey::generate() {
  static constexpr std::string_view alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
  // libstdc++ maps this token onto getrandom(2) / the urandom device.
  std::random_device device("/dev/urandom");
  std::string text;
  text.reserve(length);
  while (text.size() < length) {
    auto word = device();
    for (int i = 0; i < 4 && text.size() < length; ++i, word >>= 8) {
      const unsigned byte = word & 0xffU;
      if (byte < 248) text.push_back(alphabet[byte % alphabet.size()]);  // 248 = 4 * 62
    }
  }
  return IdentificationKey(std::move(text));
}

}  // namespace arl
