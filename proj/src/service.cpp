#include "arl/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace arl {

namespace {

[[noreturn]] void bad_params(const std::string& why) { throw Error(errc::malformed_params, why); }

const Json& params_of(const Json& request) {
  static const Json empty = Json::object();
  auto it = request.find("params");
  if (it == request.end() || it->is_null()) return empty;
  if (!it->is_object()) bad_params("'params' must be an object");
  return *it;
}

const Json& field(const Json& params, const char* name) {
  auto it = params.find(name);
  if (it == params.end()) bad_params(std::string("missing parameter '") + name + "'");
  return *it;
}

std::string string_field(const Json& params, const char* name) {
  const auto& v = field(params, name);
  if (!v.is_string()) bad_params(std::string("'") + name + "' must be a string");
  return v.get<std::string>();
}

double number_field(const Json& params, const char* name) {
  const auto& v = field(params, name);
  if (!v.is_number()) bad_params(std::string("'") + name + "' must be a number");
  return v.get<double>();
}

std::vector<AttributeSchema> attribute_list(const Json& params, const char* name) {
  const auto& v = field(params, name);
  if (!v.is_array()) bad_params(std::string("'") + name + "' must be an array of attribute literals");
  std::vector<AttributeSchema> out;
  for (const auto& literal : v) {
    if (!literal.is_string()) bad_params(std::string("'") + name + "' must be an array of attribute literals");
    out.push_back(parse_attribute_literal(literal.get<std::string>()));
  }
  return out;
}

TrainingRow row_param(const Json& j) {
  try {
    return row_from_json(j);
  } catch (const Error& e) {
    bad_params(e.what());
  }
}

std::map<std::string, std::string> string_map(const Json& params, const char* name) {
  const auto& v = field(params, name);
  if (!v.is_object()) bad_params(std::string("'") + name + "' must be an object");
  std::map<std::string, std::string> out;
  for (const auto& [k, value] : v.items()) {
    if (!value.is_string()) bad_params(std::string("'") + name + "." + k + "' must be a string");
    out.emplace(k, value.get<std::string>());
  }
  return out;
}

IdentificationKey key_of(const Json& request) {
  auto it = request.find("key");
  if (it == request.end() || !it->is_string()) {
    throw Error(errc::malformed_request, "request lacks a string 'key'");
  }
  return IdentificationKey(it->get<std::string>());
}

Json error_response(const Json& id, std::string_view code, const std::string& message) {
  Json r = Json::object();
  r["id"] = id;
  r["ok"] = false;
  Json e = Json::object();
  e["code"] = std::string(code);
  e["message"] = message;
  r["error"] = std::move(e);
  return r;
}

}  // namespace

Service::Service(FeedbackPolicy policy) : engine_(std::make_unique<Engine>(policy)) {}

Service::Service(const std::filesystem::path& store_root, FeedbackPolicy policy)
    : store_(std::make_unique<Store>(store_root)),
      engine_(std::make_unique<Engine>(policy, store_.get())) {
  for (const auto& ctx : store_->loaded()) engine_->restore(ctx);
}

std::string Service::handle_line(std::string_view line) {
  Json request;
  try {
    request = Json::parse(line);
  } catch (const std::exception& e) {
    return error_response(Json(), errc::malformed_request, e.what()).dump();
  }
  return dispatch(request).dump();
}

Json Service::dispatch(const Json& request) {
  if (!request.is_object()) return error_response(Json(), errc::malformed_request, "request must be a JSON object");
  const Json id = request.contains("id") ? request["id"] : Json();
  auto verb = request.find("request");
  if (verb == request.end() || !verb->is_string()) {
    return error_response(id, errc::malformed_request, "request lacks a string 'request' verb");
  }
  try {
    Json r = Json::object();
    r["id"] = id;
    r["ok"] = true;
    r["result"] = execute(verb->get<std::string>(), request);
    return r;
  } catch (const Error& e) {
    return error_response(id, e.code(), e.what());
  } catch (const Json::exception& e) {
    return error_response(id, errc::malformed_params, e.what());
  }
}

Json Service::execute(std::string_view verb, const Json& request) {
  auto& engine = *engine_;
  if (verb == "ping") return "pong";
  if (verb == "register_app") {
    const auto key = engine.register_app(string_field(params_of(request), "name"));
    return Json{{"key", key.str()}};
  }

  static const std::set<std::string_view> keyed = {
      "set_input_output",   "load_training_data",     "set_training_data_row", "generate_rules",
      "set_generation_mode", "get_current_output",    "send_feedback_last_gco", "delete_training_data",
      "delete_training_data_row", "change_inputs_outputs"};
  if (!keyed.contains(verb)) throw Error(errc::unknown_request, "unknown request '" + std::string(verb) + "'");

  const auto key = key_of(request);
  const auto& params = params_of(request);

  if (verb == "set_input_output") {
    engine.set_input_output(key, attribute_list(params, "inputs"), attribute_list(params, "outputs"));
    return true;
  }
  if (verb == "load_training_data") {
    const auto& rows_json = field(params, "rows");
    if (!rows_json.is_array()) bad_params("'rows' must be an array");
    std::vector<TrainingRow> rows;
    for (const auto& r : rows_json) rows.push_back(row_param(r));
    return Json{{"accepted", engine.load_training_data(key, std::move(rows))}};
  }
  if (verb == "set_training_data_row") {
    engine.set_training_data_row(key, row_param(field(params, "row")));
    return true;
  }
  if (verb == "generate_rules") {
    const auto thresholds = Thresholds::make(number_field(params, "min_support"), number_field(params, "min_confidence"));
    const auto algorithm = params.contains("algorithm") ? parse_rule_source(string_field(params, "algorithm"))
                                                        : RuleSource::apriori;
    Json rules = Json::array();
    for (const auto& r : engine.generate_rules(key, thresholds, algorithm)) rules.push_back(rule_to_json(r, true));
    return Json{{"rules", std::move(rules)}};
  }
  if (verb == "set_generation_mode") {
    engine.set_generation_mode(key, parse_generation_mode(string_field(params, "mode")));
    return true;
  }
  if (verb == "get_current_output") {
    ItemSet inputs;
    if (params.contains("inputs")) {
      try {
        inputs = itemset_from_json(params["inputs"]);
      } catch (const Error& e) {
        bad_params(e.what());
      }
    }
    const auto gco = engine.get_current_output(key, inputs);
    Json r = Json::object();
    if (!gco.outputs) {
      r["output"] = nullptr;
      return r;
    }
    r["output"] = itemset_to_json(*gco.outputs);
    r["confidence"] = gco.confidence;
    r["support"] = gco.support;
    r["rule"] = gco.rule_identity;
    return r;
  }
  if (verb == "send_feedback_last_gco") {
    const auto verdict = string_field(params, "verdict");
    if (verdict != "positive" && verdict != "negative") bad_params("'verdict' must be positive or negative");
    const double c =
        engine.send_feedback_last_gco(key, verdict == "positive" ? Verdict::positive : Verdict::negative);
    return Json{{"confidence", c}};
  }
  if (verb == "delete_training_data") {
    engine.delete_training_data(key);
    return true;
  }
  if (verb == "delete_training_data_row") {
    const auto mode = params.contains("mode") ? string_field(params, "mode") : std::string("first");
    if (mode != "first" && mode != "all") bad_params("'mode' must be first or all");
    const auto n = engine.delete_training_data_row(key, string_map(params, "match"),
                                                   mode == "all" ? DeleteMode::all : DeleteMode::first);
    return Json{{"deleted", n}};
  }
  // change_inputs_outputs
  const auto report =
      engine.change_inputs_outputs(key, attribute_list(params, "inputs"), attribute_list(params, "outputs"));
  Json r = Json::object();
  r["dropped"] = report.dropped_attributes;
  r["added"] = report.added_attributes;
  r["retained_rows"] = report.retained_rows;
  r["quarantined_rows"] = report.quarantined_rows;
  return r;
}

// ---------------------------------------------------------------------------
// Server

namespace {

[[noreturn]] void bind_failure(const std::string& what) {
  throw Error(errc::bind_failure, what + ": " + std::strerror(errno));
}

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

Server::Server(Service& service, const std::string& endpoint) : service_(service) {
  if (endpoint.starts_with("tcp:")) {
    const auto rest = endpoint.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw Error(errc::bind_failure, "tcp endpoint must be tcp:HOST:PORT");
    const auto host = rest.substr(0, colon);
    const auto port = rest.substr(colon + 1);

    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* found = nullptr;
    if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &found) != 0 || !found) {
      throw Error(errc::bind_failure, "cannot resolve " + endpoint);
    }
    listen_fd_ = ::socket(found->ai_family, found->ai_socktype | SOCK_CLOEXEC, found->ai_protocol);
    if (listen_fd_ < 0) {
      ::freeaddrinfo(found);
      bind_failure("socket");
    }
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const int rc = ::bind(listen_fd_, found->ai_addr, found->ai_addrlen);
    ::freeaddrinfo(found);
    if (rc != 0) bind_failure("bind " + endpoint);

    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  } else {
    socket_path_ = endpoint.starts_with("unix:") ? endpoint.substr(5) : endpoint;
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (socket_path_.native().size() >= sizeof addr.sun_path) {
      throw Error(errc::bind_failure, "socket path too long: " + socket_path_.string());
    }
    std::strncpy(addr.sun_path, socket_path_.c_str(), sizeof addr.sun_path - 1);
    listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) bind_failure("socket");
    ::unlink(socket_path_.c_str());
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      bind_failure("bind " + socket_path_.string());
    }
  }
  if (::listen(listen_fd_, 64) != 0) bind_failure("listen");
}

Server::~Server() {
  stop();
  for (auto& w : workers_)
    if (w.joinable()) w.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  if (!socket_path_.empty()) ::unlink(socket_path_.c_str());
}

void Server::run() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, 200);
    if (ready <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    std::lock_guard lock(clients_mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    clients_.insert(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void Server::stop() {
  stopping_ = true;
  std::lock_guard lock(clients_mutex_);
  for (int fd : clients_) ::shutdown(fd, SHUT_RDWR);
}

void Server::serve_connection(int fd) {
  std::string buffer;
  char chunk[4096];
  bool open = true;
  while (open) {
    const auto n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (auto nl = buffer.find('\n', start); nl != std::string::npos; nl = buffer.find('\n', start)) {
      std::string_view line(buffer.data() + start, nl - start);
      start = nl + 1;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
      if (!write_all(fd, service_.handle_line(line) + "\n")) {
        open = false;
        break;
      }
    }
    buffer.erase(0, start);
  }
  std::lock_guard lock(clients_mutex_);
  clients_.erase(fd);
  ::close(fd);
}

}  // namespace arl
