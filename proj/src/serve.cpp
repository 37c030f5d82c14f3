#include "pqscreen/serve.hpp"

#include <httplib.h>

#include <cmath>
#include <set>

namespace pqscreen {

using nlohmann::json;

namespace {

json error_entry(const std::string& field, const std::string& message) {
  return {{"field", field}, {"message", message}};
}

HttpReply errors_reply(int status, const json& errors) {
  return {status, json{{"errors", errors}}.dump()};
}

}  // namespace

ScoringService::ScoringService(ModelArtifact artifact) : artifact_(std::move(artifact)) {
  artifact_.validate();
  json items = json::array();
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    items.push_back({{"name", feature_names()[i]}, {"title", feature_titles()[i]}});
  }
  json info = {{"schema_version", kResponseSchemaVersion},
               {"model_id", artifact_.model_id},
               {"model_type", model_kind_name(artifact_.kind())},
               {"feature_names", artifact_.feature_names},
               {"items", items},
               {"decision_threshold", decision_threshold(artifact_.kind())},
               {"toolkit_version", kVersion}};
  const json full = artifact_to_json(artifact_);
  info["selector"] = full.at("selector");
  info["training"] = full.at("training");
  if (const auto* m = std::get_if<LogisticModel>(&artifact_.model)) {
    info["intercept"] = m->intercept;
    json coefficients = json::object();
    if (const auto* mask = std::get_if<FeatureMask>(&artifact_.selector)) {
      for (std::size_t k = 0; k < mask->selected.size(); ++k) {
        coefficients[artifact_.feature_names[mask->selected[k]]] = m->coefficients(static_cast<Eigen::Index>(k));
      }
    }
    info["coefficients"] = coefficients;
  }
  model_body_ = info.dump();
  health_body_ = json{{"status", "ok"}, {"model_id", artifact_.model_id}, {"toolkit_version", kVersion}}.dump();
}

HttpReply ScoringService::model_info() const { return {200, model_body_}; }

HttpReply ScoringService::health() const { return {200, health_body_}; }

HttpReply ScoringService::score(const std::string& body) const {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::exception& e) {
    return errors_reply(400, json::array({error_entry("", std::string("body is not valid JSON: ") + e.what())}));
  }
  if (!request.is_object()) return errors_reply(400, json::array({error_entry("", "body must be a JSON object")}));

  json errors = json::array();
  std::array<double, kFeatureCount> values{};
  static const std::set<std::string> kTopLevel = {"features", "age", "gender"};
  for (const auto& [key, value] : request.items()) {
    if (!kTopLevel.count(key)) errors.push_back(error_entry(key, "unknown field"));
  }

  const auto names = feature_names();
  if (!request.contains("features")) {
    errors.push_back(error_entry("features", "missing"));
  } else if (!request["features"].is_object()) {
    errors.push_back(error_entry("features", "must be an object of item severities"));
  } else {
    const auto& features = request["features"];
    for (const auto& [key, value] : features.items()) {
      const auto idx = feature_index(key);
      if (!idx || *idx >= kPqItemCount) errors.push_back(error_entry("features." + key, "unknown item"));
    }
    for (std::size_t i = 0; i < kPqItemCount; ++i) {
      const std::string name(names[i]);
      const std::string field = "features." + name;
      if (!features.contains(name)) {
        errors.push_back(error_entry(field, "missing"));
        continue;
      }
      const auto& v = features[name];
      if (!v.is_number() || v.is_boolean()) {
        errors.push_back(error_entry(field, "must be an integer 0-4"));
        continue;
      }
      const double d = v.get<double>();
      if (d != std::floor(d)) {
        errors.push_back(error_entry(field, "must be an integer 0-4"));
      } else if (d < 0 || d > 4) {
        errors.push_back(error_entry(field, "out of range: " + v.dump() + " (allowed 0-4)"));
      } else {
        values[i] = d;
      }
    }
  }
  if (!request.contains("age")) {
    errors.push_back(error_entry("age", "missing"));
  } else if (!request["age"].is_number() || request["age"].is_boolean()) {
    errors.push_back(error_entry("age", "must be a number of years"));
  } else {
    const double age = request["age"].get<double>();
    if (!(age >= 0.0 && age <= 130.0)) errors.push_back(error_entry("age", "out of range (allowed 0-130)"));
    else values[kAgeIndex] = age;
  }
  if (!request.contains("gender")) {
    errors.push_back(error_entry("gender", "missing"));
  } else if (!request["gender"].is_number_integer() ||
             (request["gender"].get<std::int64_t>() != 0 && request["gender"].get<std::int64_t>() != 1)) {
    errors.push_back(error_entry("gender", "must be 0 or 1"));
  } else {
    values[kGenderIndex] = static_cast<double>(request["gender"].get<std::int64_t>());
  }
  if (!errors.empty()) return errors_reply(422, errors);

  const ArtifactScore s = score_artifact(artifact_, values);
  json contributions = json::array();
  for (const auto& c : s.contributions) {
    contributions.push_back({{"feature", c.feature}, {"value", c.value}, {"contribution", c.contribution}});
  }
  json response = {{"schema_version", kResponseSchemaVersion},
                   {"model_id", artifact_.model_id},
                   {"model_type", model_kind_name(artifact_.kind())},
                   {"probability", s.probability},
                   {"linear_score", s.linear_score},
                   {"predicted_label", s.predicted_label},
                   {"contributions", contributions}};
  response["intercept"] = s.intercept ? json(*s.intercept) : json(nullptr);
  return {200, response.dump()};
}

struct HttpServer::Impl {
  std::shared_ptr<const ScoringService> service;
  httplib::Server server;
  bool bound = false;
};

HttpServer::HttpServer(std::shared_ptr<const ScoringService> service) : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto& srv = impl_->server;
  const auto* svc = impl_->service.get();
  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  };
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Post("/v1/score", [svc, send](const httplib::Request& req, httplib::Response& res) {
    send(res, svc->score(req.body));
  });
  srv.Get("/v1/model", [svc, send](const httplib::Request&, httplib::Response& res) { send(res, svc->model_info()); });
  srv.Get("/v1/health", [svc, send](const httplib::Request&, httplib::Response& res) { send(res, svc->health()); });
  // SO_REUSEPORT (httplib's default) would let a second server share the port.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  srv.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(json{{"errors", json::array({error_entry("", "no such endpoint or method")})}}.dump(),
                      "application/json");
    }
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound_port = port;
  if (port == 0) {
    bound_port = impl_->server.bind_to_any_port(host);
    if (bound_port < 0) throw Error("io", "cannot bind any port on " + host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    throw Error("io", "port " + std::to_string(port) + " on " + host + " is unavailable");
  }
  impl_->bound = true;
  return bound_port;
}

void HttpServer::listen() {
  if (!impl_->bound) throw Error("internal", "listen() before bind()");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace pqscreen
