#include "cspeech/survey_http.hpp"

#include <cstdlib>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

namespace cspeech::survey {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

json parse_body(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw SurveyError(400, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error&) {
    throw SurveyError(400, "request body is not valid JSON");
  }
}

// Wraps a handler so service errors become JSON error responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const SurveyError& e) {
      send_error(res, e.status(), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, std::string("malformed request: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

json questions_json(Condition c) {
  json out = json::array();
  for (const auto& q : questions(c)) out.push_back({{"key", q.key}, {"statement", q.statement}});
  return out;
}

json demographics_json() {
  json out = json::array();
  for (const auto& f : demographic_fields()) {
    out.push_back({{"key", f.key}, {"prompt", f.prompt}, {"options", f.options}, {"numeric", f.options.empty()}});
  }
  return out;
}

json session_json(const Session& s) {
  return {{"session_id", s.id},
          {"condition", to_string(s.condition)},
          {"status", to_string(s.status)},
          {"total_items", s.slots.size()},
          {"rated", s.rated_count()}};
}

}  // namespace

std::string admin_token_from_env(const char* var) {
  const char* v = std::getenv(var);
  return v == nullptr ? std::string() : std::string(v);
}

SurveyHttpServer::SurveyHttpServer(SurveyService& service, std::string admin_token)
    : service_(service), admin_token_(std::move(admin_token)), server_(std::make_unique<httplib::Server>()) {
  routes();
}

SurveyHttpServer::~SurveyHttpServer() { stop(); }

void SurveyHttpServer::routes() {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Get("/questionnaire", guarded([](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200,
                      {{"questions",
                        {{std::string(to_string(Condition::NonContextual)), questions_json(Condition::NonContextual)},
                         {std::string(to_string(Condition::Contextual)), questions_json(Condition::Contextual)}}},
                       {"scale", {{"min", 1}, {"max", 5}}},
                       {"demographics", demographics_json()}});
          }));

  srv.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             const auto participant = body.value("participant_id", std::string());
             const bool consent = body.value("consent", false);
             const auto before = service_.sessions().size();
             const Session s = service_.create_session(participant, consent);
             send_json(res, service_.sessions().size() > before ? 201 : 200, session_json(s));
           }));

  srv.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, session_json(service_.session(req.matches[1])));
          }));

  srv.Get(R"(/sessions/([^/]+)/next)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const NextItem next = service_.next_item(id);
            const Session s = service_.session(id);
            json out{{"done", next.done}, {"position", next.position}, {"total", next.total}};
            if (next.done) {
              out["demographics"] = s.status == SessionStatus::Complete ? json(nullptr) : demographics_json();
              if (s.status == SessionStatus::Complete) out["completion_code"] = s.completion_code;
            } else {
              const auto& it = *next.item;
              json item{{"item_id", it.item_id}, {"toxic", it.toxic}, {"counterspeech", it.counterspeech}};
              if (s.condition == Condition::Contextual && !next.control) {
                item["context"] = {{"community", it.context.community},
                                   {"previous_message", it.context.previous_message},
                                   {"user_summary", it.context.user_summary}};
              }
              out["item"] = item;
              out["questions"] = questions_json(s.condition);
            }
            send_json(res, 200, out);
          }));

  srv.Post(R"(/sessions/([^/]+)/ratings)", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             const json body = parse_body(req);
             if (!body.contains("item_id") || !body["item_id"].is_string()) throw SurveyError(400, "item_id is required");
             if (!body.contains("answers") || !body["answers"].is_object()) throw SurveyError(400, "answers must be an object");
             std::map<std::string, int> answers;
             for (const auto& [key, value] : body["answers"].items()) {
               if (!value.is_number_integer()) throw SurveyError(400, "answer for '" + key + "' must be an integer");
               answers[key] = value.get<int>();
             }
             service_.record_rating(id, body["item_id"].get<std::string>(), answers);
             const Session s = service_.session(id);
             send_json(res, 201, {{"accepted", true}, {"remaining", s.slots.size() - s.rated_count()}});
           }));

  srv.Post(R"(/sessions/([^/]+)/demographics)", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             std::map<std::string, std::string> answers;
             for (const auto& [key, value] : body.items()) {
               if (value.is_string()) {
                 answers[key] = value.get<std::string>();
               } else if (value.is_number_integer()) {
                 answers[key] = std::to_string(value.get<long long>());
               } else {
                 throw SurveyError(400, "demographic '" + key + "' must be a string");
               }
             }
             const auto code = service_.submit_demographics(req.matches[1], answers);
             send_json(res, 200, {{"completion_code", code}});
           }));

  srv.Get("/export", guarded([this](const httplib::Request& req, httplib::Response& res) {
            if (admin_token_.empty()) throw SurveyError(403, "export is disabled");
            std::string presented = req.get_param_value("token");
            const auto auth = req.get_header_value("Authorization");
            if (starts_with(auth, "Bearer ")) presented = auth.substr(7);
            if (presented != admin_token_) throw SurveyError(401, "admin token required");
            ExportFilter filter;
            if (req.has_param("field")) filter.field = req.get_param_value("field");
            if (req.has_param("value")) filter.value = req.get_param_value("value");
            const auto data = service_.export_ratings(filter);
            const std::string table = req.has_param("table") ? req.get_param_value("table") : "ratings";
            std::ostringstream out;
            if (table == "ratings") {
              ratings::write_ratings_csv(out, data.ratings);
            } else if (table == "demographics") {
              const auto keys = demographic_keys();
              ratings::write_demographics_csv(out, data.demographics, keys);
            } else if (table == "verdicts") {
              write_csv_row(out, {"session", "pass", "reasons"});
              for (const auto& v : data.verdicts) {
                std::vector<std::string> reasons;
                for (auto r : v.reasons) reasons.emplace_back(to_string(r));
                write_csv_row(out, {v.session, v.pass ? "true" : "false", join(reasons, ";")});
              }
            } else {
              throw SurveyError(400, "unknown export table '" + table + "'");
            }
            res.status = 200;
            res.set_content(out.str(), "text/csv");
          }));
}

int SurveyHttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else if (server_->bind_to_port(host, port)) {
    port_ = port;
  } else {
    port_ = -1;
  }
  if (port_ < 0) throw SurveyError(500, "cannot bind " + host + ":" + std::to_string(port));
  return port_;
}

void SurveyHttpServer::listen() {
  if (port_ < 0) throw SurveyError(500, "server is not bound");
  server_->listen_after_bind();
}

void SurveyHttpServer::start() {
  if (port_ < 0) throw SurveyError(500, "server is not bound");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void SurveyHttpServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace cspeech::survey
