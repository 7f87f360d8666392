#pragma once

#include <memory>
#include <string>
#include <thread>

#include "cspeech/survey.hpp"

namespace httplib {
class Server;
}

namespace cspeech::survey {

// Reads the export token from the environment. Empty when unset, which
// disables the export endpoint.
std::string admin_token_from_env(const char* var = "CSPEECH_ADMIN_TOKEN");

// JSON over HTTP for the questionnaire front end.
//
//   POST /sessions                  {participant_id, consent}
//   GET  /sessions/{id}/next
//   POST /sessions/{id}/ratings     {item_id, answers: {question: 1..5}}
//   POST /sessions/{id}/demographics {field: value}
//   GET  /questionnaire
//   GET  /export?table=ratings|demographics|verdicts[&field=..&value=..]
//        (Authorization: Bearer <token>)
class SurveyHttpServer {
 public:
  SurveyHttpServer(SurveyService& service, std::string admin_token);
  ~SurveyHttpServer();
  SurveyHttpServer(const SurveyHttpServer&) = delete;
  SurveyHttpServer& operator=(const SurveyHttpServer&) = delete;

  // port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void start();   // listen on a background thread
  void stop();
  int port() const { return port_; }

 private:
  void routes();

  SurveyService& service_;
  std::string admin_token_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace cspeech::survey
