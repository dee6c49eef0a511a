// OpenAI-compatible chat server backed by the scripted model. Prints the
// bound port on stdout, then serves until killed.
#include "scripted_model.hpp"

#include <httplib.h>

#include <CLI11.hpp>

#include <iostream>

using agentdistill::json;

int main(int argc, char** argv) {
  CLI::App app{"scripted chat backend"};
  int port = 0;
  app.add_option("--port", port, "port to bind (0 picks a free one)");
  CLI11_PARSE(app, argc, argv);

  httplib::Server server;
  server.Post(R"(.*/chat/completions)", [](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    agentdistill::llm::ChatRequest request;
    request.model_id = body.at("model").get<std::string>();
    for (const auto& m : body.at("messages")) {
      const auto& c = m.at("content");
      std::string text = c.is_string() ? c.get<std::string>() : c.at(0).at("text").get<std::string>();
      const std::string role = m.at("role").get<std::string>();
      request.messages.push_back({role == "system"      ? agentdistill::llm::Role::system
                                  : role == "assistant" ? agentdistill::llm::Role::assistant
                                                        : agentdistill::llm::Role::user,
                                  text, std::nullopt});
    }
    const auto reply = scripted::reply(request);
    const json out = {{"id", "scripted"},
                      {"object", "chat.completion"},
                      {"model", request.model_id},
                      {"choices",
                       {{{"index", 0},
                         {"message", {{"role", "assistant"}, {"content", reply.content}}},
                         {"finish_reason", "stop"}}}}};
    res.set_content(out.dump(), "application/json");
  });
  const int bound = port == 0 ? server.bind_to_any_port("127.0.0.1") : (server.bind_to_port("127.0.0.1", port) ? port : -1);
  if (bound <= 0) {
    std::cerr << "error: cannot bind port\n";
    return 2;
  }
  std::cout << bound << std::endl;
  server.listen_after_bind();
  return 0;
}
