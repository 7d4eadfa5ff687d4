#include "http_json.hpp"
#include "thermoact/error.hpp"
#include "thermoact/planner.hpp"

namespace thermoact {
namespace {

// Accepts chat-completion replies as well as a bare {"text": ...}.
std::string reply_text(const nlohmann::json& reply) {
  if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
    const auto& choice = reply["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
      return choice["message"]["content"].get<std::string>();
    }
    if (choice.contains("text") && choice["text"].is_string()) return choice["text"].get<std::string>();
  }
  if (reply.contains("text") && reply["text"].is_string()) return reply["text"].get<std::string>();
  return reply.dump();
}

}  // namespace

Plan remote_plan(const PlannerRequest& request, const std::string& endpoint, double timeout_s,
                 const std::string& api_key) {
  nlohmann::json body = request.to_json();
  std::vector<std::pair<std::string, std::string>> headers;
  if (!api_key.empty()) headers.emplace_back("Authorization", "Bearer " + api_key);

  std::string text = reply_text(detail::post_json(endpoint, body, timeout_s, headers));
  try {
    return parse_plan_document(text);
  } catch (const ParseError& first) {
    body["messages"].push_back({{"role", "assistant"}, {"content", text}});
    body["messages"].push_back(
        {{"role", "user"},
         {"content", std::string("Your reply could not be parsed (") + first.message() +
                         "). Answer again using exactly the ANALYSIS:/PLAN: layout and the "
                         "listed command forms."}});
    body["retry"] = 1;
  }
  text = reply_text(detail::post_json(endpoint, body, timeout_s, headers));
  try {
    return parse_plan_document(text);
  } catch (const ParseError& e) {
    throw PlannerOutputError(std::string("planner reply unparsable after retry: ") + e.message(), text);
  }
}

}  // namespace thermoact
