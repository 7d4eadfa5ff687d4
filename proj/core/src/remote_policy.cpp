#include <vector>

#include "http_json.hpp"
#include "thermoact/error.hpp"
#include "thermoact/policy.hpp"

namespace thermoact {

RemotePolicy::RemotePolicy(std::string endpoint, double timeout_s)
    : endpoint_(std::move(endpoint)), timeout_s_(timeout_s) {
  if (endpoint_.empty()) throw Error(ErrorCode::kConfig, "remote policy needs an endpoint");
  if (!(timeout_s_ > 0.0)) throw Error(ErrorCode::kConfig, "remote policy timeout must be positive");
}

Action RemotePolicy::act(const Observation& obs) {
  const nlohmann::json reply =
      detail::post_json(endpoint_, {{"observation", obs.to_json()}}, timeout_s_);
  const auto it = reply.find("action");
  if (it == reply.end() || !it->is_array()) {
    throw Error(ErrorCode::kFormat, "policy reply has no 'action' array");
  }
  std::vector<double> values;
  for (const auto& v : *it) {
    if (!v.is_number()) throw Error(ErrorCode::kFormat, "policy action holds a non-number");
    values.push_back(v.get<double>());
  }
  if (values.size() != Action::kSize) {
    throw Error(ErrorCode::kFormat, "policy action has " + std::to_string(values.size()) +
                                        " values, expected 8");
  }
  Action action = Action::from_values(values);
  action.validate(obs.scene().arm());
  return action;
}

}  // namespace thermoact
