#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace thermoact::detail {

/// POSTs `body` as JSON to an http:// URL and parses the JSON reply.
/// Throws kConfig for a bad URL, kTimeout when the deadline passes,
/// kNetwork for transport or HTTP status failures and kFormat for a reply
/// that is not JSON.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body, double timeout_s,
                         const std::vector<std::pair<std::string, std::string>>& headers = {});

}  // namespace thermoact::detail
