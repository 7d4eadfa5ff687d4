#include "http_json.hpp"

#include <chrono>
#include <cmath>

#include <httplib.h>

#include "thermoact/error.hpp"

namespace thermoact::detail {
namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  if (url.rfind("http://", 0) != 0) {
    throw Error(ErrorCode::kConfig, "endpoint must be an http:// URL, got '" + url + "'");
  }
  const std::size_t slash = url.find('/', 7);
  if (slash == 7) throw Error(ErrorCode::kConfig, "endpoint has no host: '" + url + "'");
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

nlohmann::json post_json(const std::string& url, const nlohmann::json& body, double timeout_s,
                         const std::vector<std::pair<std::string, std::string>>& headers) {
  if (!(timeout_s > 0.0)) throw Error(ErrorCode::kConfig, "timeout must be positive");
  const Url u = split_url(url);
  httplib::Client client(u.origin);
  const auto timeout = std::chrono::microseconds(static_cast<long long>(std::ceil(timeout_s * 1e6)));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);

  const auto start = std::chrono::steady_clock::now();
  auto result = client.Post(u.path, h, body.dump(), "application/json");
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!result) {
    const auto err = result.error();
    if (err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read && elapsed >= 0.9 * timeout_s)) {
      throw Error(ErrorCode::kTimeout, "no reply from " + url + " within " +
                                           std::to_string(timeout_s) + " s");
    }
    throw Error(ErrorCode::kNetwork, "request to " + url + " failed: " + httplib::to_string(err));
  }
  if (result->status < 200 || result->status >= 300) {
    throw Error(ErrorCode::kNetwork, url + " answered HTTP " + std::to_string(result->status));
  }
  try {
    return nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kFormat, "reply from " + url + " is not JSON: " + e.what());
  }
}

}  // namespace thermoact::detail
