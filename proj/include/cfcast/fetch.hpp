#pragma once

// Optional remote fetch of public electricity-price series, converted to the
// panel CSV schema. Never required by any test or command that evaluates
// models; offline fixtures ship with the repository. Plain http only, which
// covers the mocked round-trip tests; the real provider also serves http.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "cfcast/error.hpp"
#include "cfcast/io.hpp"

namespace cfcast {

struct SeriesSpec {
  std::string data_pointer = "/response/data";  // JSON pointer to the rows
  std::string unit_field = "stateid";
  std::string period_field = "period";
  std::string value_field = "price";
};

namespace detail {

// scheme://host[:port]/path?query -> (host, port, path_with_query)
inline std::tuple<std::string, int, std::string> split_url(
    const std::string& url) {
  const std::string http = "http://";
  if (url.rfind(http, 0) != 0)
    fail(errc::http_error, "only http:// endpoints are supported: " + url);
  const std::string rest = url.substr(http.size());
  const auto slash = rest.find('/');
  std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
  std::string path = slash == std::string::npos ? "/" : rest.substr(slash);
  int port = 80;
  if (const auto colon = hostport.find(':'); colon != std::string::npos) {
    port = std::stoi(hostport.substr(colon + 1));
    hostport = hostport.substr(0, colon);
  }
  return {hostport, port, path};
}

}  // namespace detail

/// Fetches the provider's JSON response and writes it as a panel CSV.
/// Returns the number of data rows written.
inline int fetch_public_prices(const std::string& endpoint_url,
                               const std::string& api_key_env,
                               const SeriesSpec& spec,
                               const std::string& out_csv) {
  const char* key = std::getenv(api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    fail(errc::auth_error,
         "environment variable " + api_key_env + " is not set");

  auto [host, port, path] = detail::split_url(endpoint_url);
  path += (path.find('?') == std::string::npos ? "?" : "&");
  path += "api_key=" + std::string(key);

  httplib::Client client(host, port);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);
  auto res = client.Get(path.c_str());
  if (!res)
    fail(errc::http_error, "no response from " + host + ":" +
                               std::to_string(port));
  if (res->status == 401 || res->status == 403)
    fail(errc::auth_error, "endpoint rejected the key from " + api_key_env +
                               " (status " + std::to_string(res->status) + ")");
  if (res->status != 200)
    fail(errc::http_error, "status " + std::to_string(res->status));

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    fail(errc::schema_drift, "response is not JSON at byte " +
                                 std::to_string(e.byte) + ": " + e.what());
  }

  nlohmann::json rows;
  try {
    rows = body.at(nlohmann::json::json_pointer(spec.data_pointer));
  } catch (const nlohmann::json::exception&) {
    fail(errc::schema_drift, "no array at JSON pointer " + spec.data_pointer);
  }
  if (!rows.is_array())
    fail(errc::schema_drift, spec.data_pointer + " is not an array");

  std::vector<std::tuple<std::string, std::string, double>> records;
  for (const auto& row : rows) {
    if (!row.contains(spec.unit_field) || !row.contains(spec.period_field) ||
        !row.contains(spec.value_field))
      fail(errc::schema_drift, "row lacks one of " + spec.unit_field + "/" +
                                   spec.period_field + "/" + spec.value_field);
    const auto as_string = [](const nlohmann::json& v) {
      return v.is_string() ? v.get<std::string>() : v.dump();
    };
    const auto& raw = row.at(spec.value_field);
    double value = 0.0;
    if (raw.is_number()) {
      value = raw.get<double>();
    } else if (!detail::parse_double(as_string(raw), value)) {
      fail(errc::schema_drift, "value '" + as_string(raw) + "' is not numeric");
    }
    records.emplace_back(as_string(row.at(spec.unit_field)),
                         as_string(row.at(spec.period_field)), value);
  }
  std::sort(records.begin(), records.end());

  std::ofstream out(out_csv, std::ios::binary);
  out << "unit_id,period,value\n";
  for (const auto& [unit, period, value] : records)
    out << unit << ',' << period << ',' << detail::format_double(value)
        << '\n';
  return static_cast<int>(records.size());
}

}  // namespace cfcast
