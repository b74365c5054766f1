#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>

#include "claimtree/error.hpp"
#include "claimtree/text.hpp"
#include "claimtree/url.hpp"
#include "claimtree/util.hpp"
#include "claimtree/web_search.hpp"

namespace claimtree {
namespace {

std::string first_string(const json& item, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (item.contains(key) && item[key].is_string()) return item[key].get<std::string>();
  }
  return {};
}

}  // namespace

std::string uri_domain(std::string_view uri) {
  size_t start = uri.find("://");
  start = start == std::string_view::npos ? 0 : start + 3;
  size_t end = uri.find_first_of("/:?#", start);
  std::string host = text::to_lower(uri.substr(start, end == std::string_view::npos ? end : end - start));
  if (host.rfind("www.", 0) == 0) host.erase(0, 4);
  return host;
}

std::vector<WebHit> parse_search_payload(const json& payload) {
  const json* results = nullptr;
  if (payload.is_array()) {
    results = &payload;
  } else if (payload.is_object()) {
    for (const char* key : {"results", "items"}) {
      if (payload.contains(key) && payload[key].is_array()) {
        results = &payload[key];
        break;
      }
    }
  }
  if (!results) throw Error(ErrorKind::kTransport, "search response has no results array");
  std::vector<WebHit> hits;
  for (const auto& item : *results) {
    if (!item.is_object()) continue;
    WebHit hit;
    hit.title = first_string(item, {"title", "name"});
    hit.snippet = first_string(item, {"snippet", "content", "description"});
    hit.uri = first_string(item, {"uri", "url", "link"});
    hit.domain = text::to_lower(first_string(item, {"domain"}));
    if (hit.domain.empty()) hit.domain = uri_domain(hit.uri);
    hits.push_back(std::move(hit));
  }
  return hits;
}

HttpSearchTransport::HttpSearchTransport(std::string base_url, std::string api_key_env,
                                         double timeout_seconds)
    : api_key_env_(std::move(api_key_env)), timeout_seconds_(timeout_seconds) {
  auto url = split_url(base_url);
  base_ = url.base;
  path_ = url.path;
  if (!(timeout_seconds_ > 0)) throw Error(ErrorKind::kInvalidInput, "timeout must be positive");
}

std::vector<WebHit> HttpSearchTransport::search(const std::string& query, size_t max_results) {
  httplib::Client client(base_);
  auto seconds = static_cast<time_t>(timeout_seconds_);
  client.set_connection_timeout(seconds, 0);
  client.set_read_timeout(seconds, 0);
  httplib::Headers headers;
  if (!api_key_env_.empty()) {
    const char* key = std::getenv(api_key_env_.c_str());
    if (!key || !*key) {
      throw Error(ErrorKind::kTransport, "environment variable " + api_key_env_ + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  httplib::Params params{{"q", query}, {"count", std::to_string(max_results)}};
  auto result = client.Get(path_, params, headers);
  if (!result) {
    throw Error(ErrorKind::kTransport, "web search failed: " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw Error(ErrorKind::kTransport, "web search HTTP " + std::to_string(result->status));
  }
  try {
    return parse_search_payload(json::parse(result->body));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kTransport, std::string("web search payload is not JSON: ") + e.what());
  }
}

DomainTierMap DomainTierMap::from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "domain tier map must be a JSON object");
  DomainTierMap map;
  for (const auto& [domain, tier] : doc.items()) map.set(domain, source_tier_from_json(tier));
  return map;
}

DomainTierMap DomainTierMap::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

void DomainTierMap::set(std::string domain, SourceTier tier) {
  tiers_[text::to_lower(domain)] = tier;
}

SourceTier DomainTierMap::lookup(std::string_view domain) const {
  std::string host = text::to_lower(domain);
  while (!host.empty()) {
    auto it = tiers_.find(host);
    if (it != tiers_.end()) return it->second;
    size_t dot = host.find('.');
    if (dot == std::string::npos) break;
    host.erase(0, dot + 1);
  }
  return SourceTier::kUnknown;
}

}  // namespace claimtree
