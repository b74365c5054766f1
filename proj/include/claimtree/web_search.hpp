#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "claimtree/evidence.hpp"

namespace claimtree {

// A search result normalized across providers.
struct WebHit {
  std::string title;
  std::string snippet;
  std::string uri;
  std::string domain;
};

class SearchTransport {
 public:
  virtual ~SearchTransport() = default;
  // Throws kTransport / kTimeout on failure; zero hits is not an error.
  virtual std::vector<WebHit> search(const std::string& query, size_t max_results) = 0;
};

// GET <base_url>?q=<query>&count=<n> with an optional bearer key read from the
// named environment variable. The response must carry a "results" (or "items")
// array; each item's title / snippet|content|description / uri|url|link /
// domain fields are normalized into a WebHit.
class HttpSearchTransport : public SearchTransport {
 public:
  HttpSearchTransport(std::string base_url, std::string api_key_env, double timeout_seconds = 30);

  std::vector<WebHit> search(const std::string& query, size_t max_results) override;

 private:
  std::string base_;
  std::string path_;
  std::string api_key_env_;
  double timeout_seconds_;
};

// Parses a provider payload into hits; exposed for tests.
std::vector<WebHit> parse_search_payload(const json& payload);

// Host part of a URI, lowercased, without "www.".
std::string uri_domain(std::string_view uri);

// Domain -> tier mapping with suffix matching on label boundaries, so
// "nih.gov" also covers "ncbi.nlm.nih.gov". Unmapped domains are kUnknown.
class DomainTierMap {
 public:
  DomainTierMap() = default;
  static DomainTierMap from_json(const json& doc);
  static DomainTierMap load(const std::filesystem::path& path);

  void set(std::string domain, SourceTier tier);
  SourceTier lookup(std::string_view domain) const;

 private:
  std::map<std::string, SourceTier, std::less<>> tiers_;
};

}  // namespace claimtree
