#include "claimtree/url.hpp"

#include "claimtree/error.hpp"

namespace claimtree {

SplitUrl split_url(std::string_view url) {
  size_t scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorKind::kInvalidInput, "URL without scheme: " + std::string(url));
  }
  std::string_view scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorKind::kInvalidInput, "unsupported URL scheme: " + std::string(url));
  }
  size_t host_start = scheme_end + 3;
  size_t path_start = url.find('/', host_start);
  if (path_start == host_start) {
    throw Error(ErrorKind::kInvalidInput, "URL without host: " + std::string(url));
  }
  SplitUrl out;
  if (path_start == std::string_view::npos) {
    out.base = std::string(url);
    out.path = "/";
  } else {
    out.base = std::string(url.substr(0, path_start));
    out.path = std::string(url.substr(path_start));
  }
  if (out.base.size() == host_start) {
    throw Error(ErrorKind::kInvalidInput, "URL without host: " + std::string(url));
  }
  return out;
}

}  // namespace claimtree
