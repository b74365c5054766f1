#pragma once

#include <string>
#include <string_view>

namespace claimtree {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // always starts with '/'
};

// Throws kInvalidInput for anything that is not http(s)://host[...].
SplitUrl split_url(std::string_view url);

}  // namespace claimtree
