#pragma once

#include <charconv>
#include <string>
#include <string_view>

namespace roadwatch::detail {

/// "http://host:port/prefix" -> {"http://host:port", "/prefix"}.
struct UrlParts {
  std::string origin;
  std::string path;
};

inline UrlParts split_url(std::string_view url) {
  const auto scheme = url.find("://");
  const auto path_start = url.find('/', scheme == std::string_view::npos ? 0 : scheme + 3);
  if (path_start == std::string_view::npos) return {std::string(url), ""};
  std::string path(url.substr(path_start));
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {std::string(url.substr(0, path_start)), path};
}

/// Shortest round-trip decimal text.
inline std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace roadwatch::detail
