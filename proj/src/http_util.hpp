#pragma once

#include <string>
#include <string_view>

#include "vhm/errors.hpp"

namespace vhm::detail {

struct UrlParts {
    std::string origin;  ///< scheme://host[:port]
    std::string path;    ///< begins with '/'
};

inline UrlParts split_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos)
        throw ConfigError("URL without scheme: " + std::string(url));
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        throw ConfigError("unsupported URL scheme: " + std::string(url));
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos) return {std::string(url), "/"};
    return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

/// Maps an HTTP status onto the error taxonomy. Returns normally only for 2xx.
inline void raise_for_status(int status, const std::string& body, std::string_view what) {
    if (status >= 200 && status < 300) return;
    const std::string msg = std::string(what) + ": HTTP " + std::to_string(status);
    if (status == 401 || status == 403) throw ConfigError(msg + " (authentication failed)");
    if (status == 408 || status == 429 || status >= 500) throw RetriableError(msg);
    throw ProtocolError(msg + ": " + body.substr(0, 512), status);
}

}  // namespace vhm::detail
