#pragma once

#include <string>

namespace vra::gateway::detail {

struct HttpResult {
    int status = 0;
    std::string body;
};

// POSTs a JSON body to an http:// or https:// URL. Throws Timeout when the
// peer stays silent past timeout_s and TransportError for anything else
// that prevents a status line from arriving.
HttpResult post_json(const std::string& url, const std::string& body, const std::string& bearer_token,
                     double timeout_s);

}  // namespace vra::gateway::detail
