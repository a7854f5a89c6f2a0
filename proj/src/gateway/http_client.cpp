#include <httplib.h>

#include "http_client.hpp"

#include "vra/gateway/types.hpp"

#include <fmt/format.h>

#include <chrono>

namespace vra::gateway::detail {

namespace {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url)
{
    auto const scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw TransportError(fmt::format("'{}' is not an absolute URL", url));
    auto const scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        throw TransportError(fmt::format("unsupported URL scheme '{}'", scheme));
    auto const path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResult post_json(const std::string& url, const std::string& body, const std::string& bearer_token,
                     double timeout_s)
{
    auto const [origin, path] = split_url(url);
    httplib::Client client(origin);
    if (!client.is_valid())
        throw TransportError(fmt::format("cannot build a client for '{}'", origin));

    auto const timeout = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(timeout_s));
    auto const secs = static_cast<time_t>(timeout.count() / 1'000'000);
    auto const usecs = static_cast<time_t>(timeout.count() % 1'000'000);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    if (!bearer_token.empty())
        client.set_bearer_token_auth(bearer_token);

    auto const start = std::chrono::steady_clock::now();
    auto res = client.Post(path, body, "application/json");
    if (!res)
    {
        auto const err = res.error();
        auto const elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= timeout_s))
            throw Timeout(fmt::format("{} gave no reply within {:.3g} s", url, timeout_s));
        throw TransportError(fmt::format("{}: {}", url, httplib::to_string(err)));
    }
    return {res->status, res->body};
}

}  // namespace vra::gateway::detail
