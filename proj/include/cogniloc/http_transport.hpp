#pragma once

#include <stdexcept>
#include <string>

#include <httplib.h>

#include "cogniloc/remote_backend.hpp"

namespace cogniloc {

namespace detail {

struct ParsedUrl {
    std::string host_and_port;  // scheme://host:port
    std::string path;
};

inline ParsedUrl split_url(const std::string& url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw std::invalid_argument("endpoint must include a scheme: " + url);
    }
    const std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace detail

/// Socket-backed transport for RemoteBackend, built on cpp-httplib.
inline HttpTransport httplib_transport() {
    return [](const std::string& url, const std::string& body, int timeout_seconds) -> HttpReply {
        const auto parsed = detail::split_url(url);
        httplib::Client client(parsed.host_and_port);
        client.set_connection_timeout(timeout_seconds, 0);
        client.set_read_timeout(timeout_seconds, 0);
        client.set_write_timeout(timeout_seconds, 0);
        auto result = client.Post(parsed.path, body, "application/json");
        if (!result) {
            throw std::runtime_error("http error: " + httplib::to_string(result.error()));
        }
        return {result->status, result->body};
    };
}

}  // namespace cogniloc
