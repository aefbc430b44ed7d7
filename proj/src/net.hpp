#pragma once

#include <string>

namespace scholar::net {

struct Url {
    std::string scheme;
    std::string host;
    int port = 80;
    std::string path = "/";  // includes any query string

    // scheme://host[:port]
    std::string origin() const { return scheme + "://" + host + ":" + std::to_string(port); }
};

// Throws scholar::Error for anything that is not http(s)://host[:port][/path].
Url parse_url(const std::string& url);

// Host without a leading "www.", lowercased; empty when unparseable.
std::string host_of(const std::string& url);

std::string url_encode(const std::string& s);

}  // namespace scholar::net
