#include "net.hpp"

#include <cctype>
#include <cstdio>

#include "scholar/text.hpp"

namespace scholar::net {

Url parse_url(const std::string& url) {
    Url u;
    const auto sep = url.find("://");
    if (sep == std::string::npos) throw Error("not an absolute URL: " + url);
    u.scheme = text::to_lower(url.substr(0, sep));
    if (u.scheme != "http" && u.scheme != "https") throw Error("unsupported URL scheme: " + url);
    u.port = u.scheme == "https" ? 443 : 80;
    const auto rest = url.substr(sep + 3);
    const auto slash = rest.find_first_of("/?");
    auto authority = rest.substr(0, slash);
    if (slash != std::string::npos) {
        u.path = rest.substr(slash);
        if (u.path.front() == '?') u.path = "/" + u.path;
    }
    const auto colon = authority.rfind(':');
    if (colon != std::string::npos) {
        try {
            u.port = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception&) {
            throw Error("bad port in URL: " + url);
        }
        authority.resize(colon);
    }
    if (authority.empty()) throw Error("missing host in URL: " + url);
    u.host = authority;
    return u;
}

std::string host_of(const std::string& url) {
    try {
        auto host = text::to_lower(parse_url(url).host);
        if (host.rfind("www.", 0) == 0) host.erase(0, 4);
        return host;
    } catch (const Error&) {
        return {};
    }
}

std::string url_encode(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            char buf[4];
            std::snprintf(buf, sizeof buf, "%%%02X", c);
            out += buf;
        }
    }
    return out;
}

}  // namespace scholar::net
