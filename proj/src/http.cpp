#include <httplib.h>

#include "guides/error.hpp"
#include "guides/service.hpp"

namespace guides {

struct HttpFrontend::Impl {
    explicit Impl(Service& s) : service(s) {}
    Service& service;
    httplib::Server server;
};

namespace {

std::string token_of(const httplib::Request& r) {
    const auto auth = r.get_header_value("Authorization");
    const std::string bearer = "Bearer ";
    if (auth.rfind(bearer, 0) == 0) return auth.substr(bearer.size());
    return r.get_header_value("X-Guides-Token");
}

}  // namespace

HttpFrontend::HttpFrontend(Service& service) : impl_(std::make_unique<Impl>(service)) {
    auto handler = [this](const httplib::Request& hr, httplib::Response& res) {
        Request req;
        req.method = hr.method;
        req.path = hr.path;
        req.token = token_of(hr);
        req.body = hr.body;
        for (const auto& [k, v] : hr.params) req.params[k] = v;
        const Response out = impl_->service.handle(req);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json; charset=utf-8");
    };
    impl_->server.Get(".*", handler);
    impl_->server.Post(".*", handler);
}

HttpFrontend::~HttpFrontend() = default;

int HttpFrontend::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw ArgumentError("cannot bind " + host);
        return p;
    }
    if (!impl_->server.bind_to_port(host, port)) throw ArgumentError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpFrontend::listen() { impl_->server.listen_after_bind(); }

void HttpFrontend::stop() { impl_->server.stop(); }

}  // namespace guides
