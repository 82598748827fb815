#pragma once

#include <memory>
#include <string>

#include "bayescloud/error.hpp"
#include "bayescloud/registry.hpp"

namespace bayescloud {

/// HTTP status for an error code: 404 not found, 422 impossible evidence,
/// 409 cyclic union, 400 otherwise.
int http_status(ErrorCode code) noexcept;

/// JSON-over-HTTP front end of a Registry.
class HttpService {
public:
    explicit HttpService(registry::Registry& registry);
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds to `host:port`; port 0 picks a free port. Returns the bound port, or -1 on failure.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind.
    bool run();
    void stop();
    /// Blocks until the server accepts connections.
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace bayescloud
