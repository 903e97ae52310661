#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <thread>

#include "ihsc/node.hpp"

namespace httplib {
class Server;
}

namespace ihsc::api {

std::string base64_encode(const Bytes& data);
Bytes base64_decode(std::string_view text);

nlohmann::json receipt_to_json(const node::CreationReceipt& receipt);

/// HTTP JSON front end over a Node. Handlers serialize on one engine mutex;
/// the tick driver shares it.
class ApiServer {
public:
    explicit ApiServer(node::Node& node);
    ~ApiServer();

    /// Blocks serving requests until stop().
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port and serves from a background thread.
    int start_async(const std::string& host);
    void stop();

    /// Wall-clock tick driver: advances the node's virtual clock by
    /// elapsed * tick_scale every poll.
    void start_ticking(double tick_scale);

private:
    void wire_routes();

    node::Node& node_;
    std::mutex mutex_;
    std::unique_ptr<httplib::Server> server_;
    std::thread serve_thread_;
    std::thread tick_thread_;
    std::atomic<bool> ticking_{false};
};

}  // namespace ihsc::api
