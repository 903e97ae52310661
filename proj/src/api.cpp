#include "ihsc/api.hpp"

#include <chrono>

#include <httplib.h>

#include "ihsc/store.hpp"

namespace ihsc::api {

namespace {

constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

nlohmann::json error_json(const std::string& message) {
    return nlohmann::json{{"error", message}};
}

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

std::string base64_encode(const Bytes& data) {
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < data.size(); i += 3) {
        std::uint32_t chunk = data[i] << 16;
        if (i + 1 < data.size()) chunk |= data[i + 1] << 8;
        if (i + 2 < data.size()) chunk |= data[i + 2];
        out.push_back(kB64Alphabet[(chunk >> 18) & 0x3f]);
        out.push_back(kB64Alphabet[(chunk >> 12) & 0x3f]);
        out.push_back(i + 1 < data.size() ? kB64Alphabet[(chunk >> 6) & 0x3f]
                                          : '=');
        out.push_back(i + 2 < data.size() ? kB64Alphabet[chunk & 0x3f] : '=');
    }
    return out;
}

Bytes base64_decode(std::string_view text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    Bytes out;
    std::uint32_t chunk = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = value_of(c);
        if (v < 0) throw std::invalid_argument("invalid base64 input");
        chunk = (chunk << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((chunk >> bits) & 0xff));
        }
    }
    return out;
}

nlohmann::json receipt_to_json(const node::CreationReceipt& receipt) {
    nlohmann::json j{{"record_id", receipt.record_id},
                     {"status", node::receipt_status_name(receipt.status)},
                     {"shard", receipt.shard_index},
                     {"awaiting_decision", receipt.awaiting_decision}};
    if (receipt.shard_height) j["shard_height"] = *receipt.shard_height;
    if (receipt.root_height) j["root_height"] = *receipt.root_height;
    if (!receipt.error.empty()) j["error"] = receipt.error;
    if (!receipt.violations.empty()) j["violations"] = receipt.violations;
    return j;
}

ApiServer::ApiServer(node::Node& node)
    : node_(node), server_(std::make_unique<httplib::Server>()) {
    wire_routes();
}

ApiServer::~ApiServer() {
    stop();
}

void ApiServer::wire_routes() {
    auto& svr = *server_;

    svr.Post("/participants", [this](const httplib::Request& req,
                                     httplib::Response& res) {
        auto j = nlohmann::json::parse(req.body, nullptr, false);
        if (j.is_discarded()) return reply(res, 400, error_json("bad json"));
        domain::ParticipantProfile profile;
        profile.participant_id = j.value("participant_id", std::string{});
        auto role = domain::role_from_name(j.value("role", std::string{}));
        if (!role) return reply(res, 400, error_json("unknown role"));
        profile.role = *role;
        for (const auto& [k, v] : j.value("info", nlohmann::json::object())
                                      .items()) {
            profile.info[k] = v.get<std::string>();
        }
        std::scoped_lock lock(mutex_);
        auto violations = node_.register_participant(profile);
        if (!violations.empty()) {
            auto body = error_json("invalid profile");
            body["violations"] = violations;
            return reply(res, 400, body);
        }
        reply(res, 200,
              {{"participant_id", profile.participant_id},
               {"role", domain::role_name(profile.role)},
               {"status", "registered"}});
    });

    svr.Post("/products", [this](const httplib::Request& req,
                                 httplib::Response& res) {
        std::string requested;
        if (!req.body.empty()) {
            auto j = nlohmann::json::parse(req.body, nullptr, false);
            if (j.is_discarded()) {
                return reply(res, 400, error_json("bad json"));
            }
            requested = j.value("product_id", std::string{});
        }
        std::scoped_lock lock(mutex_);
        reply(res, 200, {{"product_id", node_.create_product(requested)}});
    });

    svr.Post("/records", [this](const httplib::Request& req,
                                httplib::Response& res) {
        auto j = nlohmann::json::parse(req.body, nullptr, false);
        if (j.is_discarded()) return reply(res, 400, error_json("bad json"));
        node::RecordSubmission sub;
        std::uint32_t shard = j.value("shard", 1u);
        try {
            sub.record.product_id = j.value("product_id", std::string{});
            sub.record.lot_number = j.value("lot_number", std::string{});
            auto op = domain::operation_from_name(
                j.value("operation", std::string{}));
            if (!op) return reply(res, 400, error_json("unknown operation"));
            sub.record.operation = *op;
            for (const auto& [k, v] :
                 j.value("info", nlohmann::json::object()).items()) {
                sub.record.info[k] = v.get<std::string>();
            }
            for (const auto& s :
                 j.value("signers", nlohmann::json::array())) {
                sub.sign_as.push_back(s.get<std::string>());
            }
            for (const auto& s :
                 j.value("signatures", nlohmann::json::array())) {
                sub.record.signatures.push_back(
                    {s.at("signer").get<std::string>(),
                     Digest::from_hex(s.at("mac").get<std::string>())});
            }
            for (const auto& a :
                 j.value("attachments", nlohmann::json::array())) {
                sub.attachments.push_back(
                    {a.value("name", std::string{}),
                     base64_decode(a.at("content_b64").get<std::string>())});
            }
            if (j.contains("decision")) {
                const auto d = j.at("decision").get<std::string>();
                if (d == "approve") sub.decision = poa::Decision::Approve;
                else if (d == "reject") sub.decision = poa::Decision::Reject;
                else return reply(res, 400, error_json("unknown decision"));
            }
        } catch (const std::exception& e) {
            return reply(res, 400, error_json(e.what()));
        }
        try {
            std::scoped_lock lock(mutex_);
            auto receipt = node_.submit_record(std::move(sub), shard);
            reply(res, 200, receipt_to_json(receipt));
        } catch (const std::exception& e) {
            reply(res, 400, error_json(e.what()));
        }
    });

    svr.Post(R"(/records/([0-9a-f]+)/decision)",
             [this](const httplib::Request& req, httplib::Response& res) {
                 auto j = nlohmann::json::parse(req.body, nullptr, false);
                 if (j.is_discarded()) {
                     return reply(res, 400, error_json("bad json"));
                 }
                 const auto d = j.value("decision", std::string{});
                 if (d != "approve" && d != "reject") {
                     return reply(res, 400, error_json("unknown decision"));
                 }
                 try {
                     std::scoped_lock lock(mutex_);
                     auto receipt = node_.decide(req.matches[1],
                                                 d == "approve"
                                                     ? poa::Decision::Approve
                                                     : poa::Decision::Reject);
                     reply(res, 200, receipt_to_json(receipt));
                 } catch (const node::NodeError& e) {
                     reply(res, 404, error_json(e.what()));
                 }
             });

    svr.Get(R"(/records/([0-9a-f]+))", [this](const httplib::Request& req,
                                              httplib::Response& res) {
        std::scoped_lock lock(mutex_);
        const auto* receipt = node_.receipt(req.matches[1]);
        if (!receipt) return reply(res, 404, error_json("unknown record"));
        reply(res, 200, receipt_to_json(*receipt));
    });

    svr.Get(R"(/products/([^/]+)/history)", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
        try {
            std::scoped_lock lock(mutex_);
            auto records = node_.retrieve_records(req.matches[1]);
            nlohmann::json out{{"product_id", std::string(req.matches[1])},
                               {"records", nlohmann::json::array()}};
            for (const auto& item : records) {
                nlohmann::json r{{"record",
                                  domain::record_value(item.record)},
                                 {"files", nlohmann::json::array()}};
                for (const auto& [ref, bytes] : item.files) {
                    r["files"].push_back(
                        {{"uri", ref.uri},
                         {"file_digest", ref.file_digest.hex()},
                         {"size_bytes", ref.size_bytes},
                         {"content_b64", base64_encode(bytes)}});
                }
                out["records"].push_back(std::move(r));
            }
            reply(res, 200, out);
        } catch (const store::StoreError& e) {
            reply(res, 500, error_json(e.what()));
        }
    });

    svr.Get("/ledger/status", [this](const httplib::Request&,
                                     httplib::Response& res) {
        std::scoped_lock lock(mutex_);
        const auto& ledger = node_.ledger();
        nlohmann::json shard_heights = nlohmann::json::array();
        nlohmann::json pending = nlohmann::json::array();
        nlohmann::json covered = nlohmann::json::array();
        for (std::uint32_t s = 1; s <= ledger.shard_count(); ++s) {
            shard_heights.push_back(ledger.shard_height(s));
            pending.push_back(node_.pending_records(s));
            covered.push_back(ledger.covered_height(s));
        }
        reply(res, 200,
              {{"root_height", ledger.root_height()},
               {"shard_heights", shard_heights},
               {"covered_heights", covered},
               {"pending_records", pending},
               {"pending_headers", node_.pending_headers()},
               {"now", node_.now()},
               {"shard_count", ledger.shard_count()}});
    });
}

bool ApiServer::listen(const std::string& host, int port) {
    return server_->listen(host, port);
}

int ApiServer::start_async(const std::string& host) {
    const int port = server_->bind_to_any_port(host);
    serve_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
}

void ApiServer::stop() {
    ticking_ = false;
    if (tick_thread_.joinable()) tick_thread_.join();
    if (server_) server_->stop();
    if (serve_thread_.joinable()) serve_thread_.join();
}

void ApiServer::start_ticking(double tick_scale) {
    ticking_ = true;
    tick_thread_ = std::thread([this, tick_scale] {
        auto last = std::chrono::steady_clock::now();
        while (ticking_) {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            auto now = std::chrono::steady_clock::now();
            const double elapsed =
                std::chrono::duration<double>(now - last).count();
            last = now;
            std::scoped_lock lock(mutex_);
            node_.advance(elapsed * tick_scale);
        }
    });
}

}  // namespace ihsc::api
