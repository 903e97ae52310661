#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <httplib.h>

#include "fixtures.hpp"
#include "ihsc/api.hpp"

using namespace ihsc;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

struct ApiFixture {
    fs::path dir;
    std::unique_ptr<node::Node> node;
    std::unique_ptr<api::ApiServer> server;
    std::unique_ptr<httplib::Client> client;
    int port = 0;

    ApiFixture() {
        dir = fs::temp_directory_path() /
              ("ihsc-api-test-" + std::to_string(::getpid()) + "-" +
               std::to_string(counter()++));
        node::NodeConfig cfg;
        cfg.chain = {4, 4, 24, 15, 90};
        cfg.validators_per_shard = 5;
        cfg.regulator_count = 3;
        cfg.deployment_seed = ihsc::testing::kSeed;
        cfg.store_root = dir / "store";
        node = std::make_unique<node::Node>(cfg);
        server = std::make_unique<api::ApiServer>(*node);
        port = server->start_async("127.0.0.1");
        client = std::make_unique<httplib::Client>("127.0.0.1", port);

        for (size_t i = 0; i < domain::kRoleCount; ++i) {
            auto role = static_cast<domain::Role>(i);
            json info = json::object();
            for (const auto& key : domain::required_profile_keys(role)) {
                info[key] = key;
            }
            json body{{"participant_id",
                       ihsc::testing::participant_for_role(role)},
                      {"role", domain::role_name(role)},
                      {"info", info}};
            auto res = client->Post("/participants", body.dump(),
                                    "application/json");
            REQUIRE(res);
            REQUIRE(res->status == 200);
        }
    }
    ~ApiFixture() {
        server->stop();
        fs::remove_all(dir);
    }

    static int& counter() {
        static int c = 0;
        return c;
    }

    json record_payload(domain::OperationUnit op, const std::string& product,
                        const std::string& lot, std::uint32_t shard) {
        json info = json::object();
        for (const auto& key : domain::required_info_keys(op)) {
            info[key] = key + "-v";
        }
        json signers = json::array();
        for (auto role : domain::required_signers(op)) {
            signers.push_back(ihsc::testing::participant_for_role(role));
        }
        return json{{"product_id", product},
                    {"lot_number", lot},
                    {"operation", domain::operation_name(op)},
                    {"shard", shard},
                    {"info", info},
                    {"signers", signers}};
    }
};

}  // namespace

TEST_CASE("base64 round-trips") {
    Rng rng(99);
    for (int i = 0; i < 40; ++i) {
        Bytes data;
        const auto len = rng.uniform_below(100);
        for (std::uint64_t b = 0; b < len; ++b) {
            data.push_back(static_cast<std::uint8_t>(rng.uniform_below(256)));
        }
        CHECK(api::base64_decode(api::base64_encode(data)) == data);
    }
    CHECK(api::base64_encode(to_bytes("any carnal pleasure")) ==
          "YW55IGNhcm5hbCBwbGVhc3VyZQ==");
}

TEST_CASE("record lifecycle over the http api") {
    ApiFixture f;

    // create a product
    auto res = f.client->Post("/products", json{}.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const std::string pid = json::parse(res->body).at("product_id");

    // submit an online record with an attachment
    auto payload = f.record_payload(domain::OperationUnit::SeedSourcing, pid,
                                    "lot-1", 2);
    payload["attachments"] = json::array(
        {{{"name", "purity.pdf"},
          {"content_b64", api::base64_encode(to_bytes("purity analysis"))}}});
    res = f.client->Post("/records", payload.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    auto receipt = json::parse(res->body);
    CHECK(receipt.at("status") == "pending");
    const std::string record_id = receipt.at("record_id");

    // ticks are driven explicitly here (no wall-clock dependence in tests)
    f.node->advance(180);

    res = f.client->Get(("/records/" + record_id).c_str());
    REQUIRE(res);
    receipt = json::parse(res->body);
    CHECK(receipt.at("status") == "accepted");
    CHECK(receipt.at("root_height").get<std::uint64_t>() >= 1);

    // history returns the record with the verified file
    res = f.client->Get(("/products/" + pid + "/history").c_str());
    REQUIRE(res);
    REQUIRE(res->status == 200);
    auto history = json::parse(res->body);
    REQUIRE(history.at("records").size() == 1);
    const auto& rec = history.at("records")[0];
    CHECK(rec.at("record").at("record_id") == record_id);
    REQUIRE(rec.at("files").size() == 1);
    CHECK(api::base64_decode(
              rec.at("files")[0].at("content_b64").get<std::string>()) ==
          to_bytes("purity analysis"));

    // ledger status reflects the commit
    res = f.client->Get("/ledger/status");
    REQUIRE(res);
    auto status = json::parse(res->body);
    CHECK(status.at("root_height").get<std::uint64_t>() == 1);
    CHECK(status.at("shard_heights")[1].get<std::uint64_t>() == 1);
}

TEST_CASE("live on-site decision endpoint") {
    ApiFixture f;
    auto payload = f.record_payload(domain::OperationUnit::Harvest, "P-h",
                                    "lot-2", 1);
    auto res = f.client->Post("/records", payload.dump(), "application/json");
    REQUIRE(res);
    auto receipt = json::parse(res->body);
    CHECK(receipt.at("status") == "pending");
    CHECK(receipt.at("awaiting_decision") == true);
    const std::string record_id = receipt.at("record_id");

    res = f.client->Post(("/records/" + record_id + "/decision").c_str(),
                         json{{"decision", "approve"}}.dump(),
                         "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    CHECK(json::parse(res->body).at("awaiting_decision") == false);

    f.node->advance(180);
    res = f.client->Get(("/records/" + record_id).c_str());
    CHECK(json::parse(res->body).at("status") == "accepted");

    res = f.client->Post("/records/ffff/decision",
                         json{{"decision", "approve"}}.dump(),
                         "application/json");
    REQUIRE(res);
    CHECK(res->status == 404);
}

TEST_CASE("schema violations and bad payloads are 4xx or rejected") {
    ApiFixture f;
    auto payload = f.record_payload(domain::OperationUnit::Cultivation, "P-x",
                                    "lot-3", 1);
    payload["info"].erase("irrigation_frequency_volume");
    auto res = f.client->Post("/records", payload.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    auto receipt = json::parse(res->body);
    CHECK(receipt.at("status") == "rejected-verification");
    CHECK_FALSE(receipt.at("violations").empty());

    res = f.client->Post("/records", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = f.client->Get("/records/00ff00");
    REQUIRE(res);
    CHECK(res->status == 404);
}

TEST_CASE("tampered stored file turns history into a 500 tamper error") {
    ApiFixture f;
    auto payload = f.record_payload(domain::OperationUnit::Extraction, "P-t",
                                    "lot-4", 1);
    payload["attachments"] = json::array(
        {{{"name", "coa.pdf"},
          {"content_b64", api::base64_encode(to_bytes("post extraction"))}}});
    auto res = f.client->Post("/records", payload.dump(), "application/json");
    REQUIRE(res);
    f.node->advance(180);

    const auto& record = f.node->ledger().shard_block_at(1, 1).body.front();
    {
        std::fstream file(
            f.node->config().store_root / record.file_refs[0].uri,
            std::ios::in | std::ios::out | std::ios::binary);
        file.seekp(2);
        file.put('!');
    }
    res = f.client->Get("/products/P-t/history");
    REQUIRE(res);
    CHECK(res->status == 500);
    CHECK(json::parse(res->body).at("error") == "database is tampered");
}
