#include <doctest.h>

#include <cmath>
#include <map>

#include "chain_harness.hpp"
#include "fixtures.hpp"
#include "ihsc/poa.hpp"

using namespace ihsc;
using namespace ihsc::poa;
using ihsc::testing::make_record;
using ihsc::testing::make_registry;

TEST_CASE("on-site dispatch approves with a validator signature") {
    auto registry = make_registry();
    AuthorityPools pools(4, 5, 5, ihsc::testing::kSeed);
    Rng rng(1);
    auto record = make_record(registry, domain::OperationUnit::Harvest, "P-1",
                              "lot-1");

    auto outcome = pools.dispatch_onsite(2, record, Decision::Approve, rng);
    CHECK(outcome.approved());
    CHECK(pools.is_shard_validator(2, outcome.validator));
    REQUIRE(outcome.signature.has_value());
    const Bytes content =
        canonical::encode(domain::record_content_value(record));
    CHECK(verify(*outcome.signature, *pools.secret_of(outcome.validator),
                 content, outcome.validator));
}

TEST_CASE("on-site rejection carries the authority error message") {
    auto registry = make_registry();
    AuthorityPools pools(4, 5, 5, ihsc::testing::kSeed);
    Rng rng(2);
    auto record = make_record(registry, domain::OperationUnit::PreHarvestTest,
                              "P-1", "lot-1");
    auto outcome = pools.dispatch_onsite(1, record, Decision::Reject, rng);
    CHECK_FALSE(outcome.approved());
    CHECK(outcome.error == "unapproved by local authority");
    CHECK_FALSE(outcome.signature.has_value());
}

TEST_CASE("dispatch preconditions") {
    auto registry = make_registry();
    AuthorityPools pools(2, 3, 2, ihsc::testing::kSeed);
    AuthorityPools empty_pools(2, 0, 2, ihsc::testing::kSeed);
    Rng rng(3);
    auto online = make_record(registry, domain::OperationUnit::SeedPickup,
                              "P-1", "lot-1");
    auto onsite = make_record(registry, domain::OperationUnit::PLC, "P-1",
                              "lot-1");
    CHECK_THROWS_AS(pools.dispatch_onsite(1, online, Decision::Approve, rng),
                    PoaError);
    CHECK_THROWS_AS(
        empty_pools.dispatch_onsite(1, onsite, Decision::Approve, rng),
        PoaError);
}

TEST_CASE("online verification is gated by the schema") {
    auto registry = make_registry();
    AuthorityPools pools(4, 5, 5, ihsc::testing::kSeed);
    auto good = make_record(registry, domain::OperationUnit::SeedPickup, "P-1",
                            "lot-1");
    auto outcome = pools.verify_online(good, registry);
    CHECK(outcome.approved());
    CHECK(outcome.violations.empty());

    auto bad = good;
    bad.signatures.pop_back();
    bad.record_id = domain::compute_record_id(bad);
    auto rejected = pools.verify_online(bad, registry);
    CHECK_FALSE(rejected.approved());
    CHECK_FALSE(rejected.violations.empty());
}

TEST_CASE("validator selection is uniform across the full pool") {
    // Fixed-seed frequency check: 10,000 dispatches over 175 validators,
    // every count within 3 sigma of n/175 and chi-square below the 99.9%
    // quantile for 174 degrees of freedom.
    AuthorityPools pools(1, 175, 50, ihsc::testing::kSeed);
    Rng rng(20260801);
    std::map<SignerId, int> counts;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        auto id = pools.validators(1).pick_available(rng);
        REQUIRE(id.has_value());
        counts[*id]++;
    }
    const double expected = n / 175.0;
    const double sigma = std::sqrt(n * (1.0 / 175.0) * (174.0 / 175.0));
    double chi_square = 0.0;
    int max_dev = 0;
    for (const auto& id : pools.validators(1).ids()) {
        const int c = counts[id];
        max_dev = std::max(max_dev,
                           static_cast<int>(std::abs(c - expected)));
        chi_square += (c - expected) * (c - expected) / expected;
    }
    CHECK(max_dev <= static_cast<int>(3.0 * sigma));
    CHECK(chi_square < 233.0);
}

TEST_CASE("busy validators are never selected") {
    AuthorityPools pools(1, 4, 2, ihsc::testing::kSeed);
    auto& pool = pools.validators(1);
    pool.set_available("shard1-validator-001", false);
    pool.set_available("shard1-validator-003", false);
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        auto id = pool.pick_available(rng);
        REQUIRE(id.has_value());
        CHECK((*id == "shard1-validator-000" || *id == "shard1-validator-002"));
    }
    pool.set_available("shard1-validator-000", false);
    pool.set_available("shard1-validator-002", false);
    CHECK_FALSE(pool.pick_available(rng).has_value());
}

TEST_CASE("selection sequences are reproducible from the seed") {
    AuthorityPools pools(2, 20, 10, ihsc::testing::kSeed);
    Rng rng_a(42), rng_b(42), rng_c(43);
    std::vector<SignerId> a, b, c;
    for (int i = 0; i < 30; ++i) {
        a.push_back(*pools.validators(1).pick_available(rng_a));
        b.push_back(*pools.validators(1).pick_available(rng_b));
        c.push_back(*pools.validators(1).pick_available(rng_c));
    }
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("root confirmation verifies against exactly one regulator key") {
    ihsc::testing::ChainHarness h(1234);
    h.add_shard_block(1, 2, false);
    h.add_shard_block(2, 1, true);
    std::vector<chain::ShardHeaderEntry> body(h.pending.begin(),
                                              h.pending.end());
    Rng rng(6);
    const Digest prev = h.ledger.root_tip_digest();
    auto cs = h.pools.confirm_root(h.ledger, body, prev, 1, 90, rng);
    CHECK(h.pools.is_regulator(cs.signer));

    const Bytes content = chain::confirmation_content(prev, 1, 90, body);
    int matches = 0;
    for (const auto& reg : h.pools.regulators().ids()) {
        if (verify(cs, *h.pools.secret_of(reg), content, reg)) ++matches;
    }
    CHECK(matches == 1);
    CHECK(verify(cs, *h.pools.secret_of(cs.signer), content, cs.signer));
}

TEST_CASE("confirmation is refused for headers of unvalidated blocks") {
    ihsc::testing::ChainHarness h(1235);
    h.add_shard_block(1, 1, false);
    auto entry = h.pending.front();
    entry.header.merkle_root.bytes[0] ^= 0xff;  // no longer a stored block
    Rng rng(7);
    CHECK_THROWS_AS(h.pools.confirm_root(h.ledger, {entry},
                                         h.ledger.root_tip_digest(), 1, 90,
                                         rng),
                    PoaError);
}
