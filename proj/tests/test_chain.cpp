#include <doctest.h>

#include <sstream>

#include "chain_harness.hpp"

using namespace ihsc;
using namespace ihsc::chain;
using ihsc::testing::ChainHarness;
using ihsc::testing::make_record;
using ihsc::testing::make_registry;

TEST_CASE("merkle root depends on verification and record order") {
    auto registry = make_registry();
    auto r1 = make_record(registry, domain::OperationUnit::Harvest, "P-7",
                          "lot-1", 100);
    auto r2 = make_record(registry, domain::OperationUnit::Cultivation, "P-7",
                          "lot-1", 101);
    poa::AuthorityPools pools(4, 5, 5, ihsc::testing::kSeed);
    auto vs = pools.sign_block_verification(1, "shard1-validator-000",
                                            {r1.record_id});

    std::vector<domain::TransactionRecord> body{r1, r2};
    auto with_vs = merkle_root(body, vs);
    auto without_vs = merkle_root(body, std::nullopt);
    CHECK(with_vs != without_vs);

    std::vector<domain::TransactionRecord> permuted{r2, r1};
    CHECK(merkle_root(permuted, vs) != with_vs);

    CHECK_THROWS_AS(merkle_root({}, std::nullopt), ChainError);
}

TEST_CASE("merkle root matches the frozen independent digest") {
    // Frozen from tests/oracle_merkle_golden.py (python json + hashlib over
    // the documented canonical bytes).
    auto registry = make_registry();
    auto r1 = make_record(registry, domain::OperationUnit::Harvest, "P-7",
                          "lot-1", 100);
    auto r2 = make_record(registry, domain::OperationUnit::Cultivation, "P-7",
                          "lot-1", 101);
    CHECK(r1.record_id ==
          "f760ca93eec57c95540896f9ff18148b853ec8946191144825669285c09be2c9");
    poa::AuthorityPools pools(4, 5, 5, ihsc::testing::kSeed);
    auto vs = pools.sign_block_verification(1, "shard1-validator-000",
                                            {r1.record_id});
    std::vector<domain::TransactionRecord> body{r1, r2};
    CHECK(merkle_root(body, vs).hex() ==
          "080c1f183862fcb8baa8fedefc6a1182dcb82084a1db598c3f7411cd8ee8292e");
}

TEST_CASE("shard block validation follows the validity recursion") {
    ChainHarness h(101);

    SUBCASE("well-formed successor of a validated tip validates") {
        auto records = std::vector<domain::TransactionRecord>{
            h.random_record("P-1", false)};
        auto block = make_shard_block(1, records, std::nullopt,
                                      h.ledger.shard_tip_digest(1), 1, 15);
        CHECK(h.ledger.validate_shard_block(block, h.ctx()).ok);
    }

    SUBCASE("prev_hash pointing two blocks back is rejected") {
        h.add_shard_block(1, 2, false);
        h.add_shard_block(1, 2, false);
        // candidate at height 3 pointing at block 1 instead of block 2
        auto stale_prev =
            shard_block_digest(h.ledger.shard_block_at(1, 1));
        auto block = make_shard_block(
            1, {h.random_record("P-1", false)}, std::nullopt, stale_prev, 3,
            60);
        auto result = h.ledger.validate_shard_block(block, h.ctx());
        CHECK_FALSE(result.ok);
        CHECK(result.clause == "hash link broken");
    }

    SUBCASE("unverified on-site record is rejected") {
        auto rec = h.random_record("P-1", true);  // requires on-site
        auto block = make_shard_block(1, {rec}, std::nullopt,
                                      h.ledger.shard_tip_digest(1), 1, 15);
        auto result = h.ledger.validate_shard_block(block, h.ctx());
        CHECK_FALSE(result.ok);
        CHECK(result.clause == "missing on-site verification");
    }

    SUBCASE("on-site verification from another shard's pool is rejected") {
        auto rec = h.random_record("P-1", true);
        auto vs = h.pools.sign_block_verification(2, "shard2-validator-000",
                                                  {rec.record_id});
        auto block = make_shard_block(1, {rec}, vs,
                                      h.ledger.shard_tip_digest(1), 1, 15);
        auto result = h.ledger.validate_shard_block(block, h.ctx());
        CHECK_FALSE(result.ok);
        CHECK(result.clause == "on-site verifier not in shard pool");
    }

    SUBCASE("unknown shard index is a usage error") {
        auto block = make_shard_block(9, {h.random_record("P-1", false)},
                                      std::nullopt, Digest{}, 1, 15);
        CHECK_THROWS_AS(h.ledger.validate_shard_block(block, h.ctx()),
                        ChainError);
    }
}

TEST_CASE("k-hash-link walk over the documented shard patterns") {
    // Shard 1 grows to height 9; the root chain observes heights 4, 6,
    // then skips shard 1 once, then observes height 9. The three link
    // patterns are 2-linked, 0-linked (skip) and 3-linked.
    ChainHarness h(202);
    for (int i = 0; i < 9; ++i) h.add_shard_block(1, 1, false);

    auto hdr = [&](std::uint64_t height) {
        return h.ledger.shard_block_at(1, height).header;
    };

    // root block observing shard-1 height 4
    h.pending.clear();
    h.pending.push_back(
        make_header_entry(h.ledger.shard_block_at(1, 4)));
    h.add_root_block();
    CHECK(h.ledger.covered_height(1) == 4);

    // next root block observing height 6: 2-hash-linked to height 4
    CHECK(h.ledger.k_hash_link_check(1, hdr(6), hdr(4), 2));
    h.pending.push_back(make_header_entry(h.ledger.shard_block_at(1, 6)));
    h.add_root_block();
    CHECK(h.ledger.covered_height(1) == 6);

    // a root block that skips shard 1 entirely: 0-linked, vacuously fine
    CHECK(h.ledger.k_hash_link_check(1, hdr(6), hdr(6), 0));
    h.add_shard_block(2, 1, false);
    h.add_root_block();
    CHECK(h.ledger.covered_height(1) == 6);

    // root block observing height 9: 3-hash-linked to height 6
    CHECK(h.ledger.k_hash_link_check(1, hdr(9), hdr(6), 3));
    h.pending.push_back(make_header_entry(h.ledger.shard_block_at(1, 9)));
    h.add_root_block();
    CHECK(h.ledger.covered_height(1) == 9);

    CHECK_FALSE(h.ledger.k_hash_link_check(1, hdr(6), hdr(4), 1));
    CHECK_FALSE(h.ledger.k_hash_link_check(1, hdr(6), hdr(4), 3));
    CHECK_THROWS_AS(h.ledger.k_hash_link_check(1, hdr(6), hdr(4), -1),
                    ChainError);
    CHECK(h.ledger.verify_full(h.ctx()).ok);
}

TEST_CASE("root block validation covers links, ranges and confirmation") {
    ChainHarness h(303);

    SUBCASE("covering two new shard blocks validates") {
        h.add_shard_block(1, 2, false);
        h.add_shard_block(1, 2, true);
        auto candidate = h.build_root_candidate();
        CHECK(h.ledger.validate_root_block(candidate, h.ctx()).ok);
    }

    SUBCASE("skipping a shard leaves its condition vacuous") {
        h.add_shard_block(1, 1, false);
        h.add_root_block();
        h.add_shard_block(2, 1, false);  // shard 1 untouched this round
        auto candidate = h.build_root_candidate();
        CHECK(h.ledger.validate_root_block(candidate, h.ctx()).ok);
    }

    SUBCASE("header from a forked branch is rejected") {
        h.add_shard_block(1, 1, false);
        h.add_shard_block(1, 1, false);
        auto candidate = h.build_root_candidate();
        // Stray sibling of block 2: same parent, different content.
        auto stray = make_shard_block(
            1, {h.random_record("P-9", false)}, std::nullopt,
            shard_block_digest(h.ledger.shard_block_at(1, 1)), 2, 777);
        candidate.body.back() = make_header_entry(stray);
        // confirm_root itself refuses stray headers
        CHECK_THROWS_AS(
            h.pools.confirm_root(h.ledger, candidate.body,
                                 candidate.header.prev_hash,
                                 candidate.header.height,
                                 candidate.header.created_at, h.rng),
            poa::PoaError);
        auto rebuilt = make_root_block(
            candidate.body, candidate.confirmation,
            candidate.header.prev_hash, candidate.header.height,
            candidate.header.created_at);
        auto result = h.ledger.validate_root_block(rebuilt, h.ctx());
        CHECK_FALSE(result.ok);
        CHECK(result.clause == "unknown shard block");
    }

    SUBCASE("confirmation by a non-regulator is rejected") {
        h.add_shard_block(3, 1, false);
        auto candidate = h.build_root_candidate();
        auto vs_signer = SignerId("shard1-validator-000");
        auto bogus = sign(*h.pools.secret_of(vs_signer),
                          confirmation_content(candidate.header.prev_hash,
                                               candidate.header.height,
                                               candidate.header.created_at,
                                               candidate.body),
                          vs_signer);
        auto rebuilt = make_root_block(candidate.body, bogus,
                                       candidate.header.prev_hash,
                                       candidate.header.height,
                                       candidate.header.created_at);
        auto result = h.ledger.validate_root_block(rebuilt, h.ctx());
        CHECK_FALSE(result.ok);
        CHECK(result.clause == "confirmation signer not a regulator");
    }
}

TEST_CASE("appends update heights and reject broken links") {
    ChainHarness h(404);
    CHECK(h.ledger.shard_height(1) == 0);
    h.add_shard_block(1, 3, false);
    CHECK(h.ledger.shard_height(1) == 1);

    auto block = make_shard_block(1, {h.random_record("P-1", false)},
                                  std::nullopt, Digest{}, 2, 30);
    auto result = h.ledger.append_shard_block(block, h.ctx());
    CHECK_FALSE(result.ok);
    CHECK(result.clause == "hash link broken");
    CHECK(h.ledger.shard_height(1) == 1);
}

TEST_CASE("tampering any record in a 20-block chain breaks revalidation") {
    ChainHarness h(505);
    while (h.ledger.shard_height(1) < 20) {
        h.add_shard_block(1, 2, h.rng.bernoulli(0.3));
        if (h.rng.bernoulli(0.5)) h.add_root_block();
    }
    if (!h.pending.empty()) h.add_root_block();
    REQUIRE(h.ledger.verify_full(h.ctx()).ok);

    for (std::uint64_t target = 1; target <= 20; target += 3) {
        ChainHarness fresh(505);
        while (fresh.ledger.shard_height(1) < 20) {
            fresh.add_shard_block(1, 2, fresh.rng.bernoulli(0.3));
            if (fresh.rng.bernoulli(0.5)) fresh.add_root_block();
        }
        if (!fresh.pending.empty()) fresh.add_root_block();

        auto& block = fresh.ledger.mutable_shard_block(1, target);
        block.body.front().info.begin()->second[0] ^= 0x01;

        auto report = fresh.ledger.verify_full(fresh.ctx());
        REQUIRE_FALSE(report.ok);
        CHECK(report.failure->where ==
              "shard 1 block " + std::to_string(target));
    }
}

TEST_CASE("validate_root_block agrees with the brute-force oracle") {
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        ChainHarness h(9000 + seed);
        const int rounds = 1 + static_cast<int>(h.rng.uniform_below(4));
        for (int g = 0; g < rounds; ++g) {
            h.grow(1 + static_cast<int>(h.rng.uniform_below(4)));
        }
        h.add_shard_block(
            static_cast<std::uint32_t>(1 + h.rng.uniform_below(4)), 2,
            h.rng.bernoulli(0.5));
        auto candidate = h.build_root_candidate();

        // Corrupt the candidate (or the ledger) in one of several ways.
        const auto mode = h.rng.uniform_below(6);
        switch (mode) {
            case 1:
                candidate.header.prev_hash.bytes[0] ^= 0xff;
                break;
            case 2:
                if (!candidate.body.empty()) {
                    candidate.body.front().header.merkle_root.bytes[5] ^= 1;
                }
                break;
            case 3:
                candidate.header.body_hash.bytes[31] ^= 0x10;
                break;
            case 4: {
                auto& block = h.ledger.mutable_shard_block(
                    candidate.body.front().shard_index,
                    candidate.body.front().header.height);
                block.body.front().lot_number += "!";
                break;
            }
            case 5:
                candidate.body.push_back(candidate.body.front());
                break;
            default:
                break;  // leave valid
        }

        bool impl = h.ledger.validate_root_block(candidate, h.ctx()).ok;
        bool oracle =
            ihsc::testing::oracle_validate_root_block(h.ledger, candidate,
                                                      h.ctx());
        CHECK(impl == oracle);
        if (mode == 0) CHECK(impl);
        if (mode != 0) CHECK_FALSE(impl);
        ++checked;
    }
    CHECK(checked == 60);
}

TEST_CASE("chain properties: coverage monotonicity, two-pointer, capacity") {
    ChainHarness h(606);
    std::vector<std::vector<std::uint64_t>> coverage_history;
    for (int i = 0; i < 12; ++i) {
        h.grow(1 + static_cast<int>(h.rng.uniform_below(3)));
        std::vector<std::uint64_t> row;
        for (std::uint32_t s = 1; s <= 4; ++s) {
            row.push_back(h.ledger.covered_height(s));
        }
        coverage_history.push_back(row);
    }
    if (!h.pending.empty()) h.add_root_block();

    // o_i non-decreasing in root height
    for (size_t i = 1; i < coverage_history.size(); ++i) {
        for (size_t s = 0; s < 4; ++s) {
            CHECK(coverage_history[i][s] >= coverage_history[i - 1][s]);
        }
    }

    // every non-genesis shard block is covered by exactly one root block
    for (std::uint32_t s = 1; s <= 4; ++s) {
        for (std::uint64_t height = 1; height <= h.ledger.shard_height(s);
             ++height) {
            auto covering = h.ledger.covering_root(s, height);
            REQUIRE(covering.has_value());
            // ... and reachable through its own chain's hash links
            CHECK(h.ledger.k_hash_link_check(
                s, h.ledger.shard_block_at(s, height).header,
                h.ledger.shard_block_at(s, 0).header,
                static_cast<std::int64_t>(height)));
        }
    }

    // capacity limits hold everywhere
    for (std::uint32_t s = 1; s <= 4; ++s) {
        for (const auto& b : h.ledger.shard_chain(s)) {
            CHECK(b.body.size() <= h.ledger.config().shard_block_capacity);
        }
    }
    for (const auto& rb : h.ledger.root_chain()) {
        CHECK(rb.body.size() <= h.ledger.config().root_block_capacity);
    }
}

TEST_CASE("fork choice prefers longest root chain with deterministic ties") {
    ChainHarness a(707), b(707), c(707);
    a.grow(3);
    b.grow(3);
    c.grow(3);
    b.grow(2);  // b now has the taller root chain

    std::vector<const Ledger*> candidates{&a.ledger, &b.ledger, &c.ledger};
    CHECK(&fork_choice(candidates) == &b.ledger);

    CHECK_THROWS_AS(fork_choice(std::vector<const Ledger*>{}), ChainError);
}

TEST_CASE("fork choice falls back to the smaller tip digest") {
    // Same heights and timestamps, different content: the digest decides,
    // independent of candidate order.
    ChainHarness a(711), b(712);
    a.add_shard_block(1, 1, false);
    b.add_shard_block(1, 1, false);
    a.add_root_block();
    b.add_root_block();
    REQUIRE(a.ledger.root_height() == b.ledger.root_height());
    REQUIRE(a.ledger.root_chain().back().header.created_at ==
            b.ledger.root_chain().back().header.created_at);
    const Ledger* expected =
        root_block_digest(a.ledger.root_chain().back()) <
                root_block_digest(b.ledger.root_chain().back())
            ? &a.ledger
            : &b.ledger;
    CHECK(&fork_choice(std::vector<const Ledger*>{&a.ledger, &b.ledger}) ==
          expected);
    CHECK(&fork_choice(std::vector<const Ledger*>{&b.ledger, &a.ledger}) ==
          expected);
}

TEST_CASE("fork choice tie-breaks on tip timestamp then digest") {
    ChainHarness early(808), late(808);
    early.add_shard_block(1, 1, false);
    late.add_shard_block(1, 1, false);
    late.now += 300;  // same chain work, later root timestamp
    early.add_root_block();
    late.add_root_block();
    CHECK(early.ledger.root_height() == late.ledger.root_height());
    std::vector<const Ledger*> candidates{&late.ledger, &early.ledger};
    CHECK(&fork_choice(candidates) == &early.ledger);
}

TEST_CASE("ledger dumps are bit-exact and reload losslessly") {
    ChainHarness h(909);
    for (int i = 0; i < 5; ++i) h.grow(2);
    if (!h.pending.empty()) h.add_root_block();

    std::ostringstream first, second;
    h.ledger.dump(first);
    h.ledger.dump(second);
    CHECK(first.str() == second.str());

    std::istringstream in(first.str());
    Ledger reloaded = Ledger::load(in);
    std::ostringstream third;
    reloaded.dump(third);
    CHECK(third.str() == first.str());
    CHECK(reloaded.verify_full(h.ctx()).ok);
    CHECK(reloaded.root_height() == h.ledger.root_height());
    CHECK(reloaded.product_index().size() == h.ledger.product_index().size());
}
