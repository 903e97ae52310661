#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ihsc/canonical.hpp"
#include "ihsc/domain.hpp"
#include "ihsc/signature.hpp"

namespace ihsc::chain {

class ChainError : public std::runtime_error {
public:
    explicit ChainError(const std::string& what) : std::runtime_error(what) {}
};

struct ChainConfig {
    std::uint32_t shard_count = 4;
    std::size_t shard_block_capacity = 4;   // records per shard block
    std::size_t root_block_capacity = 24;   // shard headers per root block
    std::int64_t shard_interval_s = 15;     // seconds between shard blocks
    std::int64_t root_interval_s = 90;      // seconds between root blocks

    void validate() const;
    canonical::Value to_value() const;
    static ChainConfig from_value(const canonical::Value& v);
};

struct ShardBlockHeader {
    Digest prev_hash;
    std::uint64_t height = 0;
    std::int64_t created_at = 0;
    Digest merkle_root;

    auto operator<=>(const ShardBlockHeader&) const = default;
};

/// Block of one shard chain: Verification (on-site validator signature, when
/// any body record needs it), Data Body (records with participant
/// signatures), Header.
struct ShardBlock {
    std::uint32_t shard_index = 1;
    std::optional<KeyedSignature> verification;
    std::vector<domain::TransactionRecord> body;
    ShardBlockHeader header;
};

/// Root-block body entry: one observed shard-block header plus the hash
/// pointer to the full shard block.
struct ShardHeaderEntry {
    std::uint32_t shard_index = 1;
    ShardBlockHeader header;
    Digest block_hash;

    auto operator<=>(const ShardHeaderEntry&) const = default;
};

struct RootBlockHeader {
    Digest prev_hash;
    std::uint64_t height = 0;
    std::int64_t created_at = 0;
    Digest body_hash;
};

/// Root-chain block: Confirmation (regulator signature; absent only on
/// genesis), Data Body (observed shard headers), Header.
struct RootBlock {
    std::optional<KeyedSignature> confirmation;
    std::vector<ShardHeaderEntry> body;
    RootBlockHeader header;
};

// Canonical values and hashes. Block hashes cover the whole block content.
canonical::Value shard_block_value(const ShardBlock& b);
ShardBlock shard_block_from_value(const canonical::Value& v);
Digest shard_block_digest(const ShardBlock& b);

canonical::Value header_entry_value(const ShardHeaderEntry& e);
ShardHeaderEntry header_entry_from_value(const canonical::Value& v);

canonical::Value root_block_value(const RootBlock& b);
RootBlock root_block_from_value(const canonical::Value& v);
Digest root_block_digest(const RootBlock& b);

/// Hash of Data Body and Verification: digest over the canonical encoding of
/// (record infos, record signatures, verification-or-absent marker).
/// Errors on empty body.
Digest merkle_root(std::span<const domain::TransactionRecord> body,
                   const std::optional<KeyedSignature>& verification);

/// Hash stored in a root-block header: digest over canonical (body,
/// confirmation-or-absent).
Digest root_body_hash(const std::vector<ShardHeaderEntry>& body,
                      const std::optional<KeyedSignature>& confirmation);

/// Bytes the on-site validator signs into a shard block's Verification slot:
/// the shard index and the ids of the body records requiring on-site checks.
Bytes verification_content(std::uint32_t shard_index,
                           const std::vector<std::string>& onsite_record_ids);

/// Bytes the regulator signs into a root block's Confirmation slot: the
/// header scaffold plus every included shard header. Covering the scaffold
/// keeps the tip root block tamper-evident without a successor.
Bytes confirmation_content(const Digest& prev_hash, std::uint64_t height,
                           std::int64_t created_at,
                           const std::vector<ShardHeaderEntry>& body);

ShardBlock make_shard_block(std::uint32_t shard_index,
                            std::vector<domain::TransactionRecord> records,
                            std::optional<KeyedSignature> verification,
                            const Digest& prev_hash, std::uint64_t height,
                            std::int64_t created_at);

ShardHeaderEntry make_header_entry(const ShardBlock& block);

RootBlock make_root_block(std::vector<ShardHeaderEntry> body,
                          std::optional<KeyedSignature> confirmation,
                          const Digest& prev_hash, std::uint64_t height,
                          std::int64_t created_at);

struct ValidationResult {
    bool ok = false;
    std::string clause;  // empty on success; names the failed check otherwise

    static ValidationResult pass() { return {true, {}}; }
    static ValidationResult fail(std::string clause) {
        return {false, std::move(clause)};
    }
    explicit operator bool() const { return ok; }
};

/// Lookups needed to re-verify signatures during validation.
struct VerifyContext {
    const domain::ParticipantRegistry& participants;
    const AuthorityDirectory& authorities;
};

struct RecordLocation {
    std::uint32_t shard_index = 1;
    std::uint64_t height = 0;
    std::size_t position = 0;

    auto operator<=>(const RecordLocation&) const = default;
};

struct VerifyFailure {
    std::string where;   // e.g. "shard 2 block 5", "root block 3"
    std::string clause;
    // Height of the root block being processed when the failure surfaced;
    // UINT64_MAX for shard-tail blocks not yet covered by any root block.
    std::uint64_t root_context = 0;
};

struct VerifyReport {
    bool ok = true;
    std::optional<VerifyFailure> failure;
};

/// The two-layer ledger: root chain plus I shard chains, with a product
/// index over every stored record. Appends are gated by the validation
/// functions, so the stored prefix is always valid at append time;
/// verify_full() re-derives everything from genesis.
class Ledger {
public:
    explicit Ledger(ChainConfig config);

    const ChainConfig& config() const { return config_; }
    std::uint32_t shard_count() const { return config_.shard_count; }

    const std::vector<RootBlock>& root_chain() const { return root_chain_; }
    const std::vector<ShardBlock>& shard_chain(std::uint32_t shard_index) const;

    std::uint64_t root_height() const { return root_chain_.size() - 1; }
    std::uint64_t shard_height(std::uint32_t shard_index) const;

    const ShardBlock& shard_block_at(std::uint32_t shard_index,
                                     std::uint64_t height) const;
    Digest shard_tip_digest(std::uint32_t shard_index) const;
    Digest root_tip_digest() const;

    /// Highest shard height covered by the root chain so far (o_i of the
    /// newest root block that observed shard i; 0 if none).
    std::uint64_t covered_height(std::uint32_t shard_index) const;

    /// Height of the first root block whose coverage range includes the
    /// given shard height, if any.
    std::optional<std::uint64_t> covering_root(std::uint32_t shard_index,
                                               std::uint64_t height) const;

    /// Eq.-(2) validity of a candidate successor for its shard chain.
    ValidationResult validate_shard_block(const ShardBlock& candidate,
                                          const VerifyContext& ctx) const;

    /// Eq.-(3) validity of a candidate successor for the root chain,
    /// including the k-hash-link condition against the last root block that
    /// observed each shard.
    ValidationResult validate_root_block(const RootBlock& candidate,
                                         const VerifyContext& ctx) const;

    /// True iff following prev_hash from `newer` exactly k times lands on
    /// `older` within the stored shard chain (k = 0 means newer == older).
    /// Negative k is a usage error.
    bool k_hash_link_check(std::uint32_t shard_index,
                           const ShardBlockHeader& newer,
                           const ShardBlockHeader& older,
                           std::int64_t k) const;

    /// Validate-then-append; rejection names the failed clause and leaves
    /// the ledger untouched.
    ValidationResult append_shard_block(ShardBlock block,
                                        const VerifyContext& ctx);
    ValidationResult append_root_block(RootBlock block,
                                       const VerifyContext& ctx);

    /// Full revalidation from genesis, walking shard blocks in root-coverage
    /// order so a failure is reported at or before its covering root block.
    VerifyReport verify_full(const VerifyContext& ctx) const;

    const std::map<domain::ProductId, std::vector<RecordLocation>>&
    product_index() const {
        return product_index_;
    }

    /// Committed locations (covered by a root block) for a product, in
    /// commit order.
    std::vector<RecordLocation> committed_locations(
        const domain::ProductId& product_id) const;

    const domain::TransactionRecord& record_at(const RecordLocation& loc) const;

    /// Bit-exact dump: config line, root blocks, then shard blocks in index
    /// order, one canonical-encoded line each.
    void dump(std::ostream& out) const;
    static Ledger load(std::istream& in);

    // Test hooks for tamper experiments: direct mutable access.
    ShardBlock& mutable_shard_block(std::uint32_t shard_index,
                                    std::uint64_t height);
    RootBlock& mutable_root_block(std::uint64_t height);

private:
    std::vector<ShardBlock>& shard_chain_mut(std::uint32_t shard_index);
    ValidationResult check_shard_body(const ShardBlock& block,
                                      const VerifyContext& ctx) const;
    ValidationResult check_shard_link(const ShardBlock& block,
                                      const ShardBlock& prev) const;
    ValidationResult check_root_intrinsic(const RootBlock& candidate,
                                          const RootBlock& prev,
                                          const std::vector<std::uint64_t>& covered,
                                          const VerifyContext& ctx,
                                          bool recheck_range) const;

    ChainConfig config_;
    std::vector<RootBlock> root_chain_;
    std::vector<std::vector<ShardBlock>> shard_chains_;
    std::map<domain::ProductId, std::vector<RecordLocation>> product_index_;
    // covered_[i-1] = o_i(tip root)
    std::vector<std::uint64_t> covered_;
};

/// Longest-root-chain rule with deterministic tie-breaks: earliest tip
/// timestamp, then smaller tip digest. Errors on an empty candidate set.
const Ledger& fork_choice(std::span<const Ledger* const> candidates);

}  // namespace ihsc::chain
