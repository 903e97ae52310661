#include "ihsc/chain.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace ihsc::chain {

namespace {

constexpr const char* kShardBlockTag = "ihsc.shard-block.v1";
constexpr const char* kRootBlockTag = "ihsc.root-block.v1";
constexpr const char* kMerkleTag = "ihsc.merkle.v1";
constexpr const char* kRootBodyTag = "ihsc.root-body.v1";
constexpr const char* kVerifyTag = "ihsc.verify.v1";
constexpr const char* kConfirmTag = "ihsc.confirm.v1";
constexpr const char* kLedgerFormat = "ihsc.ledger.v1";

canonical::Value signature_value(const std::optional<KeyedSignature>& sig) {
    if (!sig) return "absent";
    return canonical::Value{{"signer", sig->signer}, {"mac", sig->mac.hex()}};
}

std::optional<KeyedSignature> signature_from_value(const canonical::Value& v) {
    if (v.is_string()) {
        if (v.get<std::string>() != "absent") {
            throw ChainError("malformed signature marker");
        }
        return std::nullopt;
    }
    return KeyedSignature{v.at("signer").get<std::string>(),
                          Digest::from_hex(v.at("mac").get<std::string>())};
}

canonical::Value shard_header_value(const ShardBlockHeader& h) {
    return canonical::Value{{"prev_hash", h.prev_hash.hex()},
                            {"height", h.height},
                            {"created_at", h.created_at},
                            {"merkle_root", h.merkle_root.hex()}};
}

ShardBlockHeader shard_header_from_value(const canonical::Value& v) {
    return ShardBlockHeader{
        Digest::from_hex(v.at("prev_hash").get<std::string>()),
        v.at("height").get<std::uint64_t>(),
        v.at("created_at").get<std::int64_t>(),
        Digest::from_hex(v.at("merkle_root").get<std::string>())};
}

std::vector<std::string> onsite_record_ids(const ShardBlock& b) {
    std::vector<std::string> ids;
    for (const auto& r : b.body) {
        if (domain::requires_onsite(r.operation)) ids.push_back(r.record_id);
    }
    return ids;
}

std::string shard_where(std::uint32_t shard, std::uint64_t height) {
    return "shard " + std::to_string(shard) + " block " +
           std::to_string(height);
}

std::string root_where(std::uint64_t height) {
    return "root block " + std::to_string(height);
}

ShardBlock make_shard_genesis(std::uint32_t shard_index) {
    ShardBlock b;
    b.shard_index = shard_index;
    b.header = ShardBlockHeader{Digest{}, 0, 0, Digest{}};
    return b;
}

RootBlock make_root_genesis() {
    RootBlock b;
    b.header = RootBlockHeader{Digest{}, 0, 0, root_body_hash({}, std::nullopt)};
    return b;
}

bool is_valid_shard_genesis(const ShardBlock& b) {
    return b.header.height == 0 && b.header.prev_hash.is_zero() &&
           b.header.merkle_root.is_zero() && b.body.empty() &&
           !b.verification.has_value() && b.header.created_at == 0;
}

bool is_valid_root_genesis(const RootBlock& b) {
    return b.header.height == 0 && b.header.prev_hash.is_zero() &&
           b.body.empty() && !b.confirmation.has_value() &&
           b.header.created_at == 0 &&
           b.header.body_hash == root_body_hash({}, std::nullopt);
}

}  // namespace

void ChainConfig::validate() const {
    if (shard_count == 0 || shard_block_capacity == 0 ||
        root_block_capacity == 0 || shard_interval_s <= 0 ||
        root_interval_s <= 0) {
        throw ChainError("chain config values must be positive");
    }
    if (root_interval_s < shard_interval_s) {
        throw ChainError("root interval must be >= shard interval");
    }
}

canonical::Value ChainConfig::to_value() const {
    return canonical::Value{{"shard_count", shard_count},
                            {"shard_block_capacity", shard_block_capacity},
                            {"root_block_capacity", root_block_capacity},
                            {"shard_interval", shard_interval_s},
                            {"root_interval", root_interval_s}};
}

ChainConfig ChainConfig::from_value(const canonical::Value& v) {
    ChainConfig c;
    c.shard_count = v.at("shard_count").get<std::uint32_t>();
    c.shard_block_capacity = v.at("shard_block_capacity").get<std::size_t>();
    c.root_block_capacity = v.at("root_block_capacity").get<std::size_t>();
    c.shard_interval_s = v.at("shard_interval").get<std::int64_t>();
    c.root_interval_s = v.at("root_interval").get<std::int64_t>();
    c.validate();
    return c;
}

canonical::Value shard_block_value(const ShardBlock& b) {
    canonical::Value body = canonical::Value::array();
    for (const auto& r : b.body) body.push_back(domain::record_value(r));
    return canonical::Value{{"shard_index", b.shard_index},
                            {"verification", signature_value(b.verification)},
                            {"body", std::move(body)},
                            {"header", shard_header_value(b.header)}};
}

ShardBlock shard_block_from_value(const canonical::Value& v) {
    ShardBlock b;
    b.shard_index = v.at("shard_index").get<std::uint32_t>();
    b.verification = signature_from_value(v.at("verification"));
    for (const auto& r : v.at("body")) {
        b.body.push_back(domain::record_from_value(r));
    }
    b.header = shard_header_from_value(v.at("header"));
    return b;
}

Digest shard_block_digest(const ShardBlock& b) {
    return canonical::encode_digest(
        canonical::Value::array({kShardBlockTag, shard_block_value(b)}));
}

canonical::Value header_entry_value(const ShardHeaderEntry& e) {
    return canonical::Value{{"shard_index", e.shard_index},
                            {"header", shard_header_value(e.header)},
                            {"block_hash", e.block_hash.hex()}};
}

ShardHeaderEntry header_entry_from_value(const canonical::Value& v) {
    return ShardHeaderEntry{
        v.at("shard_index").get<std::uint32_t>(),
        shard_header_from_value(v.at("header")),
        Digest::from_hex(v.at("block_hash").get<std::string>())};
}

canonical::Value root_block_value(const RootBlock& b) {
    canonical::Value body = canonical::Value::array();
    for (const auto& e : b.body) body.push_back(header_entry_value(e));
    return canonical::Value{
        {"confirmation", signature_value(b.confirmation)},
        {"body", std::move(body)},
        {"header",
         canonical::Value{{"prev_hash", b.header.prev_hash.hex()},
                          {"height", b.header.height},
                          {"created_at", b.header.created_at},
                          {"body_hash", b.header.body_hash.hex()}}}};
}

RootBlock root_block_from_value(const canonical::Value& v) {
    RootBlock b;
    b.confirmation = signature_from_value(v.at("confirmation"));
    for (const auto& e : v.at("body")) {
        b.body.push_back(header_entry_from_value(e));
    }
    const auto& h = v.at("header");
    b.header = RootBlockHeader{
        Digest::from_hex(h.at("prev_hash").get<std::string>()),
        h.at("height").get<std::uint64_t>(),
        h.at("created_at").get<std::int64_t>(),
        Digest::from_hex(h.at("body_hash").get<std::string>())};
    return b;
}

Digest root_block_digest(const RootBlock& b) {
    return canonical::encode_digest(
        canonical::Value::array({kRootBlockTag, root_block_value(b)}));
}

Digest merkle_root(std::span<const domain::TransactionRecord> body,
                   const std::optional<KeyedSignature>& verification) {
    if (body.empty()) {
        throw ChainError("merkle root of an empty body");
    }
    canonical::Value infos = canonical::Value::array();
    canonical::Value sigs = canonical::Value::array();
    for (const auto& r : body) {
        canonical::Value info = canonical::Value::object();
        for (const auto& [k, v] : r.info) info[k] = v;
        infos.push_back(std::move(info));
        canonical::Value record_sigs = canonical::Value::array();
        for (const auto& s : r.signatures) {
            record_sigs.push_back(
                {{"signer", s.signer}, {"mac", s.mac.hex()}});
        }
        sigs.push_back(std::move(record_sigs));
    }
    return canonical::encode_digest(canonical::Value::array(
        {kMerkleTag, std::move(infos), std::move(sigs),
         signature_value(verification)}));
}

Digest root_body_hash(const std::vector<ShardHeaderEntry>& body,
                      const std::optional<KeyedSignature>& confirmation) {
    canonical::Value entries = canonical::Value::array();
    for (const auto& e : body) entries.push_back(header_entry_value(e));
    return canonical::encode_digest(canonical::Value::array(
        {kRootBodyTag, std::move(entries), signature_value(confirmation)}));
}

Bytes verification_content(std::uint32_t shard_index,
                           const std::vector<std::string>& onsite_record_ids) {
    canonical::Value ids = canonical::Value::array();
    for (const auto& id : onsite_record_ids) ids.push_back(id);
    return canonical::encode(
        canonical::Value::array({kVerifyTag, shard_index, std::move(ids)}));
}

Bytes confirmation_content(const Digest& prev_hash, std::uint64_t height,
                           std::int64_t created_at,
                           const std::vector<ShardHeaderEntry>& body) {
    canonical::Value entries = canonical::Value::array();
    for (const auto& e : body) entries.push_back(header_entry_value(e));
    return canonical::encode(canonical::Value::array(
        {kConfirmTag, prev_hash.hex(), height, created_at,
         std::move(entries)}));
}

ShardBlock make_shard_block(std::uint32_t shard_index,
                            std::vector<domain::TransactionRecord> records,
                            std::optional<KeyedSignature> verification,
                            const Digest& prev_hash, std::uint64_t height,
                            std::int64_t created_at) {
    ShardBlock b;
    b.shard_index = shard_index;
    b.body = std::move(records);
    b.verification = std::move(verification);
    b.header = ShardBlockHeader{prev_hash, height, created_at,
                                merkle_root(b.body, b.verification)};
    return b;
}

ShardHeaderEntry make_header_entry(const ShardBlock& block) {
    return ShardHeaderEntry{block.shard_index, block.header,
                            shard_block_digest(block)};
}

RootBlock make_root_block(std::vector<ShardHeaderEntry> body,
                          std::optional<KeyedSignature> confirmation,
                          const Digest& prev_hash, std::uint64_t height,
                          std::int64_t created_at) {
    RootBlock b;
    b.body = std::move(body);
    b.confirmation = std::move(confirmation);
    b.header = RootBlockHeader{prev_hash, height, created_at,
                               root_body_hash(b.body, b.confirmation)};
    return b;
}

Ledger::Ledger(ChainConfig config) : config_(config) {
    config_.validate();
    root_chain_.push_back(make_root_genesis());
    shard_chains_.resize(config_.shard_count);
    covered_.assign(config_.shard_count, 0);
    for (std::uint32_t i = 1; i <= config_.shard_count; ++i) {
        shard_chains_[i - 1].push_back(make_shard_genesis(i));
    }
}

const std::vector<ShardBlock>& Ledger::shard_chain(
    std::uint32_t shard_index) const {
    if (shard_index < 1 || shard_index > config_.shard_count) {
        throw ChainError("unknown shard index " + std::to_string(shard_index));
    }
    return shard_chains_[shard_index - 1];
}

std::vector<ShardBlock>& Ledger::shard_chain_mut(std::uint32_t shard_index) {
    if (shard_index < 1 || shard_index > config_.shard_count) {
        throw ChainError("unknown shard index " + std::to_string(shard_index));
    }
    return shard_chains_[shard_index - 1];
}

std::uint64_t Ledger::shard_height(std::uint32_t shard_index) const {
    return shard_chain(shard_index).size() - 1;
}

const ShardBlock& Ledger::shard_block_at(std::uint32_t shard_index,
                                         std::uint64_t height) const {
    const auto& chain = shard_chain(shard_index);
    if (height >= chain.size()) {
        throw ChainError("no block at height " + std::to_string(height) +
                         " in shard " + std::to_string(shard_index));
    }
    return chain[height];
}

Digest Ledger::shard_tip_digest(std::uint32_t shard_index) const {
    return shard_block_digest(shard_chain(shard_index).back());
}

Digest Ledger::root_tip_digest() const {
    return root_block_digest(root_chain_.back());
}

std::uint64_t Ledger::covered_height(std::uint32_t shard_index) const {
    shard_chain(shard_index);  // bounds check
    return covered_[shard_index - 1];
}

std::optional<std::uint64_t> Ledger::covering_root(std::uint32_t shard_index,
                                                   std::uint64_t height) const {
    if (height == 0) return 0;  // genesis is covered by convention
    std::uint64_t covered = 0;
    for (const auto& rb : root_chain_) {
        std::uint64_t max_height = covered;
        for (const auto& e : rb.body) {
            if (e.shard_index == shard_index) {
                max_height = std::max(max_height, e.header.height);
            }
        }
        if (height <= max_height) return rb.header.height;
        covered = std::max(covered, max_height);
    }
    return std::nullopt;
}

ValidationResult Ledger::check_shard_body(const ShardBlock& block,
                                          const VerifyContext& ctx) const {
    if (block.body.empty()) {
        return ValidationResult::fail("empty body");
    }
    if (block.body.size() > config_.shard_block_capacity) {
        return ValidationResult::fail("capacity exceeded");
    }

    auto onsite_ids = onsite_record_ids(block);
    if (onsite_ids.empty() && block.verification.has_value()) {
        return ValidationResult::fail("unexpected on-site verification");
    }
    if (!onsite_ids.empty() && !block.verification.has_value()) {
        return ValidationResult::fail("missing on-site verification");
    }

    if (merkle_root(block.body, block.verification) !=
        block.header.merkle_root) {
        return ValidationResult::fail("merkle root mismatch");
    }

    // V_i^a: every record in the block must be verified. Online records are
    // verified by schema; on-site records additionally need the block's
    // Verification signature from a validator of this shard.
    for (const auto& r : block.body) {
        auto violations = domain::validate_schema(r, ctx.participants);
        if (!violations.empty()) {
            return ValidationResult::fail("record verification failed: " +
                                          violations.front() + " (record " +
                                          r.record_id + ")");
        }
    }
    if (block.verification) {
        const auto& vs = *block.verification;
        if (!ctx.authorities.is_shard_validator(block.shard_index, vs.signer)) {
            return ValidationResult::fail("on-site verifier not in shard pool");
        }
        const Bytes* secret = ctx.authorities.secret_of(vs.signer);
        if (!secret ||
            !verify(vs, *secret,
                    verification_content(block.shard_index, onsite_ids),
                    vs.signer)) {
            return ValidationResult::fail(
                "on-site verification signature invalid");
        }
    }
    return ValidationResult::pass();
}

ValidationResult Ledger::check_shard_link(const ShardBlock& block,
                                          const ShardBlock& prev) const {
    if (block.header.height != prev.header.height + 1) {
        return ValidationResult::fail("height mismatch");
    }
    if (block.header.prev_hash != shard_block_digest(prev)) {
        return ValidationResult::fail("hash link broken");
    }
    return ValidationResult::pass();
}

ValidationResult Ledger::validate_shard_block(const ShardBlock& candidate,
                                              const VerifyContext& ctx) const {
    const auto& chain = shard_chain(candidate.shard_index);
    const ShardBlock& tip = chain.back();
    if (auto r = check_shard_link(candidate, tip); !r) return r;
    if (auto r = check_shard_body(candidate, ctx); !r) return r;
    return ValidationResult::pass();
}

bool Ledger::k_hash_link_check(std::uint32_t shard_index,
                               const ShardBlockHeader& newer,
                               const ShardBlockHeader& older,
                               std::int64_t k) const {
    if (k < 0) {
        throw ChainError("negative k in hash-link check");
    }
    if (newer.height < older.height ||
        newer.height - older.height != static_cast<std::uint64_t>(k)) {
        return false;
    }
    const auto& chain = shard_chain(shard_index);
    ShardBlockHeader current = newer;
    for (std::int64_t step = 0; step < k; ++step) {
        if (current.height == 0 || current.height - 1 >= chain.size()) {
            return false;
        }
        const ShardBlock& pred = chain[current.height - 1];
        if (shard_block_digest(pred) != current.prev_hash) {
            return false;
        }
        current = pred.header;
    }
    return current == older;
}

ValidationResult Ledger::check_root_intrinsic(
    const RootBlock& candidate, const RootBlock& prev,
    const std::vector<std::uint64_t>& covered, const VerifyContext& ctx,
    bool recheck_range) const {
    if (candidate.header.height != prev.header.height + 1) {
        return ValidationResult::fail("height mismatch");
    }
    if (candidate.header.prev_hash != root_block_digest(prev)) {
        return ValidationResult::fail("hash link broken");
    }
    if (candidate.body.empty()) {
        return ValidationResult::fail("empty body");
    }
    if (candidate.body.size() > config_.root_block_capacity) {
        return ValidationResult::fail("capacity exceeded");
    }

    // Entries must reference stored shard blocks, with per-shard heights
    // strictly ascending and strictly above the last covered height.
    std::map<std::uint32_t, std::vector<const ShardHeaderEntry*>> per_shard;
    for (const auto& e : candidate.body) {
        if (e.shard_index < 1 || e.shard_index > config_.shard_count) {
            return ValidationResult::fail("unknown shard block");
        }
        auto& list = per_shard[e.shard_index];
        if (!list.empty() &&
            list.back()->header.height >= e.header.height) {
            return ValidationResult::fail(
                list.back()->header.height == e.header.height
                    ? "duplicate shard header"
                    : "shard headers out of order");
        }
        list.push_back(&e);
    }

    for (const auto& [shard, entries] : per_shard) {
        const auto& chain = shard_chains_[shard - 1];
        const std::uint64_t low = covered[shard - 1];
        for (const auto* e : entries) {
            if (e->header.height <= low) {
                return ValidationResult::fail("stale shard header");
            }
            if (e->header.height >= chain.size()) {
                return ValidationResult::fail("unknown shard block");
            }
            const ShardBlock& stored = chain[e->header.height];
            if (stored.header != e->header ||
                shard_block_digest(stored) != e->block_hash) {
                return ValidationResult::fail("unknown shard block");
            }
        }

        // ob_i(candidate) must be [o_i(candidate) - o_i(last covering
        // root)]-hash-linked to the header that root observed.
        const ShardHeaderEntry* newest = entries.back();
        const ShardBlockHeader& older = chain[low].header;
        const std::int64_t k =
            static_cast<std::int64_t>(newest->header.height) -
            static_cast<std::int64_t>(low);
        if (!k_hash_link_check(shard, newest->header, older, k)) {
            return ValidationResult::fail("k-hash-link failed");
        }

        if (recheck_range) {
            for (std::uint64_t h = low + 1; h <= newest->header.height; ++h) {
                if (auto r = check_shard_link(chain[h], chain[h - 1]); !r) {
                    return ValidationResult::fail(
                        "covered shard block invalid: " + r.clause + " (" +
                        shard_where(shard, h) + ")");
                }
                if (auto r = check_shard_body(chain[h], ctx); !r) {
                    return ValidationResult::fail(
                        "covered shard block invalid: " + r.clause + " (" +
                        shard_where(shard, h) + ")");
                }
            }
        }
    }

    if (root_body_hash(candidate.body, candidate.confirmation) !=
        candidate.header.body_hash) {
        return ValidationResult::fail("body hash mismatch");
    }

    if (!candidate.confirmation) {
        return ValidationResult::fail("confirmation missing");
    }
    const auto& cs = *candidate.confirmation;
    if (!ctx.authorities.is_regulator(cs.signer)) {
        return ValidationResult::fail("confirmation signer not a regulator");
    }
    const Bytes* secret = ctx.authorities.secret_of(cs.signer);
    if (!secret ||
        !verify(cs, *secret,
                confirmation_content(candidate.header.prev_hash,
                                     candidate.header.height,
                                     candidate.header.created_at,
                                     candidate.body),
                cs.signer)) {
        return ValidationResult::fail("confirmation invalid");
    }
    return ValidationResult::pass();
}

ValidationResult Ledger::validate_root_block(const RootBlock& candidate,
                                             const VerifyContext& ctx) const {
    return check_root_intrinsic(candidate, root_chain_.back(), covered_, ctx,
                                /*recheck_range=*/true);
}

ValidationResult Ledger::append_shard_block(ShardBlock block,
                                            const VerifyContext& ctx) {
    if (auto r = validate_shard_block(block, ctx); !r) return r;
    auto& chain = shard_chain_mut(block.shard_index);
    for (std::size_t pos = 0; pos < block.body.size(); ++pos) {
        product_index_[block.body[pos].product_id].push_back(
            RecordLocation{block.shard_index, block.header.height, pos});
    }
    chain.push_back(std::move(block));
    return ValidationResult::pass();
}

ValidationResult Ledger::append_root_block(RootBlock block,
                                           const VerifyContext& ctx) {
    if (auto r = validate_root_block(block, ctx); !r) return r;
    for (const auto& e : block.body) {
        covered_[e.shard_index - 1] =
            std::max(covered_[e.shard_index - 1], e.header.height);
    }
    root_chain_.push_back(std::move(block));
    return ValidationResult::pass();
}

VerifyReport Ledger::verify_full(const VerifyContext& ctx) const {
    VerifyReport report;
    auto fail = [&](std::string where, std::string clause,
                    std::uint64_t root_context) {
        report.ok = false;
        report.failure =
            VerifyFailure{std::move(where), std::move(clause), root_context};
        return report;
    };

    if (!is_valid_root_genesis(root_chain_.front())) {
        return fail(root_where(0), "genesis malformed", 0);
    }
    for (std::uint32_t i = 1; i <= config_.shard_count; ++i) {
        if (!is_valid_shard_genesis(shard_chains_[i - 1].front())) {
            return fail(shard_where(i, 0), "genesis malformed", 0);
        }
    }

    std::vector<std::uint64_t> covered(config_.shard_count, 0);
    for (std::uint64_t q = 1; q < root_chain_.size(); ++q) {
        const RootBlock& rb = root_chain_[q];

        // Validate newly covered shard blocks first so a bad record is
        // reported at or before its covering root block.
        std::vector<std::uint64_t> new_covered = covered;
        for (const auto& e : rb.body) {
            if (e.shard_index < 1 || e.shard_index > config_.shard_count) {
                return fail(root_where(q), "unknown shard block", q);
            }
            auto& top = new_covered[e.shard_index - 1];
            top = std::max(top, e.header.height);
        }
        for (std::uint32_t i = 1; i <= config_.shard_count; ++i) {
            const auto& chain = shard_chains_[i - 1];
            const std::uint64_t hi =
                std::min<std::uint64_t>(new_covered[i - 1], chain.size() - 1);
            for (std::uint64_t h = covered[i - 1] + 1; h <= hi; ++h) {
                if (auto r = check_shard_link(chain[h], chain[h - 1]); !r) {
                    return fail(shard_where(i, h), r.clause, q);
                }
                if (auto r = check_shard_body(chain[h], ctx); !r) {
                    return fail(shard_where(i, h), r.clause, q);
                }
            }
        }

        if (auto r = check_root_intrinsic(rb, root_chain_[q - 1], covered, ctx,
                                          /*recheck_range=*/false);
            !r) {
            return fail(root_where(q), r.clause, q);
        }
        covered = std::move(new_covered);
    }

    // Shard tail not yet covered by any root block.
    for (std::uint32_t i = 1; i <= config_.shard_count; ++i) {
        const auto& chain = shard_chains_[i - 1];
        for (std::uint64_t h = covered[i - 1] + 1; h < chain.size(); ++h) {
            if (auto r = check_shard_link(chain[h], chain[h - 1]); !r) {
                return fail(shard_where(i, h), r.clause, UINT64_MAX);
            }
            if (auto r = check_shard_body(chain[h], ctx); !r) {
                return fail(shard_where(i, h), r.clause, UINT64_MAX);
            }
        }
    }
    return report;
}

std::vector<RecordLocation> Ledger::committed_locations(
    const domain::ProductId& product_id) const {
    std::vector<RecordLocation> out;
    auto it = product_index_.find(product_id);
    if (it == product_index_.end()) return out;
    for (const auto& loc : it->second) {
        if (loc.height <= covered_[loc.shard_index - 1]) {
            out.push_back(loc);
        }
    }
    return out;
}

const domain::TransactionRecord& Ledger::record_at(
    const RecordLocation& loc) const {
    const ShardBlock& block = shard_block_at(loc.shard_index, loc.height);
    if (loc.position >= block.body.size()) {
        throw ChainError("record position out of range");
    }
    return block.body[loc.position];
}

ShardBlock& Ledger::mutable_shard_block(std::uint32_t shard_index,
                                        std::uint64_t height) {
    auto& chain = shard_chain_mut(shard_index);
    if (height >= chain.size()) {
        throw ChainError("no block at height " + std::to_string(height));
    }
    return chain[height];
}

RootBlock& Ledger::mutable_root_block(std::uint64_t height) {
    if (height >= root_chain_.size()) {
        throw ChainError("no root block at height " + std::to_string(height));
    }
    return root_chain_[height];
}

void Ledger::dump(std::ostream& out) const {
    canonical::Value head{{"format", kLedgerFormat},
                          {"config", config_.to_value()}};
    out << to_string(canonical::encode(head)) << '\n';
    for (const auto& rb : root_chain_) {
        canonical::Value line{{"kind", "root"},
                              {"block", root_block_value(rb)}};
        out << to_string(canonical::encode(line)) << '\n';
    }
    for (std::uint32_t i = 1; i <= config_.shard_count; ++i) {
        for (const auto& sb : shard_chains_[i - 1]) {
            canonical::Value line{{"kind", "shard"},
                                  {"block", shard_block_value(sb)}};
            out << to_string(canonical::encode(line)) << '\n';
        }
    }
}

Ledger Ledger::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ChainError("empty ledger dump");
    }
    auto head = canonical::parse(line);
    if (head.value("format", std::string{}) != kLedgerFormat) {
        throw ChainError("unrecognized ledger dump format");
    }
    Ledger ledger(ChainConfig::from_value(head.at("config")));
    ledger.root_chain_.clear();
    for (auto& chain : ledger.shard_chains_) chain.clear();

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto v = canonical::parse(line);
        const auto kind = v.at("kind").get<std::string>();
        if (kind == "root") {
            ledger.root_chain_.push_back(root_block_from_value(v.at("block")));
        } else if (kind == "shard") {
            auto block = shard_block_from_value(v.at("block"));
            if (block.shard_index < 1 ||
                block.shard_index > ledger.config_.shard_count) {
                throw ChainError("dump references unknown shard");
            }
            ledger.shard_chains_[block.shard_index - 1].push_back(
                std::move(block));
        } else {
            throw ChainError("unrecognized dump line kind: " + kind);
        }
    }
    if (ledger.root_chain_.empty()) {
        throw ChainError("ledger dump has no root chain");
    }
    for (auto& chain : ledger.shard_chains_) {
        if (chain.empty()) {
            throw ChainError("ledger dump is missing a shard genesis");
        }
    }

    // Rebuild the derived state: coverage watermarks and the product index.
    for (const auto& rb : ledger.root_chain_) {
        for (const auto& e : rb.body) {
            if (e.shard_index < 1 ||
                e.shard_index > ledger.config_.shard_count) {
                throw ChainError("dump references unknown shard");
            }
            auto& top = ledger.covered_[e.shard_index - 1];
            top = std::max(top, e.header.height);
        }
    }
    for (std::uint32_t i = 1; i <= ledger.config_.shard_count; ++i) {
        const auto& chain = ledger.shard_chains_[i - 1];
        for (std::uint64_t h = 1; h < chain.size(); ++h) {
            const auto& body = chain[h].body;
            for (std::size_t pos = 0; pos < body.size(); ++pos) {
                ledger.product_index_[body[pos].product_id].push_back(
                    RecordLocation{i, h, pos});
            }
        }
    }
    return ledger;
}

const Ledger& fork_choice(std::span<const Ledger* const> candidates) {
    if (candidates.empty()) {
        throw ChainError("fork choice over an empty candidate set");
    }
    const Ledger* best = candidates.front();
    auto key = [](const Ledger& l) {
        const RootBlock& tip = l.root_chain().back();
        return std::tuple(l.root_height(), tip.header.created_at,
                          root_block_digest(tip));
    };
    auto best_key = key(*best);
    for (const Ledger* c : candidates.subspan(1)) {
        auto k = key(*c);
        // Longest root chain wins; ties fall to the earlier tip timestamp,
        // then the smaller tip digest.
        if (std::get<0>(k) > std::get<0>(best_key) ||
            (std::get<0>(k) == std::get<0>(best_key) &&
             (std::get<1>(k) < std::get<1>(best_key) ||
              (std::get<1>(k) == std::get<1>(best_key) &&
               std::get<2>(k) < std::get<2>(best_key))))) {
            best = c;
            best_key = k;
        }
    }
    return *best;
}

}  // namespace ihsc::chain
