#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "ihsc/chain.hpp"
#include "ihsc/domain.hpp"
#include "ihsc/poa.hpp"
#include "ihsc/rng.hpp"
#include "ihsc/store.hpp"

namespace ihsc::node {

class NodeError : public std::runtime_error {
public:
    explicit NodeError(const std::string& what) : std::runtime_error(what) {}
};

struct NodeConfig {
    chain::ChainConfig chain;
    std::size_t validators_per_shard = 175;
    std::size_t regulator_count = 50;
    std::string deployment_seed = "ihsc";
    std::uint64_t rng_seed = 1;
    std::filesystem::path store_root = "ihsc-store";
    std::filesystem::path state_dir;  // empty: no persistence
    double tick_scale = 1.0;          // virtual seconds per wall second
    std::uint16_t http_port = 8080;

    static NodeConfig from_json(const nlohmann::json& j);
    static NodeConfig from_file(const std::filesystem::path& path);
};

enum class ReceiptStatus {
    Pending,               // buffered or awaiting an on-site decision
    Accepted,              // covered by a validated root block (U = 1)
    RejectedVerification,  // schema violation or on-site rejection
    RejectedValidation,    // a validity clause failed at block level
};

std::string receipt_status_name(ReceiptStatus status);

struct CreationReceipt {
    std::string record_id;
    ReceiptStatus status = ReceiptStatus::Pending;
    std::uint32_t shard_index = 0;
    std::optional<std::uint64_t> shard_height;
    std::optional<std::uint64_t> root_height;
    std::string error;
    std::vector<std::string> violations;
    bool awaiting_decision = false;
};

struct Attachment {
    std::string name;
    Bytes content;
};

/// One record heading into Algorithm-1: the record body, who the node should
/// sign for (or pre-computed signatures inside the record), any large files
/// to offload, and — for regulated records — the on-site decision when it is
/// already known (batch/sim mode).
struct RecordSubmission {
    domain::TransactionRecord record;
    std::vector<SignerId> sign_as;
    std::vector<Attachment> attachments;
    std::optional<poa::Decision> decision;
};

struct RetrievedRecord {
    domain::TransactionRecord record;
    std::vector<std::pair<FileRef, Bytes>> files;
};

struct ProducedBlock {
    enum class Kind { Shard, Root };
    Kind kind = Kind::Shard;
    std::uint32_t shard_index = 0;  // 0 for root blocks
    std::uint64_t height = 0;
    std::size_t record_count = 0;
};

/// Single logical full node holding the whole cluster: registry, authority
/// pools, the two-layer ledger, the off-chain store, and the record
/// pipeline. Time is virtual; produce_blocks() advances it.
class Node {
public:
    explicit Node(NodeConfig config);

    const NodeConfig& config() const { return config_; }
    const chain::Ledger& ledger() const { return ledger_; }
    const domain::ParticipantRegistry& participants() const {
        return registry_;
    }
    poa::AuthorityPools& pools() { return pools_; }
    store::FileStore& file_store() { return store_; }
    chain::VerifyContext verify_context() const { return {registry_, pools_}; }

    double now() const { return now_; }

    /// Registers (or re-registers) a participant; returns profile violations,
    /// empty on success. The signing key is derived from the deployment seed.
    std::vector<std::string> register_participant(
        const domain::ParticipantProfile& profile);

    /// Assigns a fresh product id, or registers the requested one.
    domain::ProductId create_product(const std::string& requested = {});
    bool has_product(const domain::ProductId& id) const;

    /// Algorithm-1 steps 1-5.1: offload files, sign, verify (online or
    /// on-site), and buffer. Commitment happens at the block ticks. For
    /// regulated records without a decision, the receipt stays pending until
    /// decide() is called.
    CreationReceipt submit_record(RecordSubmission submission,
                                  std::uint32_t shard_index);

    /// Full synchronous Algorithm-1: submit, then advance block production
    /// until the record's covering root block is validated (or rejection).
    CreationReceipt create_record(RecordSubmission submission,
                                  std::uint32_t shard_index);

    /// Live-mode on-site decision for a pending record.
    CreationReceipt decide(const std::string& record_id,
                           poa::Decision decision);

    const CreationReceipt* receipt(const std::string& record_id) const;

    /// Fires every shard/root tick with boundary <= t (virtual seconds);
    /// shard ticks fire before a coinciding root tick. Returns the blocks
    /// produced.
    std::vector<ProducedBlock> produce_blocks(double t);

    std::vector<ProducedBlock> advance(double seconds) {
        return produce_blocks(now_ + seconds);
    }

    /// Advance until every buffer is empty and no receipt is pending on
    /// block production (awaiting-decision records excluded).
    void drain();

    /// Algorithm-2: committed records for the product in chain order, each
    /// anchored file fetched and digest-verified. File tampering surfaces as
    /// store::StoreError ("database is tampered").
    std::vector<RetrievedRecord> retrieve_records(
        const domain::ProductId& product_id) const;

    chain::VerifyReport verify_ledger() const {
        return ledger_.verify_full(verify_context());
    }

    void dump_ledger(std::ostream& out) const { ledger_.dump(out); }

    std::size_t pending_records(std::uint32_t shard_index) const;
    std::size_t pending_headers() const { return root_pending_.size(); }

    /// Persist ledger, participants and products under state_dir.
    void save_state() const;
    /// Reload persisted state written by save_state(); fresh node otherwise.
    static std::unique_ptr<Node> open(NodeConfig config);

private:
    struct PendingRecord {
        domain::TransactionRecord record;
        std::optional<SignerId> onsite_validator;
    };
    struct AwaitingDecision {
        domain::TransactionRecord record;
        std::uint32_t shard_index;
    };

    CreationReceipt& buffer_verified(domain::TransactionRecord record,
                                     std::uint32_t shard_index,
                                     std::optional<SignerId> validator);
    void fire_shard_tick(std::int64_t tick_time,
                         std::vector<ProducedBlock>& produced);
    void fire_root_tick(std::int64_t tick_time,
                        std::vector<ProducedBlock>& produced);
    CreationReceipt advance_until_resolved(const std::string& record_id);

    NodeConfig config_;
    domain::ParticipantRegistry registry_;
    poa::AuthorityPools pools_;
    chain::Ledger ledger_;
    store::FileStore store_;
    Rng rng_;

    double now_ = 0.0;
    std::int64_t fired_shard_ticks_ = 0;
    std::int64_t fired_root_ticks_ = 0;

    std::vector<std::deque<PendingRecord>> shard_pending_;
    std::deque<chain::ShardHeaderEntry> root_pending_;
    std::map<std::string, CreationReceipt> receipts_;
    std::map<std::string, AwaitingDecision> awaiting_decision_;
    std::map<domain::ProductId, std::int64_t> products_;
    std::uint64_t product_counter_ = 0;
};

}  // namespace ihsc::node
