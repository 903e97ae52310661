#include "ihsc/node.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ihsc::node {

namespace {

namespace fs = std::filesystem;

chain::ChainConfig chain_config_from_json(const nlohmann::json& j) {
    chain::ChainConfig c;
    c.shard_count = j.value("shard_count", c.shard_count);
    c.shard_block_capacity =
        j.value("shard_block_capacity", c.shard_block_capacity);
    c.root_block_capacity =
        j.value("root_block_capacity", c.root_block_capacity);
    c.shard_interval_s = j.value("shard_interval", c.shard_interval_s);
    c.root_interval_s = j.value("root_interval", c.root_interval_s);
    c.validate();
    return c;
}

}  // namespace

NodeConfig NodeConfig::from_json(const nlohmann::json& j) {
    NodeConfig cfg;
    if (j.contains("chain")) cfg.chain = chain_config_from_json(j.at("chain"));
    cfg.validators_per_shard =
        j.value("validators_per_shard", cfg.validators_per_shard);
    cfg.regulator_count = j.value("regulators", cfg.regulator_count);
    cfg.deployment_seed = j.value("deployment_seed", cfg.deployment_seed);
    cfg.rng_seed = j.value("rng_seed", cfg.rng_seed);
    cfg.store_root = fs::path(j.value("store_root", cfg.store_root.string()));
    cfg.state_dir = fs::path(j.value("state_dir", cfg.state_dir.string()));
    cfg.tick_scale = j.value("tick_scale", cfg.tick_scale);
    cfg.http_port = j.value("http_port", cfg.http_port);
    return cfg;
}

NodeConfig NodeConfig::from_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw NodeError("cannot open config file " + path.string());
    }
    return from_json(nlohmann::json::parse(in));
}

std::string receipt_status_name(ReceiptStatus status) {
    switch (status) {
        case ReceiptStatus::Pending: return "pending";
        case ReceiptStatus::Accepted: return "accepted";
        case ReceiptStatus::RejectedVerification:
            return "rejected-verification";
        case ReceiptStatus::RejectedValidation: return "rejected-validation";
    }
    return "unknown";
}

Node::Node(NodeConfig config)
    : config_(std::move(config)),
      pools_(config_.chain.shard_count, config_.validators_per_shard,
             config_.regulator_count, config_.deployment_seed),
      ledger_(config_.chain),
      store_(config_.store_root),
      rng_(derive_seed(config_.rng_seed, "node")) {
    shard_pending_.resize(config_.chain.shard_count);
}

std::vector<std::string> Node::register_participant(
    const domain::ParticipantProfile& profile) {
    auto violations = domain::validate_profile(profile);
    if (!violations.empty()) return violations;
    registry_.register_participant(
        profile, derive_secret(config_.deployment_seed,
                               profile.participant_id));
    return {};
}

domain::ProductId Node::create_product(const std::string& requested) {
    domain::ProductId id = requested;
    if (id.empty()) {
        id = "P-" +
             canonical::encode_digest(
                 canonical::Value::array({"ihsc.product.v1",
                                          config_.deployment_seed,
                                          product_counter_++}))
                 .hex()
                 .substr(0, 12);
    }
    products_.emplace(id, static_cast<std::int64_t>(std::llround(now_)));
    return id;
}

bool Node::has_product(const domain::ProductId& id) const {
    return products_.contains(id);
}

CreationReceipt& Node::buffer_verified(domain::TransactionRecord record,
                                       std::uint32_t shard_index,
                                       std::optional<SignerId> validator) {
    auto& receipt = receipts_[record.record_id];
    receipt.awaiting_decision = false;
    shard_pending_[shard_index - 1].push_back(
        PendingRecord{std::move(record), std::move(validator)});
    return receipt;
}

CreationReceipt Node::submit_record(RecordSubmission submission,
                                    std::uint32_t shard_index) {
    if (shard_index < 1 || shard_index > config_.chain.shard_count) {
        throw NodeError("unknown shard index " + std::to_string(shard_index));
    }
    auto& record = submission.record;
    record.created_at = static_cast<std::int64_t>(std::llround(now_));

    // Step 3: offload large files, anchor digest + URI on the record.
    for (const auto& attachment : submission.attachments) {
        record.file_refs.push_back(store_.put_file(attachment.content));
    }

    // Sign on behalf of the named participants when asked.
    if (!submission.sign_as.empty()) {
        record.signatures.clear();
        const Bytes content = domain::record_signing_content(record);
        for (const auto& id : submission.sign_as) {
            const Bytes* secret = registry_.secret_of(id);
            if (!secret) {
                CreationReceipt receipt;
                receipt.status = ReceiptStatus::RejectedVerification;
                receipt.shard_index = shard_index;
                receipt.violations = {"unknown participant: " + id};
                receipt.error = "unknown participant: " + id;
                return receipt;
            }
            record.signatures.push_back(sign(*secret, content, id));
        }
    }
    record.record_id = domain::compute_record_id(record);

    if (auto it = receipts_.find(record.record_id); it != receipts_.end() &&
        it->second.status != ReceiptStatus::RejectedVerification &&
        it->second.status != ReceiptStatus::RejectedValidation) {
        return it->second;  // identical content already in flight
    }

    CreationReceipt receipt;
    receipt.record_id = record.record_id;
    receipt.shard_index = shard_index;

    auto violations = domain::validate_schema(record, registry_);
    if (!violations.empty()) {
        receipt.status = ReceiptStatus::RejectedVerification;
        receipt.violations = std::move(violations);
        receipt.error = "schema violation: " + receipt.violations.front();
        receipts_[record.record_id] = receipt;
        return receipt;
    }

    if (!products_.contains(record.product_id)) {
        create_product(record.product_id);
    }

    if (domain::requires_onsite(record.operation)) {
        if (!submission.decision) {
            receipt.status = ReceiptStatus::Pending;
            receipt.awaiting_decision = true;
            receipts_[record.record_id] = receipt;
            awaiting_decision_[record.record_id] =
                AwaitingDecision{record, shard_index};
            return receipt;
        }
        auto outcome = pools_.dispatch_onsite(shard_index, record,
                                              *submission.decision, rng_);
        if (!outcome.approved()) {
            receipt.status = ReceiptStatus::RejectedVerification;
            receipt.error = outcome.error;
            receipts_[record.record_id] = receipt;
            return receipt;
        }
        receipts_[record.record_id] = receipt;
        return buffer_verified(record, shard_index, outcome.validator);
    }

    auto outcome = pools_.verify_online(record, registry_);
    if (!outcome.approved()) {
        receipt.status = ReceiptStatus::RejectedVerification;
        receipt.violations = outcome.violations;
        receipt.error = "schema violation";
        receipts_[record.record_id] = receipt;
        return receipt;
    }
    receipts_[record.record_id] = receipt;
    return buffer_verified(record, shard_index, std::nullopt);
}

CreationReceipt Node::decide(const std::string& record_id,
                             poa::Decision decision) {
    auto it = awaiting_decision_.find(record_id);
    if (it == awaiting_decision_.end()) {
        throw NodeError("no record awaiting an on-site decision: " +
                        record_id);
    }
    auto [record, shard_index] = it->second;
    awaiting_decision_.erase(it);

    auto& receipt = receipts_[record_id];
    auto outcome = pools_.dispatch_onsite(shard_index, record, decision, rng_);
    if (!outcome.approved()) {
        receipt.status = ReceiptStatus::RejectedVerification;
        receipt.awaiting_decision = false;
        receipt.error = outcome.error;
        return receipt;
    }
    return buffer_verified(std::move(record), shard_index, outcome.validator);
}

const CreationReceipt* Node::receipt(const std::string& record_id) const {
    auto it = receipts_.find(record_id);
    return it == receipts_.end() ? nullptr : &it->second;
}

void Node::fire_shard_tick(std::int64_t tick_time,
                           std::vector<ProducedBlock>& produced) {
    for (std::uint32_t shard = 1; shard <= config_.chain.shard_count;
         ++shard) {
        auto& queue = shard_pending_[shard - 1];
        if (queue.empty()) continue;

        std::vector<domain::TransactionRecord> records;
        std::vector<std::string> onsite_ids;
        std::optional<SignerId> block_validator;
        while (records.size() < config_.chain.shard_block_capacity &&
               !queue.empty()) {
            auto& next = queue.front();
            if (next.onsite_validator) {
                if (!block_validator) block_validator = next.onsite_validator;
                onsite_ids.push_back(next.record.record_id);
            }
            records.push_back(std::move(next.record));
            queue.pop_front();
        }

        std::optional<KeyedSignature> verification;
        if (!onsite_ids.empty()) {
            // One Verification slot per block: signed by the validator who
            // handled the block's first on-site record.
            verification = pools_.sign_block_verification(
                shard, *block_validator, onsite_ids);
        }
        auto block = chain::make_shard_block(
            shard, std::move(records), std::move(verification),
            ledger_.shard_tip_digest(shard), ledger_.shard_height(shard) + 1,
            tick_time);

        auto result = ledger_.append_shard_block(block, verify_context());
        if (!result.ok) {
            for (const auto& r : block.body) {
                auto& receipt = receipts_[r.record_id];
                receipt.status = ReceiptStatus::RejectedValidation;
                receipt.error = result.clause;
            }
            continue;
        }
        for (const auto& r : block.body) {
            receipts_[r.record_id].shard_height = block.header.height;
        }
        root_pending_.push_back(chain::make_header_entry(block));
        produced.push_back(ProducedBlock{ProducedBlock::Kind::Shard, shard,
                                         block.header.height,
                                         block.body.size()});
    }
}

void Node::fire_root_tick(std::int64_t tick_time,
                          std::vector<ProducedBlock>& produced) {
    if (root_pending_.empty()) return;  // zero new headers: skip the block

    std::vector<chain::ShardHeaderEntry> body;
    while (!root_pending_.empty() &&
           body.size() < config_.chain.root_block_capacity) {
        body.push_back(root_pending_.front());
        root_pending_.pop_front();
    }

    std::vector<std::uint64_t> prev_covered;
    for (std::uint32_t s = 1; s <= config_.chain.shard_count; ++s) {
        prev_covered.push_back(ledger_.covered_height(s));
    }

    const Digest prev_hash = ledger_.root_tip_digest();
    const std::uint64_t height = ledger_.root_height() + 1;
    auto confirmation = pools_.confirm_root(ledger_, body, prev_hash, height,
                                            tick_time, rng_);
    auto block = chain::make_root_block(std::move(body), confirmation,
                                        prev_hash, height, tick_time);
    auto result = ledger_.append_root_block(block, verify_context());
    if (!result.ok) {
        for (const auto& e : block.body) {
            for (const auto& r :
                 ledger_.shard_block_at(e.shard_index, e.header.height).body) {
                auto& receipt = receipts_[r.record_id];
                receipt.status = ReceiptStatus::RejectedValidation;
                receipt.error = result.clause;
            }
        }
        return;
    }

    // U(record) = V_r of the covering root block: flip every newly covered
    // record to accepted.
    std::size_t covered_records = 0;
    for (std::uint32_t s = 1; s <= config_.chain.shard_count; ++s) {
        for (std::uint64_t h = prev_covered[s - 1] + 1;
             h <= ledger_.covered_height(s); ++h) {
            for (const auto& r : ledger_.shard_block_at(s, h).body) {
                auto& receipt = receipts_[r.record_id];
                receipt.status = ReceiptStatus::Accepted;
                receipt.root_height = height;
                ++covered_records;
            }
        }
    }
    produced.push_back(ProducedBlock{ProducedBlock::Kind::Root, 0, height,
                                     covered_records});
}

std::vector<ProducedBlock> Node::produce_blocks(double t) {
    if (t < now_) {
        throw NodeError("produce_blocks ticks must be monotone");
    }
    std::vector<ProducedBlock> produced;
    const auto shard_dt = static_cast<double>(config_.chain.shard_interval_s);
    const auto root_dt = static_cast<double>(config_.chain.root_interval_s);
    while (true) {
        const double next_shard = (fired_shard_ticks_ + 1) * shard_dt;
        const double next_root = (fired_root_ticks_ + 1) * root_dt;
        if (next_shard > t && next_root > t) break;
        if (next_shard <= next_root) {
            fire_shard_tick(static_cast<std::int64_t>(std::llround(next_shard)),
                            produced);
            ++fired_shard_ticks_;
        } else {
            fire_root_tick(static_cast<std::int64_t>(std::llround(next_root)),
                           produced);
            ++fired_root_ticks_;
        }
    }
    now_ = std::max(now_, t);
    return produced;
}

void Node::drain() {
    const double step = static_cast<double>(config_.chain.root_interval_s);
    for (int guard = 0; guard < 100000; ++guard) {
        bool idle = root_pending_.empty();
        for (const auto& q : shard_pending_) idle = idle && q.empty();
        if (idle) return;
        advance(step);
    }
    throw NodeError("drain did not converge");
}

CreationReceipt Node::advance_until_resolved(const std::string& record_id) {
    const double step = static_cast<double>(config_.chain.shard_interval_s);
    for (int guard = 0; guard < 1000000; ++guard) {
        const auto& receipt = receipts_.at(record_id);
        if (receipt.status != ReceiptStatus::Pending ||
            receipt.awaiting_decision) {
            return receipt;
        }
        advance(step);
    }
    throw NodeError("record did not resolve: " + record_id);
}

CreationReceipt Node::create_record(RecordSubmission submission,
                                    std::uint32_t shard_index) {
    auto receipt = submit_record(std::move(submission), shard_index);
    if (receipt.status != ReceiptStatus::Pending || receipt.awaiting_decision) {
        return receipt;
    }
    return advance_until_resolved(receipt.record_id);
}

std::vector<RetrievedRecord> Node::retrieve_records(
    const domain::ProductId& product_id) const {
    auto locations = ledger_.committed_locations(product_id);
    std::sort(locations.begin(), locations.end(),
              [&](const chain::RecordLocation& a,
                  const chain::RecordLocation& b) {
                  const auto ra = ledger_.covering_root(a.shard_index, a.height);
                  const auto rb = ledger_.covering_root(b.shard_index, b.height);
                  return std::tuple(ra.value_or(UINT64_MAX), a.shard_index,
                                    a.height, a.position) <
                         std::tuple(rb.value_or(UINT64_MAX), b.shard_index,
                                    b.height, b.position);
              });
    std::vector<RetrievedRecord> out;
    out.reserve(locations.size());
    for (const auto& loc : locations) {
        RetrievedRecord item;
        item.record = ledger_.record_at(loc);
        for (const auto& ref : item.record.file_refs) {
            // Algorithm-2 step 4: fetch and compare against the on-chain
            // anchor; a mismatch aborts the whole retrieval.
            item.files.emplace_back(ref, store_.get_verified(ref));
        }
        out.push_back(std::move(item));
    }
    return out;
}

std::size_t Node::pending_records(std::uint32_t shard_index) const {
    if (shard_index < 1 || shard_index > shard_pending_.size()) {
        throw NodeError("unknown shard index");
    }
    return shard_pending_[shard_index - 1].size();
}

void Node::save_state() const {
    if (config_.state_dir.empty()) return;
    fs::create_directories(config_.state_dir);
    {
        std::ofstream out(config_.state_dir / "ledger.dump",
                          std::ios::binary | std::ios::trunc);
        ledger_.dump(out);
    }
    {
        std::ofstream out(config_.state_dir / "participants.jsonl",
                          std::ios::trunc);
        for (const auto& [id, profile] : registry_.profiles()) {
            nlohmann::json j{{"participant_id", profile.participant_id},
                             {"role", domain::role_name(profile.role)},
                             {"info", profile.info}};
            out << j.dump() << '\n';
        }
    }
    {
        std::ofstream out(config_.state_dir / "products.jsonl",
                          std::ios::trunc);
        for (const auto& [id, created] : products_) {
            nlohmann::json j{{"product_id", id}, {"created_at", created}};
            out << j.dump() << '\n';
        }
    }
}

std::unique_ptr<Node> Node::open(NodeConfig config) {
    auto node = std::make_unique<Node>(config);
    if (config.state_dir.empty()) return node;

    const fs::path ledger_path = config.state_dir / "ledger.dump";
    if (fs::exists(config.state_dir / "participants.jsonl")) {
        std::ifstream in(config.state_dir / "participants.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line);
            domain::ParticipantProfile profile;
            profile.participant_id = j.at("participant_id").get<std::string>();
            auto role = domain::role_from_name(j.at("role").get<std::string>());
            if (!role) throw NodeError("unknown role in participants.jsonl");
            profile.role = *role;
            for (const auto& [k, v] : j.at("info").items()) {
                profile.info[k] = v.get<std::string>();
            }
            node->register_participant(profile);
        }
    }
    if (fs::exists(config.state_dir / "products.jsonl")) {
        std::ifstream in(config.state_dir / "products.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line);
            node->products_[j.at("product_id").get<std::string>()] =
                j.at("created_at").get<std::int64_t>();
        }
    }
    if (fs::exists(ledger_path)) {
        std::ifstream in(ledger_path, std::ios::binary);
        node->ledger_ = chain::Ledger::load(in);
        auto report = node->verify_ledger();
        if (!report.ok) {
            throw NodeError("persisted ledger failed revalidation: " +
                            report.failure->clause + " at " +
                            report.failure->where);
        }
        // Resume the clocks after the last recorded tick.
        const auto& roots = node->ledger_.root_chain();
        std::int64_t last = roots.back().header.created_at;
        for (std::uint32_t s = 1; s <= node->ledger_.shard_count(); ++s) {
            last = std::max(last,
                            node->ledger_.shard_chain(s).back().header
                                .created_at);
        }
        node->now_ = static_cast<double>(last);
        node->fired_shard_ticks_ = last / config.chain.shard_interval_s;
        node->fired_root_ticks_ = last / config.chain.root_interval_s;
        // Rebuild receipts for committed records.
        for (std::uint32_t s = 1; s <= node->ledger_.shard_count(); ++s) {
            const auto& chain_blocks = node->ledger_.shard_chain(s);
            for (std::uint64_t h = 1; h < chain_blocks.size(); ++h) {
                for (const auto& r : chain_blocks[h].body) {
                    auto& receipt = node->receipts_[r.record_id];
                    receipt.record_id = r.record_id;
                    receipt.shard_index = s;
                    receipt.shard_height = h;
                    auto covering = node->ledger_.covering_root(s, h);
                    if (covering) {
                        receipt.status = ReceiptStatus::Accepted;
                        receipt.root_height = *covering;
                    }
                }
            }
        }
    }
    return node;
}

}  // namespace ihsc::node
