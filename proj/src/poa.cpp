#include "ihsc/poa.hpp"

#include <algorithm>

namespace ihsc::poa {

namespace {

std::string validator_id(std::uint32_t shard_index, std::size_t n) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "shard%u-validator-%03zu", shard_index, n);
    return buf;
}

std::string regulator_id(std::size_t n) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "regulator-%03zu", n);
    return buf;
}

}  // namespace

ValidatorPool::ValidatorPool(std::uint32_t shard_index, std::size_t size,
                             const std::string& deployment_seed)
    : shard_index_(shard_index) {
    (void)deployment_seed;
    ids_.reserve(size);
    for (std::size_t n = 0; n < size; ++n) {
        ids_.push_back(validator_id(shard_index, n));
    }
    available_.assign(size, true);
}

bool ValidatorPool::contains(const SignerId& id) const {
    return std::find(ids_.begin(), ids_.end(), id) != ids_.end();
}

void ValidatorPool::set_available(const SignerId& id, bool available) {
    auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) {
        throw PoaError("unknown validator: " + id);
    }
    available_[static_cast<std::size_t>(it - ids_.begin())] = available;
}

std::size_t ValidatorPool::available_count() const {
    return static_cast<std::size_t>(
        std::count(available_.begin(), available_.end(), true));
}

std::optional<SignerId> ValidatorPool::pick_available(Rng& rng) const {
    if (ids_.empty()) {
        throw PoaError("validator pool for shard " +
                       std::to_string(shard_index_) + " is empty");
    }
    const std::size_t n = available_count();
    if (n == 0) return std::nullopt;
    std::uint64_t pick = rng.uniform_below(n);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!available_[i]) continue;
        if (pick == 0) return ids_[i];
        --pick;
    }
    return std::nullopt;  // unreachable
}

RegulatorPool::RegulatorPool(std::size_t size,
                             const std::string& deployment_seed) {
    (void)deployment_seed;
    ids_.reserve(size);
    for (std::size_t n = 0; n < size; ++n) ids_.push_back(regulator_id(n));
}

bool RegulatorPool::contains(const SignerId& id) const {
    return std::find(ids_.begin(), ids_.end(), id) != ids_.end();
}

const SignerId& RegulatorPool::pick(Rng& rng) const {
    if (ids_.empty()) {
        throw PoaError("regulator pool is empty");
    }
    return ids_[rng.uniform_below(ids_.size())];
}

AuthorityPools::AuthorityPools(std::uint32_t shard_count,
                               std::size_t validators_per_shard,
                               std::size_t regulator_count,
                               const std::string& deployment_seed)
    : regulators_(regulator_count, deployment_seed) {
    validator_pools_.reserve(shard_count);
    for (std::uint32_t i = 1; i <= shard_count; ++i) {
        validator_pools_.emplace_back(i, validators_per_shard, deployment_seed);
        for (const auto& id : validator_pools_.back().ids()) {
            keys_.put(id, derive_secret(deployment_seed, id));
        }
    }
    for (const auto& id : regulators_.ids()) {
        keys_.put(id, derive_secret(deployment_seed, id));
    }
}

const ValidatorPool& AuthorityPools::validators(
    std::uint32_t shard_index) const {
    if (shard_index < 1 || shard_index > validator_pools_.size()) {
        throw PoaError("unknown shard index " + std::to_string(shard_index));
    }
    return validator_pools_[shard_index - 1];
}

ValidatorPool& AuthorityPools::validators(std::uint32_t shard_index) {
    if (shard_index < 1 || shard_index > validator_pools_.size()) {
        throw PoaError("unknown shard index " + std::to_string(shard_index));
    }
    return validator_pools_[shard_index - 1];
}

const Bytes* AuthorityPools::secret_of(const SignerId& id) const {
    return keys_.find(id);
}

bool AuthorityPools::is_shard_validator(std::uint32_t shard_index,
                                        const SignerId& id) const {
    if (shard_index < 1 || shard_index > validator_pools_.size()) return false;
    return validator_pools_[shard_index - 1].contains(id);
}

bool AuthorityPools::is_regulator(const SignerId& id) const {
    return regulators_.contains(id);
}

VerificationOutcome AuthorityPools::dispatch_onsite(
    std::uint32_t shard_index, const domain::TransactionRecord& record,
    Decision decision, Rng& rng) const {
    if (!domain::requires_onsite(record.operation)) {
        throw PoaError("record " + record.record_id +
                       " does not require on-site verification");
    }
    auto picked = validators(shard_index).pick_available(rng);
    if (!picked) {
        throw PoaError("no available validator in shard " +
                       std::to_string(shard_index));
    }
    VerificationOutcome outcome;
    outcome.record_id = record.record_id;
    outcome.validator = *picked;
    if (decision == Decision::Approve) {
        outcome.verdict = Verdict::Approved;
        const Bytes* secret = keys_.find(*picked);
        outcome.signature =
            sign(*secret,
                 canonical::encode(domain::record_content_value(record)),
                 *picked);
    } else {
        outcome.verdict = Verdict::Rejected;
        outcome.error = "unapproved by local authority";
    }
    return outcome;
}

VerificationOutcome AuthorityPools::verify_online(
    const domain::TransactionRecord& record,
    const domain::ParticipantRegistry& registry) const {
    if (domain::requires_onsite(record.operation)) {
        throw PoaError("record " + record.record_id +
                       " requires on-site verification");
    }
    VerificationOutcome outcome;
    outcome.record_id = record.record_id;
    outcome.violations = domain::validate_schema(record, registry);
    outcome.verdict = outcome.violations.empty() ? Verdict::Approved
                                                 : Verdict::Rejected;
    return outcome;
}

KeyedSignature AuthorityPools::sign_block_verification(
    std::uint32_t shard_index, const SignerId& validator,
    const std::vector<std::string>& onsite_record_ids) const {
    if (!is_shard_validator(shard_index, validator)) {
        throw PoaError("validator " + validator + " not in shard " +
                       std::to_string(shard_index));
    }
    return sign(*keys_.find(validator),
                chain::verification_content(shard_index, onsite_record_ids),
                validator);
}

KeyedSignature AuthorityPools::confirm_root(
    const chain::Ledger& ledger,
    const std::vector<chain::ShardHeaderEntry>& body, const Digest& prev_hash,
    std::uint64_t height, std::int64_t created_at, Rng& rng) const {
    for (const auto& e : body) {
        // Regulators confirm only headers of validated, stored shard blocks.
        if (e.shard_index < 1 || e.shard_index > ledger.shard_count() ||
            e.header.height > ledger.shard_height(e.shard_index)) {
            throw PoaError("confirmation refused: unknown shard block");
        }
        const auto& stored =
            ledger.shard_block_at(e.shard_index, e.header.height);
        if (stored.header != e.header ||
            chain::shard_block_digest(stored) != e.block_hash) {
            throw PoaError("confirmation refused: header does not match a "
                           "validated shard block");
        }
    }
    const SignerId& regulator = regulators_.pick(rng);
    return sign(*keys_.find(regulator),
                chain::confirmation_content(prev_hash, height, created_at,
                                            body),
                regulator);
}

}  // namespace ihsc::poa
