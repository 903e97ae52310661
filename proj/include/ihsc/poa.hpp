#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ihsc/chain.hpp"
#include "ihsc/domain.hpp"
#include "ihsc/rng.hpp"
#include "ihsc/signature.hpp"

namespace ihsc::poa {

class PoaError : public std::runtime_error {
public:
    explicit PoaError(const std::string& what) : std::runtime_error(what) {}
};

enum class Decision { Approve, Reject };

enum class Verdict { Approved, Rejected };

/// Result of dispatching one record to an authority.
struct VerificationOutcome {
    std::string record_id;
    Verdict verdict = Verdict::Rejected;
    SignerId validator;  // empty for online-only approvals
    // Present iff approved by an on-site validator; verifies over the
    // record's canonical bytes.
    std::optional<KeyedSignature> signature;
    std::vector<std::string> violations;  // online rejections carry these
    std::string error;  // "unapproved by local authority" on on-site reject

    bool approved() const { return verdict == Verdict::Approved; }
};

/// Per-area pool of local-authority validators with deterministic keys and
/// an availability flag per validator.
class ValidatorPool {
public:
    ValidatorPool() = default;
    ValidatorPool(std::uint32_t shard_index, std::size_t size,
                  const std::string& deployment_seed);

    std::size_t size() const { return ids_.size(); }
    const std::vector<SignerId>& ids() const { return ids_; }
    bool contains(const SignerId& id) const;

    void set_available(const SignerId& id, bool available);
    std::size_t available_count() const;

    /// Uniform pick among available validators; throws when the pool is
    /// empty, returns nullopt when all members are busy.
    std::optional<SignerId> pick_available(Rng& rng) const;

private:
    std::uint32_t shard_index_ = 0;
    std::vector<SignerId> ids_;
    std::vector<bool> available_;
};

class RegulatorPool {
public:
    RegulatorPool() = default;
    RegulatorPool(std::size_t size, const std::string& deployment_seed);

    std::size_t size() const { return ids_.size(); }
    const std::vector<SignerId>& ids() const { return ids_; }
    bool contains(const SignerId& id) const;
    const SignerId& pick(Rng& rng) const;

private:
    std::vector<SignerId> ids_;
};

/// The deployment's authority set: one validator pool per shard plus the
/// regulator pool, with every secret derived from the deployment seed.
class AuthorityPools : public AuthorityDirectory {
public:
    AuthorityPools(std::uint32_t shard_count, std::size_t validators_per_shard,
                   std::size_t regulator_count,
                   const std::string& deployment_seed);

    const ValidatorPool& validators(std::uint32_t shard_index) const;
    ValidatorPool& validators(std::uint32_t shard_index);
    const RegulatorPool& regulators() const { return regulators_; }

    const Bytes* secret_of(const SignerId& id) const override;
    bool is_shard_validator(std::uint32_t shard_index,
                            const SignerId& id) const override;
    bool is_regulator(const SignerId& id) const override;

    /// Eq.-(1) dispatch: pick a validator of area `shard_index` uniformly at
    /// random and apply the caller's decision. Approval attaches the
    /// validator's signature over the record's canonical bytes.
    VerificationOutcome dispatch_onsite(std::uint32_t shard_index,
                                        const domain::TransactionRecord& record,
                                        Decision decision, Rng& rng) const;

    /// Automatic approval for online-only records, gated by the schema.
    VerificationOutcome verify_online(
        const domain::TransactionRecord& record,
        const domain::ParticipantRegistry& registry) const;

    /// Shard-block Verification signature by the named validator over the
    /// block's on-site record ids.
    KeyedSignature sign_block_verification(
        std::uint32_t shard_index, const SignerId& validator,
        const std::vector<std::string>& onsite_record_ids) const;

    /// Root confirmation: a regulator picked uniformly at random signs the
    /// header set (plus the root header scaffold). Refuses any header that
    /// does not match a validated block stored in the ledger.
    KeyedSignature confirm_root(const chain::Ledger& ledger,
                                const std::vector<chain::ShardHeaderEntry>& body,
                                const Digest& prev_hash, std::uint64_t height,
                                std::int64_t created_at, Rng& rng) const;

private:
    std::vector<ValidatorPool> validator_pools_;
    RegulatorPool regulators_;
    Keyring keys_;
};

}  // namespace ihsc::poa
