#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ihsc/canonical.hpp"
#include "ihsc/file_ref.hpp"
#include "ihsc/signature.hpp"

namespace ihsc::domain {

enum class Role {
    Breeder,
    LicensedGrower,
    Dryer,
    LicensedProcessor,
    Transporter,
    HempTestingLab,
    AuthorityRegulator,
};

constexpr size_t kRoleCount = 7;

std::string role_name(Role role);
std::optional<Role> role_from_name(std::string_view name);

/// Short label used in signer-requirement messages ("Grower", "Validator",
/// "Lab", ...). The on-site validator signs as a participant of role
/// AuthorityRegulator.
std::string signer_label(Role role);

/// The sixteen process operation units, in supply-chain order.
enum class OperationUnit {
    SeedSourcing,
    SeedPickup,
    SeedArrival,
    GerminationFieldPreparation,
    Cultivation,
    PreHarvestSample,
    PreHarvestTest,
    Harvest,
    IHPickup,
    IHArrival,
    DryingStabilizing,
    DriedIHPickup,
    DriedIHArrival,
    Extraction,
    Winterization,
    PLC,
};

constexpr size_t kOperationCount = 16;

const std::vector<OperationUnit>& all_operations();
std::string operation_name(OperationUnit op);
std::optional<OperationUnit> operation_from_name(std::string_view name);

/// Role set that must sign a record of the given operation.
const std::set<Role>& required_signers(OperationUnit op);

/// Info keys that must be present and non-empty for the given operation.
const std::vector<std::string>& required_info_keys(OperationUnit op);

/// True exactly for the operations that need physical on-site verification
/// by a dispatched local authority: PreHarvestTest, Harvest, PLC.
bool requires_onsite(OperationUnit op);

/// Unique product identifier assigned at product creation; stable for the
/// product's lifetime.
using ProductId = std::string;

struct ParticipantProfile {
    SignerId participant_id;
    Role role = Role::Breeder;
    std::map<std::string, std::string> info;
};

/// Required profile info keys per role.
const std::vector<std::string>& required_profile_keys(Role role);

std::vector<std::string> validate_profile(const ParticipantProfile& profile);

/// One supply-chain event. info carries the operation's required fields as
/// free strings; signatures carry one keyed signature per required role.
struct TransactionRecord {
    std::string record_id;
    ProductId product_id;
    std::string lot_number;
    OperationUnit operation = OperationUnit::SeedSourcing;
    std::map<std::string, std::string> info;
    std::vector<KeyedSignature> signatures;
    std::vector<FileRef> file_refs;
    std::int64_t created_at = 0;
};

/// Canonical value of the record without its record_id (the id preimage).
canonical::Value record_content_value(const TransactionRecord& record);

/// Canonical value including record_id, as it appears in dumps and payloads.
canonical::Value record_value(const TransactionRecord& record);

TransactionRecord record_from_value(const canonical::Value& v);

/// Bytes every participant signature covers: encode([info, product_id,
/// operation]).
Bytes record_signing_content(const TransactionRecord& record);

/// Content-addressed id: hex(digest(encode(record without record_id))).
std::string compute_record_id(const TransactionRecord& record);

/// Registered participant set plus their signing keys.
class ParticipantRegistry {
public:
    void register_participant(const ParticipantProfile& profile, Bytes secret);
    const ParticipantProfile* find(const SignerId& id) const;
    const Bytes* secret_of(const SignerId& id) const;
    size_t size() const { return profiles_.size(); }
    const std::map<SignerId, ParticipantProfile>& profiles() const {
        return profiles_;
    }

private:
    std::map<SignerId, ParticipantProfile> profiles_;
    Keyring keys_;
};

/// Missing/invalid fields and signatures, one message per violation; a record
/// is schema-valid iff the list is empty.
std::vector<std::string> validate_schema(const TransactionRecord& record,
                                         const ParticipantRegistry& registry);

}  // namespace ihsc::domain
