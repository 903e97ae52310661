#pragma once

// Shared test fixtures: a registry with one participant per role, and
// helpers to build fully signed records.

#include <map>
#include <string>

#include "ihsc/domain.hpp"
#include "ihsc/poa.hpp"

namespace ihsc::testing {

inline const std::string kSeed = "test-deployment";

inline SignerId participant_for_role(domain::Role role) {
    using domain::Role;
    switch (role) {
        case Role::Breeder: return "breeder-1";
        case Role::LicensedGrower: return "grower-1";
        case Role::Dryer: return "dryer-1";
        case Role::LicensedProcessor: return "processor-1";
        case Role::Transporter: return "transporter-1";
        case Role::HempTestingLab: return "lab-1";
        case Role::AuthorityRegulator: return "authority-1";
    }
    return {};
}

inline domain::ParticipantRegistry make_registry() {
    domain::ParticipantRegistry registry;
    for (size_t i = 0; i < domain::kRoleCount; ++i) {
        auto role = static_cast<domain::Role>(i);
        domain::ParticipantProfile profile;
        profile.participant_id = participant_for_role(role);
        profile.role = role;
        for (const auto& key : domain::required_profile_keys(role)) {
            profile.info[key] = key + " of " + profile.participant_id;
        }
        registry.register_participant(
            profile, derive_secret(kSeed, profile.participant_id));
    }
    return registry;
}

inline domain::TransactionRecord make_record(
    const domain::ParticipantRegistry& registry, domain::OperationUnit op,
    const domain::ProductId& product, const std::string& lot,
    std::int64_t created_at = 0,
    const std::map<std::string, std::string>& overrides = {}) {
    domain::TransactionRecord r;
    r.product_id = product;
    r.lot_number = lot;
    r.operation = op;
    r.created_at = created_at;
    for (const auto& key : domain::required_info_keys(op)) {
        r.info[key] = key + "-value";
    }
    for (const auto& [k, v] : overrides) r.info[k] = v;

    const Bytes content = domain::record_signing_content(r);
    for (auto role : domain::required_signers(op)) {
        const SignerId id = participant_for_role(role);
        r.signatures.push_back(sign(*registry.secret_of(id), content, id));
    }
    r.record_id = domain::compute_record_id(r);
    return r;
}

}  // namespace ihsc::testing
