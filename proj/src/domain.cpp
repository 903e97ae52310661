#include "ihsc/domain.hpp"

#include <algorithm>
#include <array>

namespace ihsc::domain {

namespace {

struct RoleEntry {
    Role role;
    const char* name;
    const char* label;
};

constexpr std::array<RoleEntry, kRoleCount> kRoles = {{
    {Role::Breeder, "Breeder", "Breeder"},
    {Role::LicensedGrower, "LicensedGrower", "Grower"},
    {Role::Dryer, "Dryer", "Dryer"},
    {Role::LicensedProcessor, "LicensedProcessor", "Processor"},
    {Role::Transporter, "Transporter", "Transporter"},
    {Role::HempTestingLab, "HempTestingLab", "Lab"},
    {Role::AuthorityRegulator, "AuthorityRegulator", "Validator"},
}};

struct OperationEntry {
    OperationUnit op;
    const char* name;
    bool onsite;
    std::set<Role> signers;
    std::vector<std::string> info_keys;
};

const std::vector<OperationEntry>& operation_table() {
    static const std::vector<OperationEntry> table = {
        {OperationUnit::SeedSourcing,
         "SeedSourcing",
         false,
         {Role::Breeder, Role::Transporter, Role::LicensedGrower},
         {"variety", "seed_lot_number", "seed_purity_analysis",
          "flowering_type", "feminization_process",
          "seed_feminization_percentage", "clone_information", "quantity"}},
        {OperationUnit::SeedPickup,
         "SeedPickup",
         false,
         {Role::Breeder, Role::Transporter},
         {"transporter_information", "sender_receiver_information",
          "pickup_date", "driver_license"}},
        {OperationUnit::SeedArrival,
         "SeedArrival",
         false,
         {Role::Breeder, Role::Transporter, Role::LicensedGrower},
         {"shipment_delivery_date", "vehicle_model_of_transport",
          "route_of_transportation"}},
        {OperationUnit::GerminationFieldPreparation,
         "GerminationFieldPreparation",
         false,
         {Role::LicensedGrower},
         {"seeding_transplanting_date", "plant_density", "row_width",
          "grown_on_plastic", "lot_number", "gps", "pre_plant_soil_test",
          "irrigation_type", "soil_type"}},
        {OperationUnit::Cultivation,
         "Cultivation",
         false,
         {Role::LicensedGrower},
         {"irrigation_frequency_volume", "fertilizer_frequency_volume",
          "weed_insect_mold_pollination_control"}},
        {OperationUnit::PreHarvestSample,
         "PreHarvestSample",
         false,
         {Role::LicensedGrower, Role::AuthorityRegulator},
         {"sampling_testing_request_form"}},
        {OperationUnit::PreHarvestTest,
         "PreHarvestTest",
         true,
         {Role::HempTestingLab},
         {"sampling_date", "lot_number", "coa_test", "cannabinoid_content",
          "pesticide_residue", "heavy_metals"}},
        {OperationUnit::Harvest,
         "Harvest",
         true,
         {Role::LicensedGrower, Role::AuthorityRegulator},
         {"completion_date", "moisture_content", "total_yield_by_field"}},
        {OperationUnit::IHPickup,
         "IHPickup",
         false,
         {Role::LicensedGrower, Role::Transporter, Role::Dryer},
         {"transporter_information", "driver_license", "lot_number",
          "sender_receiver_information", "quantity", "pickup_date"}},
        {OperationUnit::IHArrival,
         "IHArrival",
         false,
         {Role::LicensedGrower, Role::Transporter, Role::Dryer},
         {"shipment_delivery_date", "vehicle_model_of_transport",
          "route_of_transportation"}},
        {OperationUnit::DryingStabilizing,
         "DryingStabilizing",
         false,
         {Role::Dryer},
         {"lot_number", "pre_drying_weight", "temperature_duration_of_drying",
          "final_dried_weight", "dry_weight", "container_type_weight",
          "cannabinoid_content", "pesticide_residue", "heavy_metals"}},
        {OperationUnit::DriedIHPickup,
         "DriedIHPickup",
         false,
         {Role::LicensedGrower, Role::Dryer, Role::Transporter,
          Role::LicensedProcessor},
         {"transporter_information", "driver_license", "lot_number",
          "sender_receiver_information", "quantity", "pickup_date"}},
        {OperationUnit::DriedIHArrival,
         "DriedIHArrival",
         false,
         {Role::LicensedGrower, Role::Dryer, Role::Transporter,
          Role::LicensedProcessor},
         {"shipment_delivery_date", "vehicle_model_of_transport",
          "route_of_transportation"}},
        {OperationUnit::Extraction,
         "Extraction",
         false,
         {Role::LicensedProcessor},
         {"lot_number", "biomass_weight_in",
          "extraction_input_quantity_recaptured", "quantity_of_oil_extracted",
          "gain_loss_of_extraction", "post_extraction_test"}},
        {OperationUnit::Winterization,
         "Winterization",
         false,
         {Role::LicensedProcessor},
         {"lot_number", "crude_oil_weight_in", "winterized_oil_out",
          "post_winterization_test"}},
        {OperationUnit::PLC,
         "PLC",
         true,
         {Role::LicensedProcessor, Role::AuthorityRegulator},
         {"lot_number", "quantity_weight_in", "quantity_weight_out",
          "plc_repeat_times", "post_plc_test"}},
    };
    return table;
}

const OperationEntry& entry_for(OperationUnit op) {
    return operation_table()[static_cast<size_t>(op)];
}

const std::map<Role, std::vector<std::string>>& profile_key_table() {
    static const std::map<Role, std::vector<std::string>> table = {
        {Role::Breeder, {"name", "registration", "pvp", "address"}},
        {Role::LicensedGrower,
         {"name", "license", "field_name", "gps", "background_check",
          "pre_plant_soil_tests", "irrigation_type", "prior_year_field_history",
          "soil_type"}},
        {Role::Dryer, {"name", "license", "address", "system_type"}},
        {Role::LicensedProcessor,
         {"name", "address", "handler_license_information", "system_type"}},
        {Role::Transporter, {"transporter_information", "driver_license"}},
        {Role::HempTestingLab, {"name", "address", "license"}},
        {Role::AuthorityRegulator, {"name", "address", "license"}},
    };
    return table;
}

}  // namespace

std::string role_name(Role role) {
    return kRoles[static_cast<size_t>(role)].name;
}

std::optional<Role> role_from_name(std::string_view name) {
    for (const auto& e : kRoles) {
        if (name == e.name) return e.role;
    }
    return std::nullopt;
}

std::string signer_label(Role role) {
    return kRoles[static_cast<size_t>(role)].label;
}

const std::vector<OperationUnit>& all_operations() {
    static const std::vector<OperationUnit> ops = [] {
        std::vector<OperationUnit> v;
        for (const auto& e : operation_table()) v.push_back(e.op);
        return v;
    }();
    return ops;
}

std::string operation_name(OperationUnit op) {
    return entry_for(op).name;
}

std::optional<OperationUnit> operation_from_name(std::string_view name) {
    for (const auto& e : operation_table()) {
        if (name == e.name) return e.op;
    }
    return std::nullopt;
}

const std::set<Role>& required_signers(OperationUnit op) {
    return entry_for(op).signers;
}

const std::vector<std::string>& required_info_keys(OperationUnit op) {
    return entry_for(op).info_keys;
}

bool requires_onsite(OperationUnit op) {
    return entry_for(op).onsite;
}

const std::vector<std::string>& required_profile_keys(Role role) {
    return profile_key_table().at(role);
}

std::vector<std::string> validate_profile(const ParticipantProfile& profile) {
    std::vector<std::string> violations;
    if (profile.participant_id.empty()) {
        violations.push_back("missing participant id");
    }
    for (const auto& key : required_profile_keys(profile.role)) {
        auto it = profile.info.find(key);
        if (it == profile.info.end()) {
            violations.push_back("missing profile field: " + key);
        } else if (it->second.empty()) {
            violations.push_back("empty profile field: " + key);
        }
    }
    return violations;
}

canonical::Value record_content_value(const TransactionRecord& record) {
    canonical::Value info = canonical::Value::object();
    for (const auto& [k, v] : record.info) info[k] = v;
    canonical::Value sigs = canonical::Value::array();
    for (const auto& s : record.signatures) {
        sigs.push_back({{"signer", s.signer}, {"mac", s.mac.hex()}});
    }
    canonical::Value refs = canonical::Value::array();
    for (const auto& f : record.file_refs) {
        refs.push_back({{"uri", f.uri},
                        {"file_digest", f.file_digest.hex()},
                        {"size_bytes", f.size_bytes}});
    }
    return canonical::Value{{"product_id", record.product_id},
                            {"lot_number", record.lot_number},
                            {"operation", operation_name(record.operation)},
                            {"info", std::move(info)},
                            {"signatures", std::move(sigs)},
                            {"file_refs", std::move(refs)},
                            {"created_at", record.created_at}};
}

canonical::Value record_value(const TransactionRecord& record) {
    auto v = record_content_value(record);
    v["record_id"] = record.record_id;
    return v;
}

TransactionRecord record_from_value(const canonical::Value& v) {
    TransactionRecord r;
    r.record_id = v.value("record_id", std::string{});
    r.product_id = v.at("product_id").get<std::string>();
    r.lot_number = v.at("lot_number").get<std::string>();
    auto op = operation_from_name(v.at("operation").get<std::string>());
    if (!op) {
        throw std::runtime_error("unknown operation unit: " +
                                 v.at("operation").get<std::string>());
    }
    r.operation = *op;
    for (const auto& [k, val] : v.at("info").items()) {
        r.info[k] = val.get<std::string>();
    }
    for (const auto& s : v.at("signatures")) {
        r.signatures.push_back(
            {s.at("signer").get<std::string>(),
             Digest::from_hex(s.at("mac").get<std::string>())});
    }
    for (const auto& f : v.at("file_refs")) {
        r.file_refs.push_back(
            {f.at("uri").get<std::string>(),
             Digest::from_hex(f.at("file_digest").get<std::string>()),
             f.at("size_bytes").get<std::uint64_t>()});
    }
    r.created_at = v.at("created_at").get<std::int64_t>();
    return r;
}

Bytes record_signing_content(const TransactionRecord& record) {
    canonical::Value info = canonical::Value::object();
    for (const auto& [k, v] : record.info) info[k] = v;
    return canonical::encode(canonical::Value::array(
        {std::move(info), record.product_id,
         operation_name(record.operation)}));
}

std::string compute_record_id(const TransactionRecord& record) {
    return canonical::encode_digest(record_content_value(record)).hex();
}

void ParticipantRegistry::register_participant(
    const ParticipantProfile& profile, Bytes secret) {
    profiles_[profile.participant_id] = profile;
    keys_.put(profile.participant_id, std::move(secret));
}

const ParticipantProfile* ParticipantRegistry::find(const SignerId& id) const {
    auto it = profiles_.find(id);
    return it == profiles_.end() ? nullptr : &it->second;
}

const Bytes* ParticipantRegistry::secret_of(const SignerId& id) const {
    return keys_.find(id);
}

std::vector<std::string> validate_schema(const TransactionRecord& record,
                                         const ParticipantRegistry& registry) {
    std::vector<std::string> violations;

    if (record.product_id.empty()) violations.push_back("missing product id");
    if (record.lot_number.empty()) violations.push_back("missing lot number");

    for (const auto& key : required_info_keys(record.operation)) {
        auto it = record.info.find(key);
        if (it == record.info.end()) {
            violations.push_back("missing info field: " + key);
        } else if (it->second.empty()) {
            violations.push_back("empty info field: " + key);
        }
    }

    const auto& required = required_signers(record.operation);
    const Bytes content = record_signing_content(record);
    std::set<Role> seen;
    for (const auto& sig : record.signatures) {
        const auto* profile = registry.find(sig.signer);
        if (!profile) {
            violations.push_back("unknown participant: " + sig.signer);
            continue;
        }
        Role role = profile->role;
        if (!required.contains(role)) {
            violations.push_back("unexpected signer: " + signer_label(role));
            continue;
        }
        if (seen.contains(role)) {
            violations.push_back("duplicate signer: " + signer_label(role));
            continue;
        }
        seen.insert(role);
        const Bytes* secret = registry.secret_of(sig.signer);
        if (!secret || !verify(sig, *secret, content, sig.signer)) {
            violations.push_back("signature invalid: " + sig.signer);
        }
    }
    for (Role role : required) {
        if (!seen.contains(role)) {
            violations.push_back("missing signer: " + signer_label(role));
        }
    }

    if (!record.record_id.empty() &&
        record.record_id != compute_record_id(record)) {
        violations.push_back("record id mismatch");
    }
    return violations;
}

}  // namespace ihsc::domain
