#pragma once

#include <map>
#include <optional>
#include <string>

#include "ihsc/digest.hpp"

namespace ihsc {

/// Opaque string identifying a participant, validator, or regulator.
/// Non-empty and unique within a deployment.
using SignerId = std::string;

/// Keyed-hash accountability marker: mac = sha256(secret || content).
/// Stands in for asymmetric signatures; deterministic by construction.
struct KeyedSignature {
    SignerId signer;
    Digest mac;

    auto operator<=>(const KeyedSignature&) const = default;
};

class SignError : public std::runtime_error {
public:
    explicit SignError(const std::string& what) : std::runtime_error(what) {}
};

KeyedSignature sign(const Bytes& secret, const Bytes& content,
                    const SignerId& signer);

/// True iff recomputing the mac from (secret, content) reproduces sig.mac
/// and the signer matches.
bool verify(const KeyedSignature& sig, const Bytes& secret,
            const Bytes& content, const SignerId& signer);

/// SignerId -> secret key directory for a deployment.
class Keyring {
public:
    void put(const SignerId& id, Bytes secret);
    const Bytes* find(const SignerId& id) const;
    bool verify(const KeyedSignature& sig, const Bytes& content) const;
    size_t size() const { return secrets_.size(); }

private:
    std::map<SignerId, Bytes> secrets_;
};

/// Derives a per-identity secret from a deployment seed. One seed fixes the
/// whole key set, which keeps test vectors and replays reproducible.
Bytes derive_secret(const std::string& deployment_seed, const SignerId& id);

/// What block validation needs to know about the authority set: who holds
/// which key, who validates which shard, who regulates.
class AuthorityDirectory {
public:
    virtual ~AuthorityDirectory() = default;
    virtual const Bytes* secret_of(const SignerId& id) const = 0;
    virtual bool is_shard_validator(uint32_t shard_index,
                                    const SignerId& id) const = 0;
    virtual bool is_regulator(const SignerId& id) const = 0;
};

}  // namespace ihsc
