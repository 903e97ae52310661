#include "ihsc/signature.hpp"

#include "ihsc/canonical.hpp"

namespace ihsc {

KeyedSignature sign(const Bytes& secret, const Bytes& content,
                    const SignerId& signer) {
    if (secret.empty()) {
        throw SignError("empty signing secret for '" + signer + "'");
    }
    if (signer.empty()) {
        throw SignError("empty signer id");
    }
    Bytes preimage = secret;
    preimage.insert(preimage.end(), content.begin(), content.end());
    return KeyedSignature{signer, sha256(preimage)};
}

bool verify(const KeyedSignature& sig, const Bytes& secret,
            const Bytes& content, const SignerId& signer) {
    if (secret.empty() || sig.signer != signer) return false;
    Bytes preimage = secret;
    preimage.insert(preimage.end(), content.begin(), content.end());
    return sha256(preimage) == sig.mac;
}

void Keyring::put(const SignerId& id, Bytes secret) {
    secrets_[id] = std::move(secret);
}

const Bytes* Keyring::find(const SignerId& id) const {
    auto it = secrets_.find(id);
    return it == secrets_.end() ? nullptr : &it->second;
}

bool Keyring::verify(const KeyedSignature& sig, const Bytes& content) const {
    const Bytes* secret = find(sig.signer);
    if (!secret) return false;
    return ihsc::verify(sig, *secret, content, sig.signer);
}

Bytes derive_secret(const std::string& deployment_seed, const SignerId& id) {
    auto d = canonical::encode_digest(
        canonical::Value::array({"ihsc.secret.v1", deployment_seed, id}));
    return Bytes(d.bytes.begin(), d.bytes.end());
}

}  // namespace ihsc
