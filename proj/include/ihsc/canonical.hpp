#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "ihsc/digest.hpp"

namespace ihsc::canonical {

/// Structured value tree accepted by the canonical encoder: maps with string
/// keys, lists, strings, and integers. Digests travel as 64-char hex strings.
using Value = nlohmann::json;

class EncodeError : public std::runtime_error {
public:
    explicit EncodeError(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic byte encoding of a value tree: map keys in lexicographic
/// byte order, no insignificant whitespace, UTF-8 text, integers in decimal.
/// Identical values always produce identical bytes. Rejects floats, booleans
/// and null.
Bytes encode(const Value& value);

/// digest(encode(value)) — the h(.) applied everywhere a structured value is
/// hashed.
Digest encode_digest(const Value& value);

/// Strict inverse used by dump/load paths; rejects anything encode() would
/// not have produced (floats, booleans, null).
Value parse(std::string_view text);

}  // namespace ihsc::canonical
