#include "ihsc/canonical.hpp"

namespace ihsc::canonical {

namespace {

void append_escaped(std::string& out, const std::string& s) {
    out.push_back('"');
    for (unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    static const char* hex = "0123456789abcdef";
                    out += "\\u00";
                    out.push_back(hex[c >> 4]);
                    out.push_back(hex[c & 0x0f]);
                } else {
                    out.push_back(static_cast<char>(c));
                }
        }
    }
    out.push_back('"');
}

void encode_into(std::string& out, const Value& v) {
    switch (v.type()) {
        case Value::value_t::object: {
            out.push_back('{');
            bool first = true;
            // nlohmann objects iterate in key byte order already
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out.push_back(',');
                first = false;
                append_escaped(out, it.key());
                out.push_back(':');
                encode_into(out, it.value());
            }
            out.push_back('}');
            break;
        }
        case Value::value_t::array: {
            out.push_back('[');
            bool first = true;
            for (const auto& item : v) {
                if (!first) out.push_back(',');
                first = false;
                encode_into(out, item);
            }
            out.push_back(']');
            break;
        }
        case Value::value_t::string:
            append_escaped(out, v.get_ref<const std::string&>());
            break;
        case Value::value_t::number_integer:
            out += std::to_string(v.get<std::int64_t>());
            break;
        case Value::value_t::number_unsigned:
            out += std::to_string(v.get<std::uint64_t>());
            break;
        default:
            throw EncodeError(std::string("non-encodable value kind: ") +
                              v.type_name());
    }
}

void check_parsed(const Value& v) {
    switch (v.type()) {
        case Value::value_t::object:
            for (const auto& [key, item] : v.items()) check_parsed(item);
            break;
        case Value::value_t::array:
            for (const auto& item : v) check_parsed(item);
            break;
        case Value::value_t::string:
        case Value::value_t::number_integer:
        case Value::value_t::number_unsigned:
            break;
        default:
            throw EncodeError(std::string("non-canonical value kind: ") +
                              v.type_name());
    }
}

}  // namespace

Bytes encode(const Value& value) {
    std::string out;
    encode_into(out, value);
    return to_bytes(out);
}

Digest encode_digest(const Value& value) {
    return sha256(to_string(encode(value)));
}

Value parse(std::string_view text) {
    Value v = Value::parse(text);
    check_parsed(v);
    return v;
}

}  // namespace ihsc::canonical
