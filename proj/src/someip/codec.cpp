#include "sissa/someip/codec.hpp"

namespace sissa::someip {

bool is_valid_message_type(uint8_t code) {
    for (auto t : kMessageTypes)
        if (static_cast<uint8_t>(t) == code) return true;
    return false;
}

bool is_valid_return_code(uint8_t code) {
    for (auto c : kReturnCodes)
        if (static_cast<uint8_t>(c) == code) return true;
    return false;
}

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v & 0xFF));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<uint8_t>(v & 0xFF));
}

uint16_t get_u16(const std::vector<uint8_t>& b, size_t off) {
    return static_cast<uint16_t>((b[off] << 8) | b[off + 1]);
}

uint32_t get_u32(const std::vector<uint8_t>& b, size_t off) {
    return (static_cast<uint32_t>(b[off]) << 24) |
           (static_cast<uint32_t>(b[off + 1]) << 16) |
           (static_cast<uint32_t>(b[off + 2]) << 8) |
           static_cast<uint32_t>(b[off + 3]);
}

}  // namespace

std::vector<uint8_t> encode_packet(const SomeIpPacket& p) {
    const uint32_t expected =
        kLengthBaseBytes + static_cast<uint32_t>(p.payload.size());
    if (p.length != expected) {
        throw CodecError(CodecError::Kind::LengthMismatch,
                         "length field " + std::to_string(p.length) +
                             " does not cover payload (expected " +
                             std::to_string(expected) + ")");
    }
    std::vector<uint8_t> out;
    out.reserve(kHeaderSize + p.payload.size());
    put_u16(out, p.message_id.service_id);
    put_u16(out, p.message_id.method_id);
    put_u32(out, p.length);
    put_u16(out, p.request_id.client_id);
    put_u16(out, p.request_id.session_id);
    out.push_back(p.protocol_version);
    out.push_back(p.interface_version);
    out.push_back(static_cast<uint8_t>(p.message_type));
    out.push_back(static_cast<uint8_t>(p.return_code));
    out.insert(out.end(), p.payload.begin(), p.payload.end());
    return out;
}

SomeIpPacket decode_packet(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < kHeaderSize) {
        throw CodecError(CodecError::Kind::TruncatedInput,
                         "need at least 16 bytes, got " +
                             std::to_string(bytes.size()));
    }
    SomeIpPacket p;
    p.message_id.service_id = get_u16(bytes, 0);
    p.message_id.method_id = get_u16(bytes, 2);
    p.length = get_u32(bytes, 4);
    p.request_id.client_id = get_u16(bytes, 8);
    p.request_id.session_id = get_u16(bytes, 10);
    p.protocol_version = bytes[12];
    p.interface_version = bytes[13];

    if (p.length < kLengthBaseBytes) {
        throw CodecError(CodecError::Kind::LengthMismatch,
                         "length field " + std::to_string(p.length) +
                             " below fixed header span");
    }
    const size_t total = kHeaderSize + (p.length - kLengthBaseBytes);
    if (bytes.size() < total) {
        throw CodecError(CodecError::Kind::TruncatedInput,
                         "length field implies " + std::to_string(total) +
                             " bytes, got " + std::to_string(bytes.size()));
    }
    if (bytes.size() > total) {
        throw CodecError(CodecError::Kind::LengthMismatch,
                         std::to_string(bytes.size() - total) +
                             " trailing bytes beyond declared length");
    }

    if (!is_valid_message_type(bytes[14])) {
        throw CodecError(CodecError::Kind::UnknownMessageType,
                         "unknown message type 0x" +
                             std::to_string(bytes[14]));
    }
    if (!is_valid_return_code(bytes[15])) {
        throw CodecError(CodecError::Kind::UnknownReturnCode,
                         "unknown return code 0x" + std::to_string(bytes[15]));
    }
    p.message_type = static_cast<MessageType>(bytes[14]);
    p.return_code = static_cast<ReturnCode>(bytes[15]);
    p.payload.assign(bytes.begin() + kHeaderSize, bytes.begin() + total);
    return p;
}

bool validate_exchange(const SomeIpPacket& req, const SomeIpPacket& res) {
    if (req.message_type != MessageType::Request) return false;
    if (res.message_type != MessageType::Response &&
        res.message_type != MessageType::Error)
        return false;
    return req.message_id == res.message_id &&
           req.request_id == res.request_id &&
           req.protocol_version == res.protocol_version &&
           req.interface_version == res.interface_version;
}

}  // namespace sissa::someip
