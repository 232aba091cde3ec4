#pragma once

#include <cstdint>
#include <vector>

#include "sissa/util/errors.hpp"

namespace sissa::someip {

// Message types exercised by the three communication models. The AUTOSAR
// TP/ACK variants are intentionally absent: the generator never emits them.
enum class MessageType : uint8_t {
    Request = 0x00,
    RequestNoReturn = 0x01,
    Notification = 0x02,
    Response = 0x80,
    Error = 0x81,
};

enum class ReturnCode : uint8_t {
    Ok = 0x00,
    NotOk = 0x01,
    UnknownService = 0x02,
    WrongInterfaceVersion = 0x08,
};

constexpr MessageType kMessageTypes[] = {
    MessageType::Request, MessageType::RequestNoReturn,
    MessageType::Notification, MessageType::Response, MessageType::Error};

constexpr ReturnCode kReturnCodes[] = {ReturnCode::Ok, ReturnCode::NotOk,
                                       ReturnCode::UnknownService,
                                       ReturnCode::WrongInterfaceVersion};

bool is_valid_message_type(uint8_t code);
bool is_valid_return_code(uint8_t code);

// 32-bit Message ID = 16-bit Service ID | 16-bit Method ID.
struct MessageId {
    uint16_t service_id = 0;
    uint16_t method_id = 0;

    uint32_t combined() const {
        return (static_cast<uint32_t>(service_id) << 16) | method_id;
    }
    static MessageId from_combined(uint32_t v) {
        return {static_cast<uint16_t>(v >> 16),
                static_cast<uint16_t>(v & 0xFFFF)};
    }
    bool operator==(const MessageId&) const = default;
};

// 32-bit Request ID = 16-bit Client ID | 16-bit Session ID.
struct RequestId {
    uint16_t client_id = 0;
    uint16_t session_id = 0;

    uint32_t combined() const {
        return (static_cast<uint32_t>(client_id) << 16) | session_id;
    }
    static RequestId from_combined(uint32_t v) {
        return {static_cast<uint16_t>(v >> 16),
                static_cast<uint16_t>(v & 0xFFFF)};
    }
    bool operator==(const RequestId&) const = default;
};

constexpr size_t kHeaderSize = 16;
// Length counts from the Request ID to the end of the message: 8 fixed
// header bytes plus the payload.
constexpr uint32_t kLengthBaseBytes = 8;
constexpr uint8_t kProtocolVersion = 1;

struct SomeIpPacket {
    MessageId message_id;
    uint32_t length = kLengthBaseBytes;
    RequestId request_id;
    uint8_t protocol_version = kProtocolVersion;
    uint8_t interface_version = 1;
    MessageType message_type = MessageType::Request;
    ReturnCode return_code = ReturnCode::Ok;
    std::vector<uint8_t> payload;

    bool operator==(const SomeIpPacket&) const = default;

    // Sets length from the payload, keeping the invariant
    // length == 8 + |payload|.
    void refresh_length() {
        length = kLengthBaseBytes + static_cast<uint32_t>(payload.size());
    }
};

class CodecError : public RuntimeError {
public:
    enum class Kind {
        TruncatedInput,
        LengthMismatch,
        UnknownMessageType,
        UnknownReturnCode,
    };

    CodecError(Kind kind, const std::string& what)
        : RuntimeError(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Wire layout, all fields network byte order:
//   [0..3]   Message ID (Service ID << 16 | Method ID)
//   [4..7]   Length (covers Request ID .. end of payload)
//   [8..11]  Request ID (Client ID << 16 | Session ID)
//   [12]     Protocol Version
//   [13]     Interface Version
//   [14]     Message Type
//   [15]     Return Code
//   [16..]   Payload
std::vector<uint8_t> encode_packet(const SomeIpPacket& p);

SomeIpPacket decode_packet(const std::vector<uint8_t>& bytes);

// True iff res answers req: Message ID, Request ID and both version fields
// match and the types form (Request, Response) or (Request, Error).
bool validate_exchange(const SomeIpPacket& req, const SomeIpPacket& res);

}  // namespace sissa::someip
