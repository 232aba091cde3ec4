#pragma once

#include <map>
#include <optional>
#include <string>

#include "sissa/sim/types.hpp"
#include "sissa/util/rng.hpp"

namespace sissa::attack {

enum class AttackKind : uint8_t {
    RequestWithoutResponse,
    FakeInterface,
    FakeSource,
    Ddos,
    ResponseWithoutRequest,
};

const char* attack_name(AttackKind k);

// Narrows an attack to one provider ECU and/or one service id. Unset
// fields match everything.
struct TargetFilter {
    std::optional<uint8_t> ecu;
    std::optional<uint16_t> service;
};

struct AttackParams {
    AttackKind kind = AttackKind::RequestWithoutResponse;
    double intensity = 0.5;   // share of eligible packets, (0, 1]
    double multiplier = 4.0;  // DDoS rate multiplier, > 1
    TargetFilter target;
    uint64_t seed = 0;
};

struct FlowStats {
    uint64_t dropped = 0;
    uint64_t injected = 0;
    uint64_t mutated = 0;
};

struct AttackReport {
    AttackKind kind = AttackKind::RequestWithoutResponse;
    uint64_t packets_dropped = 0;
    uint64_t packets_injected = 0;
    uint64_t packets_mutated = 0;
    std::map<std::string, FlowStats> per_flow;
};

class AttackError : public RuntimeError {
public:
    explicit AttackError(const std::string& what) : RuntimeError(what) {}
};

// The attacker intercepts a Bernoulli(intensity) share of the matching
// RESPONSE packets; the paired requests stay in the trace.
std::pair<sim::Trace, AttackReport> inject_request_without_response(
    const sim::Trace& trace, const AttackParams& params);

// Duplicates round(intensity * eligible) RESPONSE packets 10us after the
// original with a wrong interface version; the original stays.
std::pair<sim::Trace, AttackReport> inject_fake_interface(
    const sim::Trace& trace, const AttackParams& params);

// Replays round(intensity * eligible) packets with the source swapped to a
// different legal ECU; the wire bytes are untouched.
std::pair<sim::Trace, AttackReport> inject_fake_source(
    const sim::Trace& trace, const AttackParams& params);

// Floods the target server with spoofed REQUESTs at multiplier times the
// legitimate request rate (Poisson arrivals); the overloaded server drops
// a (1 - 1/multiplier) share of its legitimate responses.
std::pair<sim::Trace, AttackReport> inject_ddos(const sim::Trace& trace,
                                                const AttackParams& params);

// Sends spoofed RESPONSEs while the client has no outstanding request,
// numbered with the client's next expected session id. Eligible instants
// are the idle gaps after each completed exchange and after each
// subscription notification; round(intensity * gaps) of them are used.
std::pair<sim::Trace, AttackReport> inject_response_without_request(
    const sim::Trace& trace, const AttackParams& params);

// Dispatch on params.kind; output timestamps re-sorted non-decreasing.
std::pair<sim::Trace, AttackReport> apply_attack(const sim::Trace& trace,
                                                 const AttackParams& params);

}  // namespace sissa::attack
