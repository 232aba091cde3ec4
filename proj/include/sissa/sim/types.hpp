#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sissa/someip/codec.hpp"

namespace sissa::sim {

// IPv4-style address as a host-order u32, e.g. "10.0.0.1".
uint32_t parse_address(const std::string& dotted);
std::string format_address(uint32_t addr);

struct EcuId {
    uint8_t id = 0;
    uint32_t address = 0;
    uint16_t port = 30490;

    bool operator==(const EcuId&) const = default;
};

enum class Pattern : uint8_t { RequestResponse, FireForget, Event };

enum class EventStrategy : uint8_t { Periodic, OnChange };

struct ServiceBinding {
    uint8_t provider = 0;
    uint16_t service_id = 0;
    std::vector<uint16_t> methods;
    Pattern pattern = Pattern::RequestResponse;
    EventStrategy event_strategy = EventStrategy::Periodic;
    double event_period = 0.1;  // seconds, Periodic only
    // ECUs consuming this service. Empty means every other ECU in the
    // topology acts as a consumer.
    std::vector<uint8_t> consumers;

    bool operator==(const ServiceBinding&) const = default;
};

struct Topology {
    std::vector<EcuId> ecus;
    std::vector<ServiceBinding> bindings;

    const EcuId* find_ecu(uint8_t id) const {
        for (const auto& e : ecus)
            if (e.id == id) return &e;
        return nullptr;
    }
    bool operator==(const Topology&) const = default;
};

enum class Origin : uint8_t { Legit = 0, Injected = 1, Mutated = 2 };

const char* origin_name(Origin o);
Origin origin_from_name(const std::string& name);

struct TimedPacket {
    double timestamp = 0.0;  // seconds since simulation start
    uint8_t src = 0;
    uint8_t dst = 0;
    someip::SomeIpPacket packet;
    Origin origin = Origin::Legit;
};

struct Trace {
    std::vector<TimedPacket> packets;
    Topology topology;
    uint64_t seed = 0;
};

struct SimConfig {
    Topology topology;
    double duration = 1.0;
    double mean_request_interval = 0.01;
    double latency_min = 2e-4;  // uniform service latency
    double latency_max = 2e-3;
    int payload_min = 0;  // payload byte count range per message
    int payload_max = 16;
    uint64_t seed = 1;
};

class SimError : public RuntimeError {
public:
    explicit SimError(const std::string& what) : RuntimeError(what) {}
};

}  // namespace sissa::sim
