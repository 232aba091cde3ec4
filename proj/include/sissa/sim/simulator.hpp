#pragma once

#include <map>
#include <utility>

#include "sissa/sim/types.hpp"
#include "sissa/util/rng.hpp"

namespace sissa::sim {

// Deterministic discrete-event simulator over a virtual clock. Each
// (consumer, binding) flow owns its RNG stream, derived from the config
// seed, so draws never depend on event interleaving.
class Simulator {
public:
    explicit Simulator(const SimConfig& config);

    // Runs the full simulation and returns the collected trace,
    // timestamps non-decreasing.
    Trace run();

    // One request/response exchange at virtual time t. Returns the pair
    // (request, response); session id increments per (client, service).
    std::pair<TimedPacket, TimedPacket> step_request_response(
        const EcuId& client, const EcuId& server,
        const ServiceBinding& binding, uint16_t method, double t);

    // One fire&forget call: a single REQUEST_NO_RETURN packet, nothing
    // scheduled in return.
    TimedPacket step_fire_forget(const EcuId& client, const EcuId& server,
                                 const ServiceBinding& binding,
                                 uint16_t method, double t);

    // Subscription followed by the event notifications the strategy yields
    // within (subscribe_t, horizon]. All packets are NOTIFICATION; the
    // subscriber never answers an event.
    std::vector<TimedPacket> step_event_cycle(const EcuId& subscriber,
                                              const EcuId& publisher,
                                              const ServiceBinding& binding,
                                              double subscribe_t,
                                              double horizon);

private:
    uint16_t next_session(uint8_t client_id, uint16_t service_id);
    Rng& flow_rng(uint8_t consumer_id, uint16_t service_id);
    std::vector<uint8_t> random_payload(Rng& rng);
    someip::SomeIpPacket make_packet(uint16_t service, uint16_t method,
                                     uint16_t client, uint16_t session,
                                     someip::MessageType type,
                                     someip::ReturnCode rc, Rng& rng);

    SimConfig config_;
    std::map<std::pair<uint8_t, uint16_t>, uint16_t> sessions_;
    std::map<std::pair<uint8_t, uint16_t>, Rng> rngs_;
};

// Validates the topology (unique ids/addresses, binding invariants) and
// produces the trace for the given config. Pure function of the config.
Trace run_sim(const SimConfig& config);

void validate_topology(const Topology& topology);

// Consumers of a binding: the explicit list, or every other ECU.
std::vector<uint8_t> binding_consumers(const Topology& topology,
                                       const ServiceBinding& binding);

}  // namespace sissa::sim
