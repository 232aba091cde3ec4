#include "sissa/sim/simulator.hpp"

#include <algorithm>
#include <set>

namespace sissa::sim {

uint32_t parse_address(const std::string& dotted) {
    uint32_t parts[4] = {0, 0, 0, 0};
    int idx = 0;
    uint32_t cur = 0;
    bool any = false;
    for (char c : dotted) {
        if (c == '.') {
            if (!any || idx >= 3) throw SimError("bad address: " + dotted);
            parts[idx++] = cur;
            cur = 0;
            any = false;
        } else if (c >= '0' && c <= '9') {
            cur = cur * 10 + static_cast<uint32_t>(c - '0');
            if (cur > 255) throw SimError("bad address: " + dotted);
            any = true;
        } else {
            throw SimError("bad address: " + dotted);
        }
    }
    if (!any || idx != 3) throw SimError("bad address: " + dotted);
    parts[3] = cur;
    return (parts[0] << 24) | (parts[1] << 16) | (parts[2] << 8) | parts[3];
}

std::string format_address(uint32_t addr) {
    return std::to_string(addr >> 24) + "." +
           std::to_string((addr >> 16) & 0xFF) + "." +
           std::to_string((addr >> 8) & 0xFF) + "." +
           std::to_string(addr & 0xFF);
}

const char* origin_name(Origin o) {
    switch (o) {
        case Origin::Legit: return "LEGIT";
        case Origin::Injected: return "INJECTED";
        case Origin::Mutated: return "MUTATED";
    }
    return "LEGIT";
}

Origin origin_from_name(const std::string& name) {
    if (name == "LEGIT") return Origin::Legit;
    if (name == "INJECTED") return Origin::Injected;
    if (name == "MUTATED") return Origin::Mutated;
    throw SimError("unknown origin: " + name);
}

void validate_topology(const Topology& topology) {
    if (topology.ecus.empty()) throw SimError("topology has no ECUs");
    std::set<uint8_t> ids;
    std::set<uint32_t> addrs;
    for (const auto& e : topology.ecus) {
        if (!ids.insert(e.id).second)
            throw SimError("duplicate ECU id " + std::to_string(e.id));
        if (!addrs.insert(e.address).second)
            throw SimError("duplicate ECU address " +
                           format_address(e.address));
    }
    for (const auto& b : topology.bindings) {
        if (!topology.find_ecu(b.provider))
            throw SimError("binding provider " + std::to_string(b.provider) +
                           " not in topology");
        if (b.methods.empty())
            throw SimError("binding for service " +
                           std::to_string(b.service_id) + " has no methods");
        if (b.pattern == Pattern::Event &&
            b.event_strategy == EventStrategy::Periodic &&
            b.event_period <= 0.0)
            throw SimError("periodic event binding needs period > 0");
        for (uint8_t c : b.consumers) {
            if (!topology.find_ecu(c))
                throw SimError("binding consumer " + std::to_string(c) +
                               " not in topology");
            if (c == b.provider)
                throw SimError("binding consumer equals provider");
        }
    }
}

std::vector<uint8_t> binding_consumers(const Topology& topology,
                                       const ServiceBinding& binding) {
    if (!binding.consumers.empty()) return binding.consumers;
    std::vector<uint8_t> out;
    for (const auto& e : topology.ecus)
        if (e.id != binding.provider) out.push_back(e.id);
    return out;
}

Simulator::Simulator(const SimConfig& config) : config_(config) {
    validate_topology(config_.topology);
    if (config_.duration < 0) throw SimError("duration must be >= 0");
    if (config_.mean_request_interval <= 0)
        throw SimError("mean_request_interval must be > 0");
    if (config_.latency_min <= 0 || config_.latency_max < config_.latency_min)
        throw SimError("bad latency interval");
    if (config_.payload_min < 0 || config_.payload_max < config_.payload_min)
        throw SimError("bad payload range");
}

uint16_t Simulator::next_session(uint8_t client_id, uint16_t service_id) {
    uint16_t& s = sessions_[{client_id, service_id}];
    // 0 is reserved; the counter wraps 0xFFFF -> 1.
    s = (s == 0xFFFF) ? 1 : static_cast<uint16_t>(s + 1);
    return s;
}

Rng& Simulator::flow_rng(uint8_t consumer_id, uint16_t service_id) {
    auto key = std::make_pair(consumer_id, service_id);
    auto it = rngs_.find(key);
    if (it == rngs_.end()) {
        uint64_t idx = (static_cast<uint64_t>(consumer_id) << 16) | service_id;
        it = rngs_.emplace(key, Rng(derive_seed(config_.seed, "flow", idx)))
                 .first;
    }
    return it->second;
}

std::vector<uint8_t> Simulator::random_payload(Rng& rng) {
    size_t len = rng.range(static_cast<uint64_t>(config_.payload_min),
                           static_cast<uint64_t>(config_.payload_max));
    std::vector<uint8_t> payload(len);
    for (auto& b : payload) b = static_cast<uint8_t>(rng.below(256));
    return payload;
}

someip::SomeIpPacket Simulator::make_packet(uint16_t service, uint16_t method,
                                            uint16_t client, uint16_t session,
                                            someip::MessageType type,
                                            someip::ReturnCode rc, Rng& rng) {
    someip::SomeIpPacket p;
    p.message_id = {service, method};
    p.request_id = {client, session};
    p.protocol_version = someip::kProtocolVersion;
    p.interface_version = 1;
    p.message_type = type;
    p.return_code = rc;
    p.payload = random_payload(rng);
    p.refresh_length();
    return p;
}

std::pair<TimedPacket, TimedPacket> Simulator::step_request_response(
    const EcuId& client, const EcuId& server, const ServiceBinding& binding,
    uint16_t method, double t) {
    Rng& rng = flow_rng(client.id, binding.service_id);
    uint16_t session = next_session(client.id, binding.service_id);

    TimedPacket req;
    req.timestamp = t;
    req.src = client.id;
    req.dst = server.id;
    req.packet = make_packet(binding.service_id, method, client.id, session,
                             someip::MessageType::Request,
                             someip::ReturnCode::Ok, rng);

    double latency = rng.uniform(config_.latency_min, config_.latency_max);
    TimedPacket res;
    res.timestamp = t + latency;
    res.src = server.id;
    res.dst = client.id;
    res.packet = make_packet(binding.service_id, method, client.id, session,
                             someip::MessageType::Response,
                             someip::ReturnCode::Ok, rng);
    res.packet.interface_version = req.packet.interface_version;
    return {req, res};
}

TimedPacket Simulator::step_fire_forget(const EcuId& client,
                                        const EcuId& server,
                                        const ServiceBinding& binding,
                                        uint16_t method, double t) {
    Rng& rng = flow_rng(client.id, binding.service_id);
    uint16_t session = next_session(client.id, binding.service_id);
    TimedPacket pkt;
    pkt.timestamp = t;
    pkt.src = client.id;
    pkt.dst = server.id;
    pkt.packet = make_packet(binding.service_id, method, client.id, session,
                             someip::MessageType::RequestNoReturn,
                             someip::ReturnCode::Ok, rng);
    return pkt;
}

std::vector<TimedPacket> Simulator::step_event_cycle(
    const EcuId& subscriber, const EcuId& publisher,
    const ServiceBinding& binding, double subscribe_t, double horizon) {
    Rng& rng = flow_rng(subscriber.id, binding.service_id);
    std::vector<TimedPacket> out;

    TimedPacket sub;
    sub.timestamp = subscribe_t;
    sub.src = subscriber.id;
    sub.dst = publisher.id;
    sub.packet = make_packet(binding.service_id, binding.methods.front(),
                             subscriber.id,
                             next_session(subscriber.id, binding.service_id),
                             someip::MessageType::Notification,
                             someip::ReturnCode::Ok, rng);
    out.push_back(std::move(sub));

    auto emit_event = [&](double t) {
        uint16_t method =
            binding.methods[rng.below(binding.methods.size())];
        TimedPacket ev;
        ev.timestamp = t;
        ev.src = publisher.id;
        ev.dst = subscriber.id;
        ev.packet = make_packet(
            binding.service_id, method, subscriber.id,
            next_session(subscriber.id, binding.service_id),
            someip::MessageType::Notification, someip::ReturnCode::Ok, rng);
        out.push_back(std::move(ev));
    };

    if (binding.event_strategy == EventStrategy::Periodic) {
        const double period = binding.event_period;
        long count = static_cast<long>(
            std::floor((horizon - subscribe_t) / period + 1e-9));
        for (long k = 1; k <= count; ++k)
            emit_event(subscribe_t + static_cast<double>(k) * period);
    } else {
        double t = subscribe_t + rng.exponential(config_.mean_request_interval);
        while (t <= horizon) {
            emit_event(t);
            t += rng.exponential(config_.mean_request_interval);
        }
    }
    return out;
}

Trace Simulator::run() {
    Trace trace;
    trace.topology = config_.topology;
    trace.seed = config_.seed;
    if (config_.duration <= 0.0) return trace;

    for (const auto& binding : config_.topology.bindings) {
        const EcuId* provider = config_.topology.find_ecu(binding.provider);
        for (uint8_t consumer_id :
             binding_consumers(config_.topology, binding)) {
            const EcuId* consumer = config_.topology.find_ecu(consumer_id);
            Rng& rng = flow_rng(consumer_id, binding.service_id);
            switch (binding.pattern) {
                case Pattern::RequestResponse: {
                    double t =
                        rng.exponential(config_.mean_request_interval);
                    while (t <= config_.duration) {
                        uint16_t method =
                            binding.methods[rng.below(binding.methods.size())];
                        auto [req, res] = step_request_response(
                            *consumer, *provider, binding, method, t);
                        trace.packets.push_back(std::move(req));
                        trace.packets.push_back(std::move(res));
                        t += rng.exponential(config_.mean_request_interval);
                    }
                    break;
                }
                case Pattern::FireForget: {
                    double t =
                        rng.exponential(config_.mean_request_interval);
                    while (t <= config_.duration) {
                        uint16_t method =
                            binding.methods[rng.below(binding.methods.size())];
                        trace.packets.push_back(step_fire_forget(
                            *consumer, *provider, binding, method, t));
                        t += rng.exponential(config_.mean_request_interval);
                    }
                    break;
                }
                case Pattern::Event: {
                    double sub_t =
                        rng.uniform(0.0, config_.mean_request_interval);
                    if (sub_t > config_.duration) break;
                    auto packets = step_event_cycle(
                        *consumer, *provider, binding, sub_t,
                        config_.duration);
                    for (auto& p : packets)
                        trace.packets.push_back(std::move(p));
                    break;
                }
            }
        }
    }

    std::stable_sort(trace.packets.begin(), trace.packets.end(),
                     [](const TimedPacket& a, const TimedPacket& b) {
                         return a.timestamp < b.timestamp;
                     });
    return trace;
}

Trace run_sim(const SimConfig& config) { return Simulator(config).run(); }

}  // namespace sissa::sim
