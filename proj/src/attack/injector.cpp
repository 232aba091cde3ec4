#include "sissa/attack/injector.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace sissa::attack {

using sim::Origin;
using sim::TimedPacket;
using sim::Trace;
using someip::MessageType;

const char* attack_name(AttackKind k) {
    switch (k) {
        case AttackKind::RequestWithoutResponse: return "request_without_response";
        case AttackKind::FakeInterface: return "fake_interface";
        case AttackKind::FakeSource: return "fake_source";
        case AttackKind::Ddos: return "ddos";
        case AttackKind::ResponseWithoutRequest: return "response_without_request";
    }
    return "?";
}

namespace {

std::string flow_key(uint8_t src, uint8_t dst, uint16_t service) {
    return std::to_string(src) + "->" + std::to_string(dst) +
           " svc=" + std::to_string(service);
}

bool matches_target(const TimedPacket& p, const TargetFilter& t,
                    bool provider_is_src) {
    if (t.ecu && (provider_is_src ? p.src : p.dst) != *t.ecu) return false;
    if (t.service && p.packet.message_id.service_id != *t.service)
        return false;
    return true;
}

Trace copy_shell(const Trace& trace) {
    Trace out;
    out.topology = trace.topology;
    out.seed = trace.seed;
    return out;
}

void sort_packets(Trace& t) {
    std::stable_sort(t.packets.begin(), t.packets.end(),
                     [](const TimedPacket& a, const TimedPacket& b) {
                         return a.timestamp < b.timestamp;
                     });
}

size_t checked_round(double intensity, size_t eligible) {
    return static_cast<size_t>(
        std::lround(intensity * static_cast<double>(eligible)));
}

void check_intensity(const AttackParams& p) {
    if (!(p.intensity > 0.0) || p.intensity > 1.0)
        throw AttackError("intensity must be in (0, 1]");
}

constexpr double kInjectEpsilon = 1e-5;  // 10 us after the copied packet

}  // namespace

std::pair<Trace, AttackReport> inject_request_without_response(
    const Trace& trace, const AttackParams& params) {
    check_intensity(params);
    AttackReport report;
    report.kind = AttackKind::RequestWithoutResponse;

    size_t eligible = 0;
    for (const auto& p : trace.packets)
        if (p.packet.message_type == MessageType::Response &&
            matches_target(p, params.target, /*provider_is_src=*/true))
            ++eligible;
    if (eligible == 0)
        throw AttackError("no eligible response packets to interrupt");

    Rng rng(params.seed);
    Trace out = copy_shell(trace);
    out.packets.reserve(trace.packets.size());
    for (const auto& p : trace.packets) {
        if (p.packet.message_type == MessageType::Response &&
            matches_target(p, params.target, true) &&
            rng.bernoulli(params.intensity)) {
            ++report.packets_dropped;
            ++report.per_flow[flow_key(p.src, p.dst,
                                       p.packet.message_id.service_id)]
                  .dropped;
            continue;
        }
        out.packets.push_back(p);
    }
    return {std::move(out), std::move(report)};
}

std::pair<Trace, AttackReport> inject_fake_interface(
    const Trace& trace, const AttackParams& params) {
    check_intensity(params);
    AttackReport report;
    report.kind = AttackKind::FakeInterface;

    std::vector<size_t> eligible;
    for (size_t i = 0; i < trace.packets.size(); ++i) {
        const auto& p = trace.packets[i];
        if (p.packet.message_type == MessageType::Response &&
            matches_target(p, params.target, true))
            eligible.push_back(i);
    }
    if (eligible.empty())
        throw AttackError("no eligible response packets to mimic");

    Rng rng(params.seed);
    const size_t k = checked_round(params.intensity, eligible.size());
    auto picks = sample_indices(eligible.size(), k, rng);
    std::set<size_t> chosen;
    for (size_t pi : picks) chosen.insert(eligible[pi]);

    Trace out = copy_shell(trace);
    out.packets.reserve(trace.packets.size() + k);
    for (size_t i = 0; i < trace.packets.size(); ++i) {
        const auto& p = trace.packets[i];
        out.packets.push_back(p);
        if (!chosen.count(i)) continue;
        TimedPacket fake = p;
        fake.timestamp += kInjectEpsilon;
        fake.packet.interface_version =
            static_cast<uint8_t>(p.packet.interface_version + 1);
        fake.origin = Origin::Injected;
        out.packets.push_back(std::move(fake));
        ++report.packets_injected;
        ++report.per_flow[flow_key(p.src, p.dst,
                                   p.packet.message_id.service_id)]
              .injected;
    }
    sort_packets(out);
    return {std::move(out), std::move(report)};
}

std::pair<Trace, AttackReport> inject_fake_source(const Trace& trace,
                                                  const AttackParams& params) {
    check_intensity(params);
    if (trace.topology.ecus.size() < 2)
        throw AttackError(
            "fake source needs at least two legal addresses in the topology");
    AttackReport report;
    report.kind = AttackKind::FakeSource;

    std::vector<size_t> eligible;
    for (size_t i = 0; i < trace.packets.size(); ++i)
        if (matches_target(trace.packets[i], params.target, true))
            eligible.push_back(i);
    if (eligible.empty()) throw AttackError("no packets match the target");

    Rng rng(params.seed);
    const size_t k = checked_round(params.intensity, eligible.size());
    auto picks = sample_indices(eligible.size(), k, rng);
    std::set<size_t> chosen;
    for (size_t pi : picks) chosen.insert(eligible[pi]);

    Trace out = copy_shell(trace);
    out.packets.reserve(trace.packets.size() + k);
    for (size_t i = 0; i < trace.packets.size(); ++i) {
        const auto& p = trace.packets[i];
        out.packets.push_back(p);
        if (!chosen.count(i)) continue;
        // Pick any legal source other than the original one.
        std::vector<uint8_t> pool;
        for (const auto& e : trace.topology.ecus)
            if (e.id != p.src) pool.push_back(e.id);
        TimedPacket fake = p;
        fake.timestamp += kInjectEpsilon;
        fake.src = pool[rng.below(pool.size())];
        fake.origin = Origin::Injected;
        out.packets.push_back(std::move(fake));
        ++report.packets_injected;
        ++report.per_flow[flow_key(p.src, p.dst,
                                   p.packet.message_id.service_id)]
              .injected;
    }
    sort_packets(out);
    return {std::move(out), std::move(report)};
}

std::pair<Trace, AttackReport> inject_ddos(const Trace& trace,
                                           const AttackParams& params) {
    if (!(params.multiplier > 1.0))
        throw AttackError("DDoS multiplier must be > 1");
    AttackReport report;
    report.kind = AttackKind::Ddos;

    // Legitimate request profile of the targeted server.
    std::vector<const TimedPacket*> legit_requests;
    for (const auto& p : trace.packets)
        if (p.packet.message_type == MessageType::Request &&
            matches_target(p, params.target, /*provider_is_src=*/false))
            legit_requests.push_back(&p);
    if (legit_requests.empty())
        throw AttackError("no request traffic to amplify");

    // Default target: the server receiving the most requests.
    uint8_t server;
    if (params.target.ecu) {
        server = *params.target.ecu;
    } else {
        std::map<uint8_t, size_t> counts;
        for (auto* p : legit_requests) ++counts[p->dst];
        server = counts.begin()->first;
        for (auto& [id, c] : counts)
            if (c > counts[server]) server = id;
    }

    std::vector<const TimedPacket*> server_requests;
    for (auto* p : legit_requests)
        if (p->dst == server) server_requests.push_back(p);
    if (server_requests.empty())
        throw AttackError("target server receives no requests");

    const double t0 = trace.packets.front().timestamp;
    const double t1 = trace.packets.back().timestamp;
    const double span = t1 - t0;
    if (!(span > 0)) throw AttackError("trace span is empty");

    // (service, method) pool observed at the server, so the flood blends in.
    std::vector<std::pair<uint16_t, uint16_t>> service_pool;
    for (auto* p : server_requests)
        service_pool.emplace_back(p->packet.message_id.service_id,
                                  p->packet.message_id.method_id);
    std::vector<uint8_t> client_pool;
    for (const auto& e : trace.topology.ecus)
        if (e.id != server) client_pool.push_back(e.id);
    if (client_pool.empty()) throw AttackError("no client to spoof");

    Rng rng(params.seed);
    Trace out = copy_shell(trace);
    out.packets.reserve(trace.packets.size() +
                        static_cast<size_t>(params.multiplier *
                                            server_requests.size()));

    // Flood: Poisson arrivals at multiplier x the legitimate rate.
    const double rate = static_cast<double>(server_requests.size()) / span;
    double t = t0 + rng.exponential(1.0 / (params.multiplier * rate));
    while (t <= t1) {
        auto [svc, method] = service_pool[rng.below(service_pool.size())];
        TimedPacket flood;
        flood.timestamp = t;
        flood.src = client_pool[rng.below(client_pool.size())];
        flood.dst = server;
        flood.origin = Origin::Injected;
        flood.packet.message_id = {svc, method};
        flood.packet.request_id = {
            flood.src, static_cast<uint16_t>(rng.range(1, 0xFFFF))};
        flood.packet.message_type = MessageType::Request;
        flood.packet.return_code = someip::ReturnCode::Ok;
        flood.packet.refresh_length();
        ++report.packets_injected;
        ++report.per_flow[flow_key(flood.src, server, svc)].injected;
        out.packets.push_back(std::move(flood));
        t += rng.exponential(1.0 / (params.multiplier * rate));
    }

    // Collateral: the overloaded server sheds this share of its responses.
    const double drop_fraction = 1.0 - 1.0 / params.multiplier;
    for (const auto& p : trace.packets) {
        const bool sheddable =
            p.src == server && p.packet.message_type == MessageType::Response &&
            (!params.target.service ||
             p.packet.message_id.service_id == *params.target.service);
        if (sheddable && rng.bernoulli(drop_fraction)) {
            ++report.packets_dropped;
            ++report.per_flow[flow_key(p.src, p.dst,
                                       p.packet.message_id.service_id)]
                  .dropped;
            continue;
        }
        out.packets.push_back(p);
    }
    sort_packets(out);
    return {std::move(out), std::move(report)};
}

std::pair<Trace, AttackReport> inject_response_without_request(
    const Trace& trace, const AttackParams& params) {
    check_intensity(params);
    AttackReport report;
    report.kind = AttackKind::ResponseWithoutRequest;

    // Idle instants per (client, server, service): after each completed
    // exchange and after each subscription notification, before the
    // client's next request in that flow.
    struct Gap {
        double start;
        double end;
        uint8_t client;
        uint8_t server;
        uint16_t service;
        uint16_t method;
        uint16_t next_session;
        const std::vector<uint8_t>* payload;  // spoofed payload template
    };

    struct FlowState {
        double pending_since = -1.0;
        bool pending = false;
        uint16_t last_session = 0;
        uint16_t last_method = 0;
        const std::vector<uint8_t>* last_response_payload = nullptr;
        double gap_start = -1.0;
        bool in_gap = false;
    };

    std::map<std::tuple<uint8_t, uint8_t, uint16_t>, FlowState> flows;
    std::vector<Gap> gaps;
    const double trace_end =
        trace.packets.empty() ? 0.0 : trace.packets.back().timestamp;

    auto close_gap = [&](FlowState& st, uint8_t client, uint8_t server,
                         uint16_t service, double end) {
        if (!st.in_gap) return;
        if (end > st.gap_start) {
            gaps.push_back({st.gap_start, end, client, server, service,
                            st.last_method,
                            static_cast<uint16_t>(st.last_session + 1),
                            st.last_response_payload});
        }
        st.in_gap = false;
    };

    for (const auto& p : trace.packets) {
        const auto& pkt = p.packet;
        const uint16_t svc = pkt.message_id.service_id;
        if (pkt.message_type == MessageType::Request) {
            auto key = std::make_tuple(p.src, p.dst, svc);
            auto& st = flows[key];
            close_gap(st, p.src, p.dst, svc, p.timestamp);
            st.pending = true;
            st.pending_since = p.timestamp;
            st.last_session = pkt.request_id.session_id;
            st.last_method = pkt.message_id.method_id;
        } else if (pkt.message_type == MessageType::Response ||
                   pkt.message_type == MessageType::Error) {
            auto key = std::make_tuple(p.dst, p.src, svc);
            auto it = flows.find(key);
            if (it != flows.end() && it->second.pending) {
                auto& st = it->second;
                st.pending = false;
                st.last_response_payload = &pkt.payload;
                st.in_gap = true;
                st.gap_start = p.timestamp;
            }
        } else if (pkt.message_type == MessageType::Notification &&
                   trace.topology.find_ecu(p.dst) != nullptr) {
            // A client -> server notification opens a spoofing window too
            // (the subscription case). Publisher -> subscriber events do
            // not: there the dst is the idle party.
            bool client_to_server = false;
            for (const auto& b : trace.topology.bindings)
                if (b.provider == p.dst && b.service_id == svc)
                    client_to_server = true;
            if (client_to_server) {
                auto key = std::make_tuple(p.src, p.dst, svc);
                auto& st = flows[key];
                close_gap(st, p.src, p.dst, svc, p.timestamp);
                st.last_method = pkt.message_id.method_id;
                st.in_gap = true;
                st.gap_start = p.timestamp;
            }
        }
    }
    for (auto& [key, st] : flows)
        close_gap(st, std::get<0>(key), std::get<1>(key), std::get<2>(key),
                  trace_end);

    // Filter gaps by target.
    std::vector<Gap> eligible;
    for (const auto& g : gaps) {
        if (params.target.ecu && g.server != *params.target.ecu) continue;
        if (params.target.service && g.service != *params.target.service)
            continue;
        eligible.push_back(g);
    }
    if (eligible.empty())
        throw AttackError("no idle client/server gaps to spoof into");

    Rng rng(params.seed);
    const size_t k = checked_round(params.intensity, eligible.size());
    auto picks = sample_indices(eligible.size(), k, rng);
    std::sort(picks.begin(), picks.end());

    Trace out = copy_shell(trace);
    out.packets = trace.packets;
    for (size_t pi : picks) {
        const Gap& g = eligible[pi];
        TimedPacket spoof;
        const double lo = g.start + kInjectEpsilon;
        const double hi = std::max(lo, g.end - kInjectEpsilon);
        spoof.timestamp = rng.uniform(lo, hi);
        spoof.src = g.server;
        spoof.dst = g.client;
        spoof.origin = Origin::Injected;
        spoof.packet.message_id = {g.service, g.method};
        spoof.packet.request_id = {g.client, g.next_session == 0
                                                 ? static_cast<uint16_t>(1)
                                                 : g.next_session};
        spoof.packet.message_type = MessageType::Response;
        spoof.packet.return_code = someip::ReturnCode::Ok;
        if (g.payload) spoof.packet.payload = *g.payload;
        spoof.packet.refresh_length();
        ++report.packets_injected;
        ++report.per_flow[flow_key(g.server, g.client, g.service)].injected;
        out.packets.push_back(std::move(spoof));
    }
    sort_packets(out);
    return {std::move(out), std::move(report)};
}

std::pair<Trace, AttackReport> apply_attack(const Trace& trace,
                                            const AttackParams& params) {
    switch (params.kind) {
        case AttackKind::RequestWithoutResponse:
            return inject_request_without_response(trace, params);
        case AttackKind::FakeInterface:
            return inject_fake_interface(trace, params);
        case AttackKind::FakeSource:
            return inject_fake_source(trace, params);
        case AttackKind::Ddos:
            return inject_ddos(trace, params);
        case AttackKind::ResponseWithoutRequest:
            return inject_response_without_request(trace, params);
    }
    throw AttackError("unknown attack kind");
}

}  // namespace sissa::attack
