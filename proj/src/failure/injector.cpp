#include "sissa/failure/injector.hpp"

#include <algorithm>

namespace sissa::failure {

namespace {

using sim::TimedPacket;
using sim::Trace;

void corrupt_field(someip::SomeIpPacket& p, CorruptField field) {
    switch (field) {
        case CorruptField::ProtocolVersion:
            p.protocol_version = static_cast<uint8_t>(p.protocol_version + 1);
            break;
        case CorruptField::InterfaceVersion:
            p.interface_version =
                static_cast<uint8_t>(p.interface_version + 1);
            break;
        case CorruptField::ReturnCode:
            p.return_code = (p.return_code == someip::ReturnCode::NotOk)
                                ? someip::ReturnCode::Ok
                                : someip::ReturnCode::NotOk;
            break;
    }
}

// One pass of a single mode over the packets of `ecu` at/after `onset`.
// responses_only narrows omission to RESPONSE packets (the signature's
// default shape).
Trace apply_mode(const Trace& trace, uint8_t ecu, double onset,
                 const FailureMode& mode, Rng& rng, bool responses_only) {
    Trace out;
    out.topology = trace.topology;
    out.seed = trace.seed;
    out.packets.reserve(trace.packets.size());

    for (const auto& pkt : trace.packets) {
        const bool eligible = pkt.src == ecu && pkt.timestamp >= onset;
        if (!eligible) {
            out.packets.push_back(pkt);
            continue;
        }
        switch (mode.kind) {
            case FailureModeKind::Omission: {
                const bool in_scope =
                    !responses_only ||
                    pkt.packet.message_type == someip::MessageType::Response;
                if (in_scope && rng.bernoulli(mode.drop_prob)) continue;
                out.packets.push_back(pkt);
                break;
            }
            case FailureModeKind::Delay: {
                TimedPacket moved = pkt;
                moved.timestamp +=
                    rng.uniform(mode.delay_min, mode.delay_max);
                moved.origin = sim::Origin::Mutated;
                out.packets.push_back(std::move(moved));
                break;
            }
            case FailureModeKind::Corruption: {
                TimedPacket mutated = pkt;
                if (rng.bernoulli(mode.corrupt_prob)) {
                    corrupt_field(mutated.packet, mode.field);
                    mutated.origin = sim::Origin::Mutated;
                }
                out.packets.push_back(std::move(mutated));
                break;
            }
        }
    }
    std::stable_sort(out.packets.begin(), out.packets.end(),
                     [](const TimedPacket& a, const TimedPacket& b) {
                         return a.timestamp < b.timestamp;
                     });
    return out;
}

}  // namespace

sim::Trace inject_failure(const sim::Trace& trace,
                          const FailureSchedule& schedule) {
    if (!trace.topology.find_ecu(schedule.ecu))
        throw sim::SimError("failure target ECU " +
                            std::to_string(schedule.ecu) +
                            " not in trace topology");
    if (schedule.onset_time < 0)
        throw sim::SimError("failure onset must be >= 0");
    Rng rng(schedule.seed);
    return apply_mode(trace, schedule.ecu, schedule.onset_time, schedule.mode,
                      rng, /*responses_only=*/false);
}

sim::Trace inject_failure_signature(const sim::Trace& trace, uint8_t ecu,
                                    double onset, const FailureSignature& sig,
                                    uint64_t seed) {
    if (!trace.topology.find_ecu(ecu))
        throw sim::SimError("failure target ECU " + std::to_string(ecu) +
                            " not in trace topology");
    Rng omission_rng(derive_seed(seed, "failure.omission"));
    Rng delay_rng(derive_seed(seed, "failure.delay"));
    Rng corrupt_rng(derive_seed(seed, "failure.corrupt"));

    Trace out = apply_mode(trace, ecu, onset,
                           FailureMode::omission(sig.omission_prob),
                           omission_rng, /*responses_only=*/true);
    if (sig.delay_max > 0.0)
        out = apply_mode(out, ecu, onset,
                         FailureMode::delay(sig.delay_min, sig.delay_max),
                         delay_rng, false);
    if (sig.corrupt_prob > 0.0)
        out = apply_mode(
            out, ecu, onset,
            FailureMode::corruption(CorruptField::ReturnCode,
                                    sig.corrupt_prob),
            corrupt_rng, false);
    return out;
}

}  // namespace sissa::failure
