#pragma once

#include "sissa/failure/weibull.hpp"
#include "sissa/sim/types.hpp"

namespace sissa::failure {

enum class FailureModeKind : uint8_t { Omission, Delay, Corruption };

enum class CorruptField : uint8_t {
    ProtocolVersion,
    InterfaceVersion,
    ReturnCode,
};

struct FailureMode {
    FailureModeKind kind = FailureModeKind::Omission;
    double drop_prob = 1.0;        // Omission, (0, 1]
    double delay_min = 0.0;        // Delay, extra seconds, uniform
    double delay_max = 0.0;
    CorruptField field = CorruptField::ReturnCode;  // Corruption
    double corrupt_prob = 1.0;     // Corruption, (0, 1]

    static FailureMode omission(double p) {
        FailureMode m;
        m.kind = FailureModeKind::Omission;
        m.drop_prob = p;
        return m;
    }
    static FailureMode delay(double lo, double hi) {
        FailureMode m;
        m.kind = FailureModeKind::Delay;
        m.delay_min = lo;
        m.delay_max = hi;
        return m;
    }
    static FailureMode corruption(CorruptField f, double p) {
        FailureMode m;
        m.kind = FailureModeKind::Corruption;
        m.field = f;
        m.corrupt_prob = p;
        return m;
    }
};

struct FailureSchedule {
    uint8_t ecu = 0;
    double onset_time = 0.0;
    FailureMode mode;
    WeibullParams params;
    uint64_t seed = 0;
};

// Applies one failure mode to every packet the failed ECU originates at or
// after the onset. Drops remove the packet; delays and corruptions mark it
// MUTATED. Packets before the onset and other ECUs' packets are untouched.
// The output is re-sorted so timestamps stay non-decreasing.
sim::Trace inject_failure(const sim::Trace& trace,
                          const FailureSchedule& schedule);

// The default on-wire signature of a failing ECU: response omission,
// uniform extra delay on surviving packets, and return-code corruption,
// applied in that order with sub-seeds derived from `seed`.
struct FailureSignature {
    double omission_prob = 0.6;    // applied to the ECU's responses
    double delay_min = 0.0;        // absolute extra seconds
    double delay_max = 0.0;
    double corrupt_prob = 0.3;     // return_code -> E_NOT_OK
};

sim::Trace inject_failure_signature(const sim::Trace& trace, uint8_t ecu,
                                    double onset, const FailureSignature& sig,
                                    uint64_t seed);

}  // namespace sissa::failure
