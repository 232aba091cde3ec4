#include "sissa/sim/trace_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sissa/util/rng.hpp"

namespace sissa::sim {

using nlohmann::json;

std::string hex_encode(const std::vector<uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

std::vector<uint8_t> hex_decode(const std::string& hex) {
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw SimError("bad hex digit");
    };
    if (hex.size() % 2 != 0) throw SimError("odd hex length");
    std::vector<uint8_t> out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>((nib(hex[2 * i]) << 4) |
                                      nib(hex[2 * i + 1]));
    return out;
}

namespace {

json topology_to_json(const Topology& t) {
    json ecus = json::array();
    for (const auto& e : t.ecus)
        ecus.push_back({{"id", e.id},
                        {"address", format_address(e.address)},
                        {"port", e.port}});
    json bindings = json::array();
    for (const auto& b : t.bindings) {
        json jb = {{"provider", b.provider},
                   {"service", b.service_id},
                   {"methods", b.methods},
                   {"pattern", static_cast<int>(b.pattern)},
                   {"consumers", b.consumers}};
        if (b.pattern == Pattern::Event) {
            jb["strategy"] = static_cast<int>(b.event_strategy);
            jb["period"] = b.event_period;
        }
        bindings.push_back(jb);
    }
    return {{"ecus", ecus}, {"bindings", bindings}};
}

Topology topology_from_json(const json& j) {
    Topology t;
    for (const auto& je : j.at("ecus")) {
        EcuId e;
        e.id = je.at("id").get<uint8_t>();
        e.address = parse_address(je.at("address").get<std::string>());
        e.port = je.at("port").get<uint16_t>();
        t.ecus.push_back(e);
    }
    for (const auto& jb : j.at("bindings")) {
        ServiceBinding b;
        b.provider = jb.at("provider").get<uint8_t>();
        b.service_id = jb.at("service").get<uint16_t>();
        b.methods = jb.at("methods").get<std::vector<uint16_t>>();
        b.pattern = static_cast<Pattern>(jb.at("pattern").get<int>());
        b.consumers = jb.at("consumers").get<std::vector<uint8_t>>();
        if (b.pattern == Pattern::Event) {
            b.event_strategy =
                static_cast<EventStrategy>(jb.at("strategy").get<int>());
            b.event_period = jb.at("period").get<double>();
        }
        t.bindings.push_back(b);
    }
    return t;
}

}  // namespace

void save_trace(const Trace& trace, std::ostream& out) {
    json header = {{"type", "header"},
                   {"seed", trace.seed},
                   {"topology", topology_to_json(trace.topology)}};
    out << header.dump() << "\n";
    for (const auto& p : trace.packets) {
        json jp = {{"t", p.timestamp},
                   {"src", p.src},
                   {"dst", p.dst},
                   {"origin", origin_name(p.origin)},
                   {"raw", hex_encode(someip::encode_packet(p.packet))}};
        out << jp.dump() << "\n";
    }
}

void save_trace_file(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimError("cannot open " + path + " for writing");
    save_trace(trace, out);
}

Trace load_trace(std::istream& in) {
    Trace trace;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (!have_header) {
            if (j.value("type", "") != "header")
                throw SimError("trace file does not start with a header");
            trace.seed = j.at("seed").get<uint64_t>();
            trace.topology = topology_from_json(j.at("topology"));
            have_header = true;
            continue;
        }
        TimedPacket p;
        p.timestamp = j.at("t").get<double>();
        p.src = j.at("src").get<uint8_t>();
        p.dst = j.at("dst").get<uint8_t>();
        p.origin = origin_from_name(j.at("origin").get<std::string>());
        p.packet =
            someip::decode_packet(hex_decode(j.at("raw").get<std::string>()));
        trace.packets.push_back(std::move(p));
    }
    if (!have_header) throw SimError("empty trace stream");
    return trace;
}

Trace load_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SimError("cannot open " + path);
    return load_trace(in);
}

uint64_t trace_hash(const Trace& trace) {
    std::ostringstream ss;
    save_trace(trace, ss);
    const std::string s = ss.str();
    return fnv1a64(s.data(), s.size());
}

}  // namespace sissa::sim
