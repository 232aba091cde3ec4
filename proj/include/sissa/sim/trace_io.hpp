#pragma once

#include <iosfwd>
#include <string>

#include "sissa/sim/types.hpp"

namespace sissa::sim {

std::string hex_encode(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> hex_decode(const std::string& hex);

// Newline-delimited JSON: one header record (topology + seed) followed by
// one record per packet with the bit-exact wire bytes hex encoded.
void save_trace(const Trace& trace, std::ostream& out);
void save_trace_file(const Trace& trace, const std::string& path);

Trace load_trace(std::istream& in);
Trace load_trace_file(const std::string& path);

// FNV-1a hash of the serialized trace; the determinism oracle.
uint64_t trace_hash(const Trace& trace);

}  // namespace sissa::sim
