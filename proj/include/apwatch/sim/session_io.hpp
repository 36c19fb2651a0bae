#pragma once

#include "apwatch/sim/scenario.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace apwatch::sim {

inline constexpr const char* kSessionHeader =
    "ap_id,station_id,start_s,end_s,input_octets,output_octets,input_packets,output_packets";

void write_sessions(std::ostream& out, const std::vector<SessionEvent>& events);
std::vector<SessionEvent> read_sessions(std::istream& in);

void save_sessions(const std::string& path, const std::vector<SessionEvent>& events);
std::vector<SessionEvent> load_sessions(const std::string& path);

}  // namespace apwatch::sim
