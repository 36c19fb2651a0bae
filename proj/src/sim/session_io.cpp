#include "apwatch/sim/session_io.hpp"

#include "apwatch/error.hpp"
#include "apwatch/io.hpp"

#include <fstream>
#include <sstream>

namespace apwatch::sim {

void write_sessions(std::ostream& out, const std::vector<SessionEvent>& events) {
    out << kSessionHeader << '\n';
    for (const auto& e : events) {
        out << e.ap_id << ',' << e.station_id << ',' << format_fixed(e.start_s, 3) << ',' << format_fixed(e.end_s, 3)
            << ',' << e.input_octets << ',' << e.output_octets << ',' << e.input_packets << ',' << e.output_packets
            << '\n';
    }
}

std::vector<SessionEvent> read_sessions(std::istream& in) {
    std::vector<SessionEvent> events;
    for (const auto& row : read_csv(in, kSessionHeader, "session log")) {
        SessionEvent e;
        e.ap_id = static_cast<int>(parse_int(row[0], "ap_id"));
        e.station_id = static_cast<int>(parse_int(row[1], "station_id"));
        e.start_s = parse_double(row[2], "start_s");
        e.end_s = parse_double(row[3], "end_s");
        auto counter = [](const std::string& s, const char* name) {
            auto v = parse_int(s, name);
            if (v < 0) {
                throw ValidationError(std::string(name) + " must be >= 0");
            }
            return static_cast<std::uint64_t>(v);
        };
        e.input_octets = counter(row[4], "input_octets");
        e.output_octets = counter(row[5], "output_octets");
        e.input_packets = counter(row[6], "input_packets");
        e.output_packets = counter(row[7], "output_packets");
        if (!(e.start_s < e.end_s)) {
            throw ValidationError("session log: start_s must be < end_s");
        }
        events.push_back(e);
    }
    return events;
}

void save_sessions(const std::string& path, const std::vector<SessionEvent>& events) {
    std::ostringstream out;
    write_sessions(out, events);
    write_text_atomic(path, out.str());
}

std::vector<SessionEvent> load_sessions(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read session log '" + path + "'");
    }
    return read_sessions(in);
}

}  // namespace apwatch::sim
