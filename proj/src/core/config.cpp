#include "apwatch/config.hpp"

#include "apwatch/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

namespace apwatch {

namespace {

std::string trim(const std::string& s) {
    auto begin = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
    auto end = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
    return begin < end ? std::string(begin, end) : std::string();
}

const std::map<std::string, std::string>& builtin_defaults() {
    static const std::map<std::string, std::string> table = {
        // run
        {"run.duration_s", "600"},
        {"run.slot_s", "15"},
        {"run.seed", "1"},
        // topology
        {"topology.ap_count", "2"},
        {"topology.sta_count", "16"},
        {"topology.assignment", "auto"},
        {"topology.mobility", "auto"},
        // mobility churn
        {"mobility.roam_handover_p", "0.01"},
        {"mobility.roam_blind_p", "0.005"},
        {"mobility.roam_reconnect_mean_s", "5"},
        {"mobility.inroom_reassoc_p", "0.002"},
        {"mobility.inroom_reconnect_mean_s", "1"},
        // traffic
        {"traffic.flow_count", "3"},
        {"traffic.flow.0.direction", "download"},
        {"traffic.flow.0.target", "ap:1"},
        {"traffic.flow.0.mean_bytes", "600"},
        {"traffic.flow.0.sd_bytes", "150"},
        {"traffic.flow.0.rate", "10"},
        {"traffic.flow.1.direction", "upload"},
        {"traffic.flow.1.target", "ap:0"},
        {"traffic.flow.1.mean_bytes", "500"},
        {"traffic.flow.1.sd_bytes", "100"},
        {"traffic.flow.1.rate", "10"},
        {"traffic.flow.2.direction", "bidirectional"},
        {"traffic.flow.2.target", "all"},
        {"traffic.flow.2.mean_bytes", "200"},
        {"traffic.flow.2.sd_bytes", "50"},
        {"traffic.flow.2.rate", "5"},
        // anomaly
        {"anomaly.kind", "none"},
        {"anomaly.target_ap", "1"},
        {"anomaly.window_start_s", "0"},
        {"anomaly.window_end_s", "0"},
        {"anomaly.halt_period_s", "15"},
        {"anomaly.halt_gap_s", "0"},
        {"anomaly.noise_dbm", "-110"},
        {"anomaly.noise_scope", "field"},
        {"anomaly.burst_duration_s", "30"},
        {"anomaly.sleep_duration_s", "30"},
        {"anomaly.direction", "arrival"},
        {"anomaly.node_count", "7"},
        // anomaly physics
        {"noise.floor_p", "0.3"},
        {"noise.churn_gain", "3"},
        {"overload.burst_mean_bytes", "1200"},
        {"overload.burst_sd_bytes", "200"},
        {"overload.burst_rate", "50"},
        {"overload.churn_multiplier", "5"},
        // features / pca
        {"pca.components", "3"},
        {"pca.standardize", "true"},
        {"pca.scope", "per_ap"},
        // hmm
        {"hmm.states", "3"},
        {"hmm.restarts", "5"},
        {"hmm.max_iterations", "20"},
        {"hmm.tolerance", "1e-6"},
        {"hmm.covariance", "diagonal"},
        {"hmm.input", "pca"},
        {"hmm.scope", "per_ap"},
        {"hmm.series", "incremental"},
        {"hmm.window", "5"},
        {"hmm.seed", "7"},
        // detector
        {"detector.bins", "auto"},
        {"detector.mode_fraction", "0.25"},
        {"detector.hmm_tails", "low"},
        {"detector.baseline_tails", "both"},
        // eval
        {"eval.train_seeds", "101..110"},
        {"eval.test_seeds", "1..10"},
    };
    return table;
}

const std::regex& flow_key_pattern() {
    static const std::regex re(R"(traffic\.flow\.(\d+)\.(direction|target|mean_bytes|sd_bytes|rate))");
    return re;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw ValidationError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

}  // namespace

bool FlatConfig::is_known_key(const std::string& key) {
    if (builtin_defaults().count(key) != 0) {
        return true;
    }
    return std::regex_match(key, flow_key_pattern());
}

FlatConfig FlatConfig::defaults() {
    FlatConfig cfg;
    cfg.entries_ = builtin_defaults();
    return cfg;
}

FlatConfig FlatConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read config file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    FlatConfig cfg = defaults();
    cfg.merge_text(buffer.str(), path);
    return cfg;
}

void FlatConfig::merge_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void FlatConfig::apply_override(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ValidationError("override '" + assignment + "': expected key=value");
    }
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void FlatConfig::set(const std::string& key, const std::string& value) {
    if (!is_known_key(key)) {
        throw ValidationError("unknown config key '" + key + "'");
    }
    entries_[key] = value;
}

bool FlatConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string& FlatConfig::get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw ValidationError("missing config key '" + key + "'");
    }
    return it->second;
}

double FlatConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) {
            bad_value(key, v, "a number");
        }
        return d;
    } catch (const std::logic_error&) {
        bad_value(key, v, "a number");
    }
}

std::int64_t FlatConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        bad_value(key, v, "an integer");
    }
    return out;
}

std::uint64_t FlatConfig::get_uint(const std::string& key) const {
    const std::string& v = get(key);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        bad_value(key, v, "an unsigned integer");
    }
    return out;
}

bool FlatConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no") {
        return false;
    }
    bad_value(key, v, "true/false");
}

std::vector<std::string> FlatConfig::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::string FlatConfig::to_text() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k + " = " + v + "\n";
    }
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    auto parse_one = [&](const std::string& s) {
        std::uint64_t v = 0;
        auto t = trim(s);
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
            throw ValidationError("invalid seed list '" + text + "'");
        }
        return v;
    };
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) {
            continue;
        }
        if (auto dots = item.find(".."); dots != std::string::npos) {
            auto lo = parse_one(item.substr(0, dots));
            auto hi = parse_one(item.substr(dots + 2));
            if (hi < lo) {
                throw ValidationError("invalid seed range '" + item + "'");
            }
            for (auto s = lo; s <= hi; ++s) {
                seeds.push_back(s);
            }
        } else {
            seeds.push_back(parse_one(item));
        }
    }
    auto sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ValidationError("seed list '" + text + "' contains duplicates");
    }
    if (seeds.empty()) {
        throw ValidationError("seed list is empty");
    }
    return seeds;
}

std::uint64_t fingerprint(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string fingerprint_hex(const std::string& text) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fingerprint(text)));
    return buf;
}

}  // namespace apwatch
