#include "apwatch/features/featurizer.hpp"

#include "apwatch/error.hpp"
#include "apwatch/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace apwatch::features {

const std::array<const char*, kFeatureCount> kFeatureNames = {
    "user_count",    "session_count", "connection_duration", "input_octets",
    "output_octets", "input_packets", "output_packets"};

Eigen::VectorXd FeatureVector::to_vector() const {
    Eigen::VectorXd v(kFeatureCount);
    v << user_count, session_count, connection_duration, input_octets, output_octets, input_packets, output_packets;
    return v;
}

FeatureVector FeatureVector::from_vector(const Eigen::VectorXd& v) {
    if (v.size() != kFeatureCount) {
        throw ValidationError("feature vector must have 7 entries");
    }
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

Eigen::MatrixXd FeatureSeries::matrix() const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(vectors.size()), kFeatureCount);
    for (std::size_t t = 0; t < vectors.size(); ++t) {
        m.row(static_cast<Eigen::Index>(t)) = vectors[t].to_vector().transpose();
    }
    return m;
}

FeatureSeries featurize(const std::vector<sim::SessionEvent>& events, int ap_id, double slot_length_s,
                        double run_duration_s) {
    if (!(slot_length_s > 0) || !(run_duration_s > 0)) {
        throw ValidationError("featurize: slot length and run duration must be positive");
    }
    const double q = run_duration_s / slot_length_s;
    if (std::fabs(q - std::round(q)) > 1e-9) {
        throw ValidationError("featurize: run duration must be an integer multiple of the slot length");
    }
    const auto slots = static_cast<std::size_t>(std::llround(q));

    FeatureSeries series;
    series.ap_id = ap_id;
    series.slot_length_s = slot_length_s;
    series.vectors.assign(slots, FeatureVector{});
    std::vector<std::set<int>> users(slots);

    for (const auto& e : events) {
        if (e.start_s < 0 || e.end_s > run_duration_s + 1e-9 || !(e.start_s < e.end_s)) {
            throw ValidationError("featurize: session [" + format_fixed(e.start_s, 3) + ", " +
                                  format_fixed(e.end_s, 3) + ") lies outside [0, " + format_fixed(run_duration_s, 3) +
                                  "]");
        }
        if (e.ap_id != ap_id) {
            continue;
        }
        const double length = e.end_s - e.start_s;
        auto first = static_cast<std::size_t>(std::floor(e.start_s / slot_length_s));
        for (std::size_t k = first; k < slots; ++k) {
            const double lo = static_cast<double>(k) * slot_length_s;
            const double hi = lo + slot_length_s;
            if (lo >= e.end_s) {
                break;
            }
            const double overlap = std::min(hi, e.end_s) - std::max(lo, e.start_s);
            if (overlap <= 0) {
                continue;
            }
            const double share = overlap / length;
            auto& v = series.vectors[k];
            users[k].insert(e.station_id);
            v.session_count += 1;
            v.connection_duration += overlap;
            v.input_octets += static_cast<double>(e.input_octets) * share;
            v.output_octets += static_cast<double>(e.output_octets) * share;
            v.input_packets += static_cast<double>(e.input_packets) * share;
            v.output_packets += static_cast<double>(e.output_packets) * share;
        }
    }
    for (std::size_t k = 0; k < slots; ++k) {
        series.vectors[k].user_count = static_cast<double>(users[k].size());
    }
    return series;
}

Eigen::MatrixXd stack(const std::vector<FeatureSeries>& series) {
    Eigen::Index rows = 0;
    for (const auto& s : series) {
        rows += static_cast<Eigen::Index>(s.size());
    }
    Eigen::MatrixXd out(rows, kFeatureCount);
    Eigen::Index r = 0;
    for (const auto& s : series) {
        auto m = s.matrix();
        out.middleRows(r, m.rows()) = m;
        r += m.rows();
    }
    return out;
}

namespace {

std::string feature_header() {
    std::string h = "slot_index";
    for (const auto* name : kFeatureNames) {
        h += ',';
        h += name;
    }
    return h;
}

}  // namespace

void write_features(std::ostream& out, const FeatureSeries& series) {
    out << feature_header() << '\n';
    for (std::size_t t = 0; t < series.vectors.size(); ++t) {
        auto v = series.vectors[t].to_vector();
        out << t;
        for (int j = 0; j < kFeatureCount; ++j) {
            out << ',' << format_exact(v[j]);
        }
        out << '\n';
    }
}

FeatureSeries read_features(std::istream& in, int ap_id, double slot_length_s) {
    FeatureSeries series;
    series.ap_id = ap_id;
    series.slot_length_s = slot_length_s;
    std::size_t expected = 0;
    for (const auto& row : read_csv(in, feature_header(), "feature file")) {
        if (static_cast<std::size_t>(parse_int(row[0], "slot_index")) != expected++) {
            throw ValidationError("feature file: slot indices must be consecutive from 0");
        }
        Eigen::VectorXd v(kFeatureCount);
        for (int j = 0; j < kFeatureCount; ++j) {
            v[j] = parse_double(row[static_cast<std::size_t>(j) + 1], kFeatureNames[static_cast<std::size_t>(j)]);
        }
        series.vectors.push_back(FeatureVector::from_vector(v));
    }
    return series;
}

void save_features(const std::string& path, const FeatureSeries& series) {
    std::ostringstream out;
    write_features(out, series);
    write_text_atomic(path, out.str());
}

FeatureSeries load_features(const std::string& path, int ap_id, double slot_length_s) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read feature file '" + path + "'");
    }
    return read_features(in, ap_id, slot_length_s);
}

void write_projection(std::ostream& out, const Eigen::MatrixXd& scores) {
    out << "slot_index";
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
        out << ",pc" << (j + 1);
    }
    out << '\n';
    for (Eigen::Index t = 0; t < scores.rows(); ++t) {
        out << t;
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            out << ',' << format_exact(scores(t, j));
        }
        out << '\n';
    }
}

}  // namespace apwatch::features
