#include "apwatch/eval/report.hpp"

#include "apwatch/error.hpp"
#include "apwatch/hmm/gaussian_hmm.hpp"
#include "apwatch/io.hpp"
#include "apwatch/sim/session_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unistd.h>

namespace apwatch::eval {

namespace fs = std::filesystem;

namespace {

constexpr const char* kConventions =
    "# precision = 1 when nothing is flagged; recall = NA when no slot is anomalous; "
    "quantiles are nearest-rank (rank = ceil(p*n))";

std::string metric_text(const std::optional<double>& v) {
    return v ? format_fixed(*v, 6) : "NA";
}

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void OutputSink::write(const fs::path& relative, const std::string& content, const std::string& fingerprint) {
    write_text_atomic(root_ / relative, content);
    files_[relative.generic_string()] = {fingerprint_hex(content), fingerprint};
}

std::string detections_json(const CellResult& cell) {
    nlohmann::ordered_json j;
    j["format"] = "apwatch-cell-detections-v1";
    j["family"] = cell.family;
    j["seed"] = cell.seed;
    j["ap_id"] = cell.ap;
    std::vector<int> truth;
    for (std::size_t i = 0; i < cell.truth.size(); ++i) {
        if (cell.truth[i]) {
            truth.push_back(static_cast<int>(i));
        }
    }
    j["slot_count"] = cell.truth.size();
    j["truth_slots"] = truth;
    nlohmann::ordered_json results = nlohmann::ordered_json::array();
    for (const auto& o : cell.outcomes) {
        auto r = nlohmann::ordered_json::parse(detect::detection_to_json(o.detection));
        r["precision"] = o.precision;
        r["recall"] = o.recall ? nlohmann::ordered_json(*o.recall) : nlohmann::ordered_json("NA");
        r["true_positive"] = o.confusion.true_positive;
        r["false_positive"] = o.confusion.false_positive;
        r["false_negative"] = o.confusion.false_negative;
        results.push_back(r);
    }
    j["results"] = results;
    return j.dump(2) + "\n";
}

std::string summary_csv(const FamilySummary& summary) {
    std::ostringstream s;
    s << kConventions << '\n' << kSummaryHeader << '\n';
    for (std::size_t k = 0; k < summary.seeds.size(); ++k) {
        for (const auto& m : summary.methods) {
            s << summary.seeds[k] << ',' << detect::to_string(m.method) << ',' << format_fixed(m.precision[k], 6)
              << ',' << metric_text(m.recall[k]) << ',' << m.true_positives[k] << ',' << m.false_positives[k] << ','
              << m.false_negatives[k] << ',';
            s << m.true_positives[k] + m.false_positives[k] << '\n';
        }
    }
    return s.str();
}

std::string boxplot_csv(const FamilySummary& summary) {
    std::ostringstream s;
    s << kConventions << '\n' << kBoxplotHeader << '\n';
    for (const auto& m : summary.methods) {
        for (const auto& [metric, q] : {std::pair{"precision", m.precision_q}, std::pair{"recall", m.recall_q}}) {
            const std::pair<const char*, double> stats[] = {{"min", q ? q->min : 0},
                                                            {"q1", q ? q->q1 : 0},
                                                            {"median", q ? q->median : 0},
                                                            {"q3", q ? q->q3 : 0},
                                                            {"max", q ? q->max : 0}};
            for (const auto& [name, value] : stats) {
                s << detect::to_string(m.method) << ',' << metric << ',' << name << ','
                  << (q ? format_fixed(value, 6) : "NA") << '\n';
            }
        }
    }
    return s.str();
}

std::string series_plot_csv(const CellResult& cell) {
    std::ostringstream s;
    s << kSeriesPlotHeader << '\n';
    for (Eigen::Index t = 0; t < cell.likelihood.size(); ++t) {
        s << "series," << t << ',' << format_exact(cell.likelihood[t]) << '\n';
    }
    for (int t : cell.outcome(detect::Method::Hmm).detection.anomalous_slots) {
        s << "marker," << t << ',' << format_exact(cell.likelihood[t]) << '\n';
    }
    for (std::size_t t = 0; t < cell.truth.size(); ++t) {
        if (cell.truth[t]) {
            s << "truth," << t << ",1\n";
        }
    }
    return s.str();
}

std::string comparison_csv(const ComparisonReport& report) {
    std::ostringstream s;
    s << kComparisonHeader << '\n';
    for (const auto& o : report.orderings) {
        s << o.family << ',' << o.metric << ',' << o.ordering;
        for (const auto& m : o.medians) {
            s << ',' << metric_text(m);
        }
        s << '\n';
    }
    return s.str();
}

std::string series_svg(const CellResult& cell) {
    constexpr double w = 640, h = 240, pad = 30;
    const auto& v = cell.likelihood;
    const double lo = v.size() ? v.minCoeff() : 0;
    const double hi = v.size() ? v.maxCoeff() : 1;
    const double span = hi > lo ? hi - lo : 1;
    const double n = std::max<double>(1, static_cast<double>(v.size()) - 1);
    auto x = [&](double t) { return pad + (w - 2 * pad) * t / n; };
    auto y = [&](double value) { return h - pad - (h - 2 * pad) * (value - lo) / span; };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    s << "<text x=\"" << pad << "\" y=\"18\" font-size=\"12\">"
      << svg_escape(cell.family + " seed " + std::to_string(cell.seed) + " ap " + std::to_string(cell.ap))
      << " log-likelihood</text>\n";
    for (std::size_t t = 0; t < cell.truth.size(); ++t) {
        if (cell.truth[t]) {
            s << "<rect x=\"" << format_fixed(x(static_cast<double>(t)) - 3, 2) << "\" y=\"" << pad
              << "\" width=\"6\" height=\"" << h - 2 * pad << "\" fill=\"#f3d9d9\"/>\n";
        }
    }
    s << "<polyline fill=\"none\" stroke=\"#1f4e8c\" stroke-width=\"1.5\" points=\"";
    for (Eigen::Index t = 0; t < v.size(); ++t) {
        s << (t ? " " : "") << format_fixed(x(static_cast<double>(t)), 2) << ',' << format_fixed(y(v[t]), 2);
    }
    s << "\"/>\n";
    for (int t : cell.outcome(detect::Method::Hmm).detection.anomalous_slots) {
        s << "<circle cx=\"" << format_fixed(x(t), 2) << "\" cy=\"" << format_fixed(y(v[t]), 2)
          << "\" r=\"4\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

std::string boxplot_svg(const FamilySummary& summary) {
    constexpr double w = 640, h = 260, pad = 30, box = 30;
    auto y = [&](double value) { return h - pad - (h - 2 * pad) * value; };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    s << "<text x=\"" << pad << "\" y=\"18\" font-size=\"12\">" << svg_escape(summary.family)
      << " precision / recall</text>\n";
    s << "<line x1=\"" << pad << "\" y1=\"" << y(0) << "\" x2=\"" << w - pad << "\" y2=\"" << y(0)
      << "\" stroke=\"#888\"/>\n";
    int slot = 0;
    for (const char* metric : {"precision", "recall"}) {
        for (const auto& m : summary.methods) {
            const auto& q = std::string(metric) == "precision" ? m.precision_q : m.recall_q;
            const double cx = pad + 50 + slot * 90.0 + (slot >= 3 ? 40 : 0);
            ++slot;
            s << "<text x=\"" << format_fixed(cx - 20, 2) << "\" y=\"" << h - 10 << "\" font-size=\"10\">"
              << detect::to_string(m.method) << ' ' << metric[0] << "</text>\n";
            if (!q) {
                continue;
            }
            s << "<line x1=\"" << format_fixed(cx, 2) << "\" y1=\"" << format_fixed(y(q->min), 2) << "\" x2=\""
              << format_fixed(cx, 2) << "\" y2=\"" << format_fixed(y(q->max), 2) << "\" stroke=\"#333\"/>\n";
            s << "<rect x=\"" << format_fixed(cx - box / 2, 2) << "\" y=\"" << format_fixed(y(q->q3), 2)
              << "\" width=\"" << box << "\" height=\"" << format_fixed(y(q->q1) - y(q->q3), 2)
              << "\" fill=\"#d6e4f0\" stroke=\"#333\"/>\n";
            s << "<line x1=\"" << format_fixed(cx - box / 2, 2) << "\" y1=\"" << format_fixed(y(q->median), 2)
              << "\" x2=\"" << format_fixed(cx + box / 2, 2) << "\" y2=\"" << format_fixed(y(q->median), 2)
              << "\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

void write_cell(OutputSink& sink, const CellResult& cell, const std::string& fingerprint) {
    const fs::path dir = fs::path(cell.family) / std::to_string(cell.seed);
    std::ostringstream sessions;
    sim::write_sessions(sessions, cell.sessions);
    sink.write(dir / "sessions.csv", sessions.str(), fingerprint);
    std::ostringstream feats;
    features::write_features(feats, cell.features);
    sink.write(dir / "features.csv", feats.str(), fingerprint);
    std::ostringstream lik;
    hmm::write_series(lik, cell.likelihood);
    sink.write(dir / "likelihood.csv", lik.str(), fingerprint);
    sink.write(dir / "detections.json", detections_json(cell), fingerprint);
    sink.write(dir / "series_plot.csv", series_plot_csv(cell), fingerprint);
    sink.write(dir / "likelihood.svg", series_svg(cell), fingerprint);
}

void write_family(OutputSink& sink, const FamilySummary& summary, const std::string& fingerprint) {
    const fs::path dir = summary.family;
    sink.write(dir / "summary.csv", summary_csv(summary), fingerprint);
    sink.write(dir / "boxplot.csv", boxplot_csv(summary), fingerprint);
    sink.write(dir / "boxplot.svg", boxplot_svg(summary), fingerprint);
}

void write_models(OutputSink& sink, const TrainedModels& models, const std::string& fingerprint) {
    for (const auto& m : models.models) {
        const std::string tag = m.ap < 0 ? "global" : "ap" + std::to_string(m.ap);
        sink.write(fs::path("models") / (tag + "_pca.json"), features::pca_to_json(m.pca), fingerprint);
        sink.write(fs::path("models") / (tag + "_hmm.json"), hmm::model_to_json(m.training.model), fingerprint);
        std::ostringstream trace;
        trace << "iteration,loglik\n";
        for (std::size_t i = 0; i < m.training.trace.size(); ++i) {
            trace << i << ',' << format_exact(m.training.trace[i]) << '\n';
        }
        sink.write(fs::path("models") / (tag + "_trace.csv"), trace.str(), fingerprint);
    }
}

void write_manifest(OutputSink& sink, const FlatConfig& cfg, const std::vector<std::string>& notes) {
    nlohmann::ordered_json j;
    j["format"] = "apwatch-manifest-v1";
    j["config_fingerprint"] = fingerprint_hex(cfg.to_text());
    nlohmann::ordered_json effective = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg.entries()) {
        effective[k] = v;
    }
    j["effective_config"] = effective;
    j["notes"] = notes;
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& [path, info] : sink.files()) {
        files.push_back({{"path", path}, {"content_fnv1a", info.first}, {"spec_fingerprint", info.second}});
    }
    j["files"] = files;
    write_text_atomic(sink.root() / "manifest.json", j.dump(2) + "\n");
}

namespace {

fs::path staging_path(const fs::path& out) {
    fs::path p = out;
    p += ".partial-" + std::to_string(::getpid());
    return p;
}

void prepare(const ReproOptions& options, const fs::path& staging) {
    if (options.out_dir.empty()) {
        throw ValidationError("an output directory is required");
    }
    if (fs::exists(options.out_dir) && !fs::is_empty(options.out_dir) && !options.force) {
        throw IoError("output directory " + options.out_dir.string() + " is not empty (use --force to replace it)");
    }
    std::error_code ec;
    fs::remove_all(staging, ec);
    fs::create_directories(staging, ec);
    if (ec) {
        throw IoError("cannot create " + staging.string() + ": " + ec.message());
    }
}

void promote(const fs::path& staging, const fs::path& out) {
    std::error_code ec;
    fs::remove_all(out, ec);
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path(), ec);
    }
    fs::rename(staging, out, ec);
    if (ec) {
        throw IoError("cannot move results into " + out.string() + ": " + ec.message());
    }
}

ReproResult run_families(const FlatConfig& base, const std::vector<std::string>& overrides,
                         const std::vector<std::string>& names, const std::vector<std::uint64_t>& seeds,
                         const ReproOptions& options) {
    const fs::path staging = staging_path(options.out_dir);
    prepare(options, staging);
    try {
        FlatConfig effective = base;
        for (const auto& o : overrides) {
            effective.apply_override(o);
        }
        OutputSink sink(staging);
        const TrainedModels models = train_models(effective);
        const std::string corpus_fp = models.corpus_fingerprint;
        write_models(sink, models, corpus_fp);

        ReproResult result;
        for (const auto& name : names) {
            ExperimentSpec spec;
            spec.family = name;
            spec.base = base;
            spec.overrides = overrides;
            spec.seeds = seeds;
            const auto exp = run_experiment(spec, models, options.jobs);
            const std::string fp = fingerprint_hex(family_config(base, name, overrides).to_text());
            for (const auto& cell : exp.cells) {
                write_cell(sink, cell, fp);
            }
            write_family(sink, exp.summary, fp);
            result.summaries.push_back(exp.summary);
        }
        result.comparison = compare_methods(result.summaries);
        sink.write("comparison.csv", comparison_csv(result.comparison), fingerprint_hex(effective.to_text()));
        std::vector<std::string> notes = models.warnings;
        notes.push_back(std::string("hmm_precision_not_below_baselines=") +
                        (result.comparison.hmm_precision_not_below_baselines ? "true" : "false"));
        notes.push_back(std::string("hmm_strictly_better_overload_flash=") +
                        (result.comparison.hmm_strictly_better_overload_flash ? "true" : "false"));
        notes.push_back(std::string("noise_recall_non_increasing=") +
                        (result.comparison.noise_recall_non_increasing ? "true" : "false"));
        for (const auto& n : result.comparison.notes) {
            notes.push_back(n);
        }
        write_manifest(sink, effective, notes);
        promote(staging, options.out_dir);
        return result;
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
}

}  // namespace

ReproResult repro(const FlatConfig& base, const std::vector<std::string>& overrides, const ReproOptions& options) {
    std::vector<std::string> names = options.families;
    if (names.empty()) {
        for (const auto& f : families()) {
            names.push_back(f.name);
        }
    }
    return run_families(base, overrides, names, {}, options);
}

ReproResult eval_family(const FlatConfig& base, const std::vector<std::string>& overrides, const std::string& family,
                        const std::vector<std::uint64_t>& seeds, const ReproOptions& options) {
    find_family(family);
    return run_families(base, overrides, {family}, seeds, options);
}

}  // namespace apwatch::eval
