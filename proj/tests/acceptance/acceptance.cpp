// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "apwatch/config.hpp"
#include "apwatch/detect/detector.hpp"
#include "apwatch/detect/histogram.hpp"
#include "apwatch/error.hpp"
#include "apwatch/eval/experiment.hpp"
#include "apwatch/eval/report.hpp"
#include "apwatch/features/featurizer.hpp"
#include "apwatch/features/pca.hpp"
#include "apwatch/hmm/scoring.hpp"
#include "apwatch/hmm/training.hpp"
#include "apwatch/io.hpp"
#include "apwatch/rng.hpp"
#include "apwatch/sim/session_io.hpp"
#include "apwatch/sim/simulator.hpp"

#include "oracles.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

using namespace apwatch;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> details;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            details.push_back("FAILED: " + what);
        }
    }
    void note(const std::string& what) { details.push_back(what); }
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int decimals = 4) { return format_fixed(v, decimals); }

// ---------------------------------------------------------------------------

Outcome forward_oracle() {
    Outcome out;
    const auto start = Clock::now();
    Rng rng = make_stream(2024, StreamKind::Synthetic);
    double worst = 0;
    int path_mismatch = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(uniform01(rng) * 3);
        const int T = 1 + static_cast<int>(uniform01(rng) * 6);
        const int d = 1 + static_cast<int>(uniform01(rng) * 3);
        auto m = oracle::random_model(rng, n, d);
        auto obs = oracle::random_observations(rng, T, d);
        worst = std::max(worst, std::abs(hmm::forward_loglik(m, obs).total - oracle::brute_force_loglik(m, obs)));
        auto got = hmm::viterbi(m, obs);
        auto want = oracle::brute_force_viterbi(m, obs);
        path_mismatch += got.path != want.path;
        worst = std::max(worst, std::abs(got.log_probability - want.log_probability));
    }
    const double elapsed = seconds_since(start);
    out.check(worst <= 1e-9, "max |forward - enumeration| = " + std::to_string(worst));
    out.check(path_mismatch == 0, std::to_string(path_mismatch) + " Viterbi paths differ from the exhaustive argmax");
    out.check(elapsed < 5.0, "runtime " + fmt(elapsed, 2) + " s");
    out.note("max abs error " + std::to_string(worst) + ", " + fmt(elapsed, 3) + " s");
    return out;
}

Outcome em_contract() {
    Outcome out;
    Rng rng = make_stream(7, StreamKind::Synthetic, 2);
    int decreases = 0, overlong = 0, early_stop_bad = 0, non_stochastic = 0, not_pd = 0, iterates = 0;
    for (int problem = 0; problem < 50; ++problem) {
        const int d = 1 + problem % 3;
        auto truth = oracle::random_model(rng, 2 + problem % 2, d);
        std::vector<hmm::Observations> seqs;
        const int count = 1 + problem % 3;
        for (int s = 0; s < count; ++s) seqs.push_back(oracle::sample_hmm(truth, 30 + 20 * (problem % 5), rng));
        hmm::TrainConfig cfg;  // 20 iterations, relative tolerance 1e-6
        cfg.covariance = problem % 2 ? hmm::CovarianceMode::Full : hmm::CovarianceMode::Diagonal;
        const int states = 1 + problem % 4;
        auto init = hmm::init_random(states, seqs, 1000 + static_cast<std::uint64_t>(problem)).model;
        auto r = hmm::baum_welch(init, seqs, cfg);

        for (std::size_t k = 1; k < r.trace.size(); ++k) decreases += r.trace[k] < r.trace[k - 1] - 1e-8;
        overlong += r.iterations > cfg.max_iterations;
        // Stops at the first iteration whose relative improvement is below tolerance.
        for (std::size_t k = 1; k < r.trace.size(); ++k) {
            const double rel = (r.trace[k] - r.trace[k - 1]) / std::abs(r.trace[k - 1]);
            const bool last = k + 1 == r.trace.size();
            if (!last && rel < cfg.tolerance) ++early_stop_bad;
            if (last && r.iterations < cfg.max_iterations && rel >= cfg.tolerance) ++early_stop_bad;
        }
        // Every intermediate model: rerun with a shorter iteration cap.
        for (int k = 1; k <= r.iterations; ++k) {
            hmm::TrainConfig capped = cfg;
            capped.max_iterations = k;
            auto m = hmm::baum_welch(init, seqs, capped).model;
            ++iterates;
            bool ok = std::abs(m.pi.sum() - 1.0) <= 1e-9 && m.pi.minCoeff() >= 0;
            for (int i = 0; i < m.states(); ++i) ok = ok && std::abs(m.transitions.row(i).sum() - 1.0) <= 1e-9;
            ok = ok && m.transitions.minCoeff() >= 0;
            non_stochastic += !ok;
            for (const auto& c : m.covariances) not_pd += c.llt().info() != Eigen::Success;
        }
    }
    out.check(decreases == 0, std::to_string(decreases) + " trace decreases beyond 1e-8");
    out.check(overlong == 0, std::to_string(overlong) + " runs exceeded 20 iterations");
    out.check(early_stop_bad == 0, std::to_string(early_stop_bad) + " stopping-rule violations");
    out.check(non_stochastic == 0, std::to_string(non_stochastic) + " non-stochastic iterates");
    out.check(not_pd == 0, std::to_string(not_pd) + " non-PD covariances");
    out.note("50 problems, " + std::to_string(iterates) + " iterates checked");
    return out;
}

Outcome planted_recovery() {
    Outcome out;
    const auto start = Clock::now();
    hmm::GaussianHmm truth;
    truth.pi = Eigen::Vector2d(0.5, 0.5);
    truth.transitions.resize(2, 2);
    truth.transitions << 0.9, 0.1, 0.2, 0.8;
    Eigen::VectorXd a(2), b(2);
    a << 0.0, 0.0;
    b << 6.0, 8.0;  // distance 10 sigma
    truth.means = {a, b};
    truth.covariances = {Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
    int recovered = 0;
    double worst = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng = make_stream(seed, StreamKind::Synthetic, 3);
        auto obs = oracle::sample_hmm(truth, 2000, rng);
        hmm::TrainConfig cfg;
        cfg.restarts = 5;
        cfg.seed = seed;
        auto r = hmm::train(2, {obs}, cfg);
        auto err = [&](int i, int j) { return (r.model.means[i] - truth.means[j]).cwiseAbs().maxCoeff(); };
        const double e = std::min(std::max(err(0, 0), err(1, 1)), std::max(err(0, 1), err(1, 0)));
        worst = std::max(worst, e);
        recovered += e < 0.1;
    }
    const double elapsed = seconds_since(start);
    out.check(recovered >= 9, std::to_string(recovered) + "/10 seeds recovered");
    out.check(elapsed < 30.0, "runtime " + fmt(elapsed, 2) + " s");
    out.note(std::to_string(recovered) + "/10 seeds within 0.1 sigma, worst " + fmt(worst) + ", " + fmt(elapsed, 2) +
             " s");
    return out;
}

Outcome init_ranges() {
    Outcome out;
    Eigen::MatrixXd data(2, 1);
    data << -1.0, 1.0;  // mu = 0, sigma = 1
    const int draws = 100000;
    std::vector<int> mean_bins(10, 0), var_bins(10, 0);
    double mlo = 1e9, mhi = -1e9, vlo = 1e9, vhi = -1e9;
    for (int k = 0; k < draws; ++k) {
        auto m = hmm::init_random(1, data, static_cast<std::uint64_t>(k)).model;
        const double mu = m.means[0](0);
        const double var = m.covariances[0](0, 0);
        mlo = std::min(mlo, mu);
        mhi = std::max(mhi, mu);
        vlo = std::min(vlo, var);
        vhi = std::max(vhi, var);
        mean_bins[static_cast<std::size_t>(std::clamp(static_cast<int>((mu + 3.0) / 0.6), 0, 9))]++;
        var_bins[static_cast<std::size_t>(std::clamp(static_cast<int>((var - 0.5) / 0.25), 0, 9))]++;
    }
    out.check(mlo > -3.0 && mlo < -2.9, "mean min " + fmt(mlo, 5));
    out.check(mhi > 2.9 && mhi < 3.0, "mean max " + fmt(mhi, 5));
    out.check(vlo > 0.5 && vlo < 0.5 + 0.025, "variance min " + fmt(vlo, 5));
    out.check(vhi < 3.0 && vhi > 3.0 - 0.025, "variance max " + fmt(vhi, 5));
    const double expected = draws / 10.0;
    int worst = 0;
    for (int b = 0; b < 10; ++b) {
        for (int c : {mean_bins[static_cast<std::size_t>(b)], var_bins[static_cast<std::size_t>(b)]}) {
            worst = std::max(worst, static_cast<int>(std::abs(c - expected)));
            out.check(std::abs(c - expected) <= 0.1 * expected, "bin " + std::to_string(b) + " holds " +
                                                                    std::to_string(c));
        }
    }
    out.note("mean range [" + fmt(mlo) + ", " + fmt(mhi) + "], variance range [" + fmt(vlo) + ", " + fmt(vhi) +
             "], largest bin deviation " + std::to_string(worst) + " of " + fmt(expected, 0));
    return out;
}

Outcome pca_properties(const eval::TrainedModels& models, const FlatConfig& base) {
    Outcome out;
    Rng rng = make_stream(5, StreamKind::Synthetic);
    Eigen::VectorXd dir(7);
    dir << 0.3, -1.0, 2.0, 0.5, 4.0, -0.2, 1.0;
    Eigen::MatrixXd line(60, 7);
    for (int t = 0; t < 60; ++t) line.row(t) = (uniform01(rng) * 10.0 - 5.0) * dir.transpose();
    const double rank1 = features::fit_pca(line, 3).explained_variance_ratio(0);
    out.check(std::abs(rank1 - 1.0) <= 1e-9, "rank-1 first ratio " + std::to_string(rank1));

    // Full-rank fits on the normal corpus.
    std::vector<features::FeatureSeries> corpus;
    FlatConfig cfg = base;
    for (auto seed : parse_seed_list(base.get("eval.train_seeds"))) {
        cfg.set("run.seed", std::to_string(seed));
        auto events = sim::simulate(sim::ScenarioSpec::from_config(cfg));
        for (int ap = 0; ap < 2; ++ap) corpus.push_back(features::featurize(events, ap, 15, 600));
    }
    std::vector<features::PcaModel> fits;
    for (const auto& m : models.models) fits.push_back(m.pca);
    fits.push_back(features::fit_pca(features::stack(corpus), 7));
    for (const auto& p : fits) {
        const int k = p.component_count();
        Eigen::MatrixXd gram = p.components * p.components.transpose();
        const double dev = (gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
        out.check(dev <= 1e-9, "orthonormality deviation " + std::to_string(dev));
        for (int i = 1; i < k; ++i) {
            out.check(p.explained_variance_ratio(i) <= p.explained_variance_ratio(i - 1), "ratios not sorted");
        }
        out.check(p.cumulative_ratio() <= 1.0 + 1e-9, "ratios sum above 1");
    }
    for (const auto& m : models.models) {
        out.note("normal corpus AP" + std::to_string(m.ap) + ": 3-component cumulative ratio " +
                 fmt(m.pca.cumulative_ratio()) + " (reference figure: above 0.99; informational)");
    }
    return out;
}

Outcome histogram_suite() {
    Outcome out;
    int planted_ok = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng = make_stream(seed, StreamKind::Synthetic, 6);
        std::normal_distribution<double> z(0.0, 1.0);
        Eigen::VectorXd v(40);
        for (int i = 0; i < 39; ++i) v(i) = z(rng);
        v(39) = -50.0;
        planted_ok += detect::histogram_threshold(v, {}) == std::vector<int>{39};
    }
    out.check(planted_ok == 10, std::to_string(planted_ok) + "/10 planted-outlier series flag exactly the outlier");

    detect::HistogramThresholdConfig both;
    both.tails = detect::Tails::Both;
    out.check(detect::histogram_threshold(Eigen::VectorXd::Constant(40, 1.5), both).empty(), "constant series");
    Eigen::VectorXd uniform(49);
    for (int i = 0; i < 49; ++i) uniform(i) = i % 7;
    both.bin_count = 7;
    out.check(detect::histogram_threshold(uniform, both).empty(), "uniform histogram");
    both.bin_count = 0;

    Eigen::MatrixXd cols = Eigen::MatrixXd::Constant(20, 7, 1.0);
    for (int t = 0; t < 20; ++t) {
        cols(t, 0) = 1.0 + 0.01 * (t % 3);
        cols(t, 2) = 2.0 + 0.01 * (t % 2);
    }
    cols(2, 0) = cols(4, 0) = -30.0;
    cols(4, 2) = cols(15, 2) = 30.0;
    std::vector<std::string> names(features::kFeatureNames.begin(), features::kFeatureNames.end());
    auto r = detect::detect_columns(cols, names, detect::Method::Raw, both);
    out.check(r.per_series.at(names[0]) == std::vector<int>{2, 4}, "feature 1 detections");
    out.check(r.per_series.at(names[2]) == std::vector<int>{4, 15}, "feature 3 detections");
    out.check(r.anomalous_slots == std::vector<int>{2, 4, 15}, "aggregated set");
    out.note("planted outlier 10/10, constant and uniform empty, union {2, 4, 15}");
    return out;
}

// ---------------------------------------------------------------------------

struct FamilyRun {
    eval::FamilySummary summary;
    double seconds = 0;
};

double median(const eval::FamilySummary& s, detect::Method m, bool recall) {
    const auto& q = recall ? s.method(m).recall_q : s.method(m).precision_q;
    return q ? q->median : std::nan("");
}

std::string medians_text(const eval::FamilySummary& s) {
    std::string t = s.family + ":";
    for (auto m : eval::kMethods) {
        t += " " + detect::to_string(m) + " P=" + fmt(median(s, m, false), 3) + " R=" + fmt(median(s, m, true), 3);
    }
    return t;
}

Outcome halt_family(const std::map<std::string, FamilyRun>& runs, double train_seconds) {
    Outcome out;
    using detect::Method;
    for (const std::string f : {"halt_gt", "halt_eq", "halt_lt"}) {
        const auto& r = runs.at(f);
        if (f != "halt_lt") {
            out.check(median(r.summary, Method::Raw, true) == 1.0, f + ": raw median recall " +
                                                                       fmt(median(r.summary, Method::Raw, true)));
        }
        out.check(median(r.summary, Method::Hmm, false) >= median(r.summary, Method::Raw, false),
                  f + ": hmm median precision below raw");
        out.check(r.seconds + train_seconds < 60.0, f + ": runtime " + fmt(r.seconds + train_seconds, 2) + " s");
        out.note(medians_text(r.summary) + " (" + fmt(r.seconds + train_seconds, 2) + " s incl. training)");
    }
    return out;
}

Outcome overload_flash(const std::map<std::string, FamilyRun>& runs) {
    Outcome out;
    using detect::Method;
    for (const std::string f : {"overload_lt", "overload_eq", "overload_gt", "flash_arrival", "flash_departure"}) {
        const auto& s = runs.at(f).summary;
        for (bool recall : {false, true}) {
            const double h = median(s, Method::Hmm, recall);
            for (auto base : {Method::Raw, Method::Pca}) {
                const double b = median(s, base, recall);
                out.check(h > b, f + ": hmm median " + (recall ? "recall " : "precision ") + fmt(h, 3) +
                                     " not above " + detect::to_string(base) + " " + fmt(b, 3));
            }
        }
        out.note(medians_text(s));
    }
    return out;
}

Outcome noise_family(const std::map<std::string, FamilyRun>& runs) {
    Outcome out;
    using detect::Method;
    double prev = 2.0;
    std::string levels;
    for (const std::string f : {"noise_90", "noise_95", "noise_100", "noise_105"}) {
        const double r = median(runs.at(f).summary, Method::Hmm, true);
        out.check(r <= prev, f + ": hmm median recall rises to " + fmt(r, 3));
        prev = r;
        levels += " " + f + "=" + fmt(r, 3);
    }
    const auto& normal = runs.at("normal");
    const int budget = static_cast<int>(std::ceil(0.1 * static_cast<double>(normal.summary.slot_count)));
    int within = 0;
    std::string fps;
    for (int fp : normal.summary.method(Method::Hmm).false_positives) {
        within += fp <= budget;
        fps += (fps.empty() ? "" : ",") + std::to_string(fp);
    }
    const auto seeds = normal.summary.seeds.size();
    out.check(within >= 8, "normal runs within the false-positive budget of " + std::to_string(budget) + ": " +
                               std::to_string(within) + "/" + std::to_string(seeds));
    out.note("hmm median recall" + levels);
    out.note("normal hmm false positives per seed [" + fps + "], budget " + std::to_string(budget) + ", " +
             std::to_string(within) + "/" + std::to_string(seeds) + " within");
    return out;
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(APWATCH_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_text(e.path());
    }
    return files;
}

std::string strip_comment_line(const std::string& text) {
    if (!text.empty() && text[0] == '#') return text.substr(text.find('\n') + 1);
    return text;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

/// Parses one emitted file according to its documented layout.
void check_schema(const std::string& rel, const std::string& content, const nlohmann::json& manifest) {
    const fs::path p(rel);
    const std::string name = p.filename().string();
    std::istringstream in(content);
    if (name == "sessions.csv") {
        auto events = sim::read_sessions(in);
        for (const auto& e : events) require(e.start_s < e.end_s && e.end_s <= 600.0, "session interval");
    } else if (name == "features.csv") {
        require(features::read_features(in, 1, 15).size() == 40, "feature rows");
    } else if (name == "likelihood.csv") {
        auto v = hmm::read_series(in);
        require(v.size() == 40 && v.allFinite(), "likelihood rows");
    } else if (name == "series_plot.csv") {
        for (const auto& row : read_csv(in, eval::kSeriesPlotHeader, rel)) {
            require(row[0] == "series" || row[0] == "marker" || row[0] == "truth", "series_plot kind");
            parse_int(row[1], "slot_index");
            parse_double(row[2], "value");
        }
    } else if (name == "detections.json") {
        auto j = nlohmann::json::parse(content);
        require(j.at("format") == "apwatch-cell-detections-v1", "cell detections format");
        require(j.at("slot_count") == 40, "slot_count");
        require(j.at("results").size() == 3, "three methods");
        for (const auto& r : j.at("results")) {
            auto d = detect::detection_from_json(r.dump());
            require(d.slot_count == 40, "detection slot count");
            const double prec = r.at("precision");
            require(prec >= 0 && prec <= 1, "precision range");
            const auto& rec = r.at("recall");
            require(rec == "NA" || (rec.is_number() && rec >= 0 && rec <= 1), "recall range");
        }
    } else if (name == "summary.csv") {
        std::istringstream body(strip_comment_line(content));
        auto rows = read_csv(body, eval::kSummaryHeader, rel);
        require(rows.size() == 30, "summary rows");
        for (const auto& row : rows) {
            parse_double(row[2], "precision");
            if (row[3] != "NA") parse_double(row[3], "recall");
        }
    } else if (name == "boxplot.csv") {
        std::istringstream body(strip_comment_line(content));
        auto rows = read_csv(body, eval::kBoxplotHeader, rel);
        require(rows.size() == 30, "boxplot rows");
    } else if (name == "comparison.csv") {
        require(read_csv(in, eval::kComparisonHeader, rel).size() == 26, "comparison rows");
    } else if (p.extension() == ".svg") {
        require(content.find("<svg") != std::string::npos && content.rfind("</svg>") != std::string::npos, "svg");
    } else if (name.ends_with("_pca.json")) {
        auto pca = features::pca_from_json(content);
        require(pca.dimension() == 7, "pca dimension");
    } else if (name.ends_with("_hmm.json")) {
        hmm::model_from_json(content).validate();
    } else if (name.ends_with("_trace.csv")) {
        auto rows = read_csv(in, "iteration,loglik", rel);
        require(!rows.empty() && rows.size() <= 21, "trace length");
    } else if (name == "manifest.json") {
        require(manifest.at("format") == "apwatch-manifest-v1", "manifest format");
    } else {
        throw ValidationError("undocumented file");
    }
}

Outcome determinism_and_formats() {
    Outcome out;
    char tmpl[] = "/tmp/apwatch-acceptance-XXXXXX";
    const char* made = mkdtemp(tmpl);
    if (made == nullptr) {
        out.check(false, "cannot create a temporary directory");
        return out;
    }
    const fs::path root(made);
    const auto start = Clock::now();
    const int first = run_cli("repro --jobs 4 --out " + (root / "a").string(), root / "a.log");
    const double elapsed = seconds_since(start);
    const int second = run_cli("repro --jobs 4 --out " + (root / "b").string(), root / "b.log");
    out.check(first == 0 && second == 0, "repro exit codes " + std::to_string(first) + ", " + std::to_string(second));
    if (first != 0 || second != 0) {
        fs::remove_all(root);
        return out;
    }
    const auto a = read_tree(root / "a");
    const auto b = read_tree(root / "b");
    int differing = 0;
    for (const auto& [rel, content] : a) {
        auto it = b.find(rel);
        differing += it == b.end() || it->second != content;
    }
    differing += static_cast<int>(b.size() > a.size() ? b.size() - a.size() : 0);
    out.check(differing == 0, std::to_string(differing) + " files differ between the two trees");

    const auto manifest = nlohmann::json::parse(a.at("manifest.json"));
    std::set<std::string> listed;
    int bad_hash = 0;
    for (const auto& f : manifest.at("files")) {
        const std::string rel = f.at("path");
        listed.insert(rel);
        auto it = a.find(rel);
        bad_hash += it == a.end() || fingerprint_hex(it->second) != f.at("content_fnv1a");
    }
    out.check(bad_hash == 0, std::to_string(bad_hash) + " manifest entries missing or with a wrong hash");
    out.check(listed.size() + 1 == a.size(), "manifest lists " + std::to_string(listed.size()) + " of " +
                                                 std::to_string(a.size() - 1) + " files");

    int schema_errors = 0;
    for (const auto& [rel, content] : a) {
        try {
            check_schema(rel, content, manifest);
        } catch (const std::exception& e) {
            if (++schema_errors <= 5) out.note("schema: " + rel + ": " + e.what());
        }
    }
    out.check(schema_errors == 0, std::to_string(schema_errors) + " files fail their schema");
    out.check(elapsed < 600.0, "repro took " + fmt(elapsed, 1) + " s");
    out.note(std::to_string(a.size()) + " files, identical across runs; repro " + fmt(elapsed, 2) + " s on " +
             std::to_string(std::max(1L, sysconf(_SC_NPROCESSORS_ONLN))) + " cores");
    fs::remove_all(root);
    return out;
}

}  // namespace

int main() {
    const char* titles[] = {"",
                            "forward/Viterbi path-enumeration oracle",
                            "Baum-Welch contract",
                            "planted-model recovery",
                            "initialization ranges",
                            "PCA properties",
                            "histogram detector suite",
                            "halt family end to end",
                            "overload and flash crowd directional claims",
                            "noise monotonicity and normal false-positive budget",
                            "determinism and output formats"};
    std::vector<Outcome> results(11);
    auto report = [&](int c) {
        const auto& r = results[static_cast<std::size_t>(c)];
        std::cout << "criterion " << c << " (" << titles[c] << "): " << (r.pass ? "PASS" : "FAIL") << '\n';
        for (const auto& d : r.details) std::cout << "    " << d << '\n';
        std::cout.flush();
    };
    auto guarded = [&](int c, const std::function<Outcome()>& fn) {
        try {
            results[static_cast<std::size_t>(c)] = fn();
        } catch (const std::exception& e) {
            results[static_cast<std::size_t>(c)].check(false, std::string("exception: ") + e.what());
        }
        report(c);
    };

    guarded(1, forward_oracle);
    guarded(2, em_contract);
    guarded(3, planted_recovery);
    guarded(4, init_ranges);

    const FlatConfig base = FlatConfig::defaults();
    const auto train_start = Clock::now();
    eval::TrainedModels models;
    std::map<std::string, FamilyRun> runs;
    double train_seconds = 0;
    std::string setup_error;
    try {
        models = eval::train_models(base);
        train_seconds = seconds_since(train_start);
        for (const auto& family : eval::families()) {
            eval::ExperimentSpec spec;
            spec.family = family.name;
            const auto start = Clock::now();
            auto r = eval::run_experiment(spec, models, 4);
            runs[family.name] = {std::move(r.summary), seconds_since(start)};
        }
    } catch (const std::exception& e) {
        setup_error = e.what();
    }
    auto needs_runs = [&](std::function<Outcome()> fn) {
        return [fn, &setup_error]() {
            if (!setup_error.empty()) throw std::runtime_error("experiment setup failed: " + setup_error);
            return fn();
        };
    };

    guarded(5, needs_runs([&] { return pca_properties(models, base); }));
    guarded(6, histogram_suite);
    guarded(7, needs_runs([&] { return halt_family(runs, train_seconds); }));
    guarded(8, needs_runs([&] { return overload_flash(runs); }));
    guarded(9, needs_runs([&] { return noise_family(runs); }));
    guarded(10, determinism_and_formats);

    int failed = 0;
    for (int c = 1; c <= 10; ++c) failed += !results[static_cast<std::size_t>(c)].pass;
    std::cout << "summary: " << 10 - failed << "/10 criteria pass\n";
    return failed == 0 ? 0 : 1;
}
