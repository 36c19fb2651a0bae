#include "apwatch/eval/experiment.hpp"

#include "apwatch/error.hpp"
#include "apwatch/sim/anomaly.hpp"
#include "apwatch/sim/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

namespace apwatch::eval {

namespace {

using Settings = std::vector<std::pair<std::string, std::string>>;

Settings halt(const std::string& start, const std::string& end, const std::string& period) {
    return {{"anomaly.kind", "ap_halt"},
            {"anomaly.target_ap", "1"},
            {"anomaly.window_start_s", start},
            {"anomaly.window_end_s", end},
            {"anomaly.halt_period_s", period},
            {"anomaly.halt_gap_s", "0"}};
}

Settings noise(const std::string& dbm) {
    return {{"anomaly.kind", "noise"},        {"anomaly.target_ap", "1"},     {"anomaly.window_start_s", "0"},
            {"anomaly.window_end_s", "150"}, {"anomaly.noise_dbm", dbm},     {"anomaly.noise_scope", "field"}};
}

Settings overload(const std::string& burst, const std::string& sleep) {
    return {{"anomaly.kind", "overload"},         {"anomaly.target_ap", "1"},
            {"anomaly.window_start_s", "150"},   {"anomaly.window_end_s", "390"},
            {"anomaly.burst_duration_s", burst}, {"anomaly.sleep_duration_s", sleep}};
}

Settings crowd(const std::string& direction) {
    return {{"anomaly.kind", "flash_crowd"},     {"anomaly.target_ap", "1"},  {"anomaly.window_start_s", "150"},
            {"anomaly.window_end_s", "165"},    {"anomaly.direction", direction}, {"anomaly.node_count", "7"}};
}

std::vector<std::string> method_names() {
    std::vector<std::string> out;
    for (auto m : kMethods) {
        out.push_back(detect::to_string(m));
    }
    return out;
}

std::size_t method_index(detect::Method m) {
    for (std::size_t i = 0; i < kMethods.size(); ++i) {
        if (kMethods[i] == m) {
            return i;
        }
    }
    return 0;
}

hmm::TrainConfig train_config(const FlatConfig& cfg) {
    hmm::TrainConfig tc;
    tc.max_iterations = static_cast<int>(cfg.get_int("hmm.max_iterations"));
    tc.tolerance = cfg.get_double("hmm.tolerance");
    tc.restarts = static_cast<int>(cfg.get_int("hmm.restarts"));
    tc.seed = cfg.get_uint("hmm.seed");
    const auto& cov = cfg.get("hmm.covariance");
    if (cov == "diagonal") {
        tc.covariance = hmm::CovarianceMode::Diagonal;
    } else if (cov == "full") {
        tc.covariance = hmm::CovarianceMode::Full;
    } else {
        throw ValidationError("hmm.covariance must be 'diagonal' or 'full', got '" + cov + "'");
    }
    tc.validate();
    return tc;
}

bool per_ap(const FlatConfig& cfg, const std::string& key) {
    const auto& v = cfg.get(key);
    if (v == "per_ap") {
        return true;
    }
    if (v == "global") {
        return false;
    }
    throw ValidationError(key + " must be 'per_ap' or 'global', got '" + v + "'");
}

detect::HistogramThresholdConfig detector_config(const FlatConfig& cfg, const std::string& tails_key) {
    detect::HistogramThresholdConfig d;
    const auto& bins = cfg.get("detector.bins");
    d.bin_count = bins == "auto" ? 0 : static_cast<int>(cfg.get_int("detector.bins"));
    d.mode_fraction = cfg.get_double("detector.mode_fraction");
    d.tails = detect::parse_tails(cfg.get(tails_key));
    d.validate();
    return d;
}

hmm::SeriesMode series_mode(const FlatConfig& cfg) {
    const auto& v = cfg.get("hmm.series");
    if (v == "incremental") {
        return hmm::SeriesMode::Incremental;
    }
    if (v == "window") {
        return hmm::SeriesMode::Window;
    }
    throw ValidationError("hmm.series must be 'incremental' or 'window', got '" + v + "'");
}

template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace

const std::vector<Family>& families() {
    static const std::vector<Family> table = {
        {"halt_gt", halt("150", "195", "45")},
        {"halt_eq", halt("150", "165", "15")},
        {"halt_lt", halt("157", "164", "7")},
        {"noise_90", noise("-90")},
        {"noise_95", noise("-95")},
        {"noise_100", noise("-100")},
        {"noise_105", noise("-105")},
        {"overload_lt", overload("15", "45")},
        {"overload_eq", overload("30", "30")},
        {"overload_gt", overload("45", "15")},
        {"flash_arrival", crowd("arrival")},
        {"flash_departure", crowd("departure")},
        {"normal", {{"anomaly.kind", "none"}, {"anomaly.target_ap", "1"}}},
    };
    return table;
}

const Family& find_family(const std::string& name) {
    for (const auto& f : families()) {
        if (f.name == name) {
            return f;
        }
    }
    throw ValidationError("unknown scenario family '" + name + "'");
}

FlatConfig family_config(const FlatConfig& base, const std::string& family, const std::vector<std::string>& overrides) {
    FlatConfig cfg = base;
    for (const auto& [k, v] : find_family(family).settings) {
        cfg.set(k, v);
    }
    for (const auto& o : overrides) {
        cfg.apply_override(o);
    }
    return cfg;
}

const ApModels& TrainedModels::for_ap(int ap) const {
    for (const auto& m : models) {
        if (m.ap == ap || m.ap == -1) {
            return m;
        }
    }
    throw ValidationError("no trained model for AP " + std::to_string(ap));
}

hmm::Observations hmm_observations(const FlatConfig& cfg, const ApModels& models,
                                   const features::FeatureSeries& series) {
    const auto& input = cfg.get("hmm.input");
    if (input == "pca") {
        return models.pca.project_rows(series.matrix());
    }
    if (input == "raw") {
        return series.matrix();
    }
    throw ValidationError("hmm.input must be 'pca' or 'raw', got '" + input + "'");
}

TrainedModels train_models(const FlatConfig& cfg) {
    FlatConfig normal = cfg;
    normal.set("anomaly.kind", "none");
    const auto seeds = parse_seed_list(cfg.get("eval.train_seeds"));
    const bool pca_per_ap = per_ap(cfg, "pca.scope");
    const bool hmm_per_ap = per_ap(cfg, "hmm.scope");
    const hmm::TrainConfig tc = train_config(cfg);
    const int states = static_cast<int>(cfg.get_int("hmm.states"));
    const int components = static_cast<int>(cfg.get_int("pca.components"));
    const bool standardize = cfg.get_bool("pca.standardize");

    sim::ScenarioSpec spec = sim::ScenarioSpec::from_config(normal);
    const int aps = spec.topology.ap_count;
    // corpus[ap][seed index]
    std::vector<std::vector<features::FeatureSeries>> corpus(static_cast<std::size_t>(aps));
    for (auto seed : seeds) {
        spec.seed = seed;
        const auto events = sim::simulate(spec);
        for (int ap = 0; ap < aps; ++ap) {
            corpus[static_cast<std::size_t>(ap)].push_back(
                features::featurize(events, ap, spec.slot_length_s, spec.run_duration_s));
        }
    }

    TrainedModels out;
    out.corpus_fingerprint = fingerprint_hex(normal.to_text());
    std::vector<features::FeatureSeries> pooled;
    for (const auto& per : corpus) {
        pooled.insert(pooled.end(), per.begin(), per.end());
    }
    const features::PcaModel global_pca =
        pca_per_ap ? features::PcaModel{} : features::fit_pca(features::stack(pooled), components, standardize);

    auto fit = [&](int ap, const std::vector<features::FeatureSeries>& pca_data,
                   const std::vector<features::FeatureSeries>& hmm_data) {
        ApModels m;
        m.ap = ap;
        m.pca = pca_per_ap ? features::fit_pca(features::stack(pca_data), components, standardize) : global_pca;
        std::vector<hmm::Observations> sequences;
        for (const auto& s : hmm_data) {
            sequences.push_back(hmm_observations(cfg, m, s));
        }
        const auto init = hmm::init_random(states, sequences, tc.seed, tc.variance_floor_fraction);
        for (const auto& w : init.warnings) {
            out.warnings.push_back("ap " + std::to_string(ap) + ": " + w);
        }
        m.training = hmm::train(states, sequences, tc);
        return m;
    };

    if (hmm_per_ap) {
        for (int ap = 0; ap < aps; ++ap) {
            out.models.push_back(fit(ap, corpus[static_cast<std::size_t>(ap)], corpus[static_cast<std::size_t>(ap)]));
        }
    } else if (pca_per_ap) {
        throw ValidationError("hmm.scope = global requires pca.scope = global");
    } else {
        out.models.push_back(fit(-1, pooled, pooled));
    }
    return out;
}

const MethodOutcome& CellResult::outcome(detect::Method m) const {
    return outcomes[method_index(m)];
}

CellResult run_cell(const FlatConfig& cfg, const std::string& family, const TrainedModels& models) {
    const sim::ScenarioSpec spec = sim::ScenarioSpec::from_config(cfg);
    CellResult cell;
    cell.family = family;
    cell.seed = spec.seed;
    cell.ap = spec.anomaly.target_ap;
    cell.sessions = sim::simulate(spec);
    cell.features = features::featurize(cell.sessions, cell.ap, spec.slot_length_s, spec.run_duration_s);
    cell.truth = sim::ground_truth(spec);

    const ApModels& m = models.for_ap(cell.ap);
    const auto obs = hmm_observations(cfg, m, cell.features);
    cell.likelihood =
        hmm::loglik_series(m.training.model, obs, series_mode(cfg), static_cast<int>(cfg.get_int("hmm.window")))
            .values;

    const auto hmm_cfg = detector_config(cfg, "detector.hmm_tails");
    const auto base_cfg = detector_config(cfg, "detector.baseline_tails");
    for (std::size_t i = 0; i < kMethods.size(); ++i) {
        MethodOutcome& o = cell.outcomes[i];
        switch (kMethods[i]) {
            case detect::Method::Raw:
                o.detection = detect::detect_raw(cell.features, base_cfg);
                break;
            case detect::Method::Pca:
                o.detection = detect::detect_pca(cell.features, m.pca, base_cfg);
                break;
            case detect::Method::Hmm:
                o.detection = detect::detect_hmm(cell.likelihood, hmm_cfg);
                break;
        }
        o.confusion = confusion(o.detection.anomalous_slots, cell.truth);
        o.precision = precision(o.confusion);
        o.recall = recall(o.confusion);
    }
    return cell;
}

const MethodSummary& FamilySummary::method(detect::Method m) const {
    return methods[method_index(m)];
}

FamilySummary summarize_cells(const std::string& family, const std::vector<CellResult>& cells) {
    FamilySummary s;
    s.family = family;
    for (std::size_t i = 0; i < kMethods.size(); ++i) {
        s.methods[i].method = kMethods[i];
    }
    for (const auto& c : cells) {
        s.seeds.push_back(c.seed);
        s.slot_count = c.truth.size();
        for (std::size_t i = 0; i < kMethods.size(); ++i) {
            const auto& o = c.outcomes[i];
            s.methods[i].precision.push_back(o.precision);
            s.methods[i].recall.push_back(o.recall);
            s.methods[i].true_positives.push_back(o.confusion.true_positive);
            s.methods[i].false_positives.push_back(o.confusion.false_positive);
            s.methods[i].false_negatives.push_back(o.confusion.false_negative);
        }
    }
    for (auto& m : s.methods) {
        m.precision_q = summarize(m.precision);
        std::vector<double> defined;
        for (const auto& r : m.recall) {
            if (r) {
                defined.push_back(*r);
            }
        }
        m.recall_q = summarize(defined);
    }
    return s;
}

void ExperimentSpec::validate() const {
    find_family(family);
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) {
        throw ValidationError("eval seeds must be distinct");
    }
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const TrainedModels& models, int jobs) {
    spec.validate();
    const FlatConfig cfg = family_config(spec.base, spec.family, spec.overrides);
    const auto seeds = spec.seeds.empty() ? parse_seed_list(cfg.get("eval.test_seeds")) : spec.seeds;
    if (spec.family != "normal") {
        const auto train = parse_seed_list(cfg.get("eval.train_seeds"));
        for (auto s : seeds) {
            if (std::find(train.begin(), train.end(), s) != train.end()) {
                throw ValidationError("test seed " + std::to_string(s) + " is also a training seed");
            }
        }
    }
    // Validate once up front so a bad key fails before any work is done.
    sim::ScenarioSpec::from_config(cfg).validate();

    ExperimentResult result;
    result.cells.resize(seeds.size());
    parallel_for(seeds.size(), jobs, [&](std::size_t i) {
        FlatConfig c = cfg;
        c.set("run.seed", std::to_string(seeds[i]));
        result.cells[i] = run_cell(c, spec.family, models);
    });
    result.summary = summarize_cells(spec.family, result.cells);
    return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs) {
    const FlatConfig cfg = family_config(spec.base, spec.family, spec.overrides);
    return run_experiment(spec, train_models(cfg), jobs);
}

namespace {

std::string ordering_text(const std::array<std::optional<double>, 3>& medians) {
    const auto names = method_names();
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < medians.size(); ++i) {
        if (medians[i]) {
            idx.push_back(i);
        }
    }
    if (idx.empty()) {
        return "NA";
    }
    // Descending by median, then by fixed method order hmm, raw, pca for stable text.
    auto rank = [](std::size_t i) { return kMethods[i] == detect::Method::Hmm ? 0 : static_cast<int>(i) + 1; };
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (*medians[a] != *medians[b]) {
            return *medians[a] > *medians[b];
        }
        return rank(a) < rank(b);
    });
    std::string text = names[idx[0]];
    for (std::size_t k = 1; k < idx.size(); ++k) {
        text += *medians[idx[k]] == *medians[idx[k - 1]] ? " = " : " > ";
        text += names[idx[k]];
    }
    return text;
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.rfind(prefix, 0) == 0;
}

}  // namespace

ComparisonReport compare_methods(const std::vector<FamilySummary>& summaries) {
    ComparisonReport report;
    const std::size_t h = method_index(detect::Method::Hmm);
    std::vector<std::pair<double, std::optional<double>>> noise_recall;  // (dbm, median)
    for (const auto& s : summaries) {
        std::array<std::optional<double>, 3> prec;
        std::array<std::optional<double>, 3> rec;
        for (std::size_t i = 0; i < 3; ++i) {
            if (s.methods[i].precision_q) {
                prec[i] = s.methods[i].precision_q->median;
            }
            if (s.methods[i].recall_q) {
                rec[i] = s.methods[i].recall_q->median;
            }
        }
        report.orderings.push_back({s.family, "precision", ordering_text(prec), prec});
        report.orderings.push_back({s.family, "recall", ordering_text(rec), rec});

        for (std::size_t i = 0; i < 3; ++i) {
            if (i != h && prec[h] && prec[i] && *prec[h] < *prec[i]) {
                report.hmm_precision_not_below_baselines = false;
                report.notes.push_back(s.family + ": hmm median precision below " + method_names()[i]);
            }
        }
        if (starts_with(s.family, "overload") || starts_with(s.family, "flash")) {
            for (std::size_t i = 0; i < 3; ++i) {
                if (i == h) {
                    continue;
                }
                const bool p_ok = prec[h] && prec[i] && *prec[h] > *prec[i];
                const bool r_ok = rec[h] && rec[i] && *rec[h] > *rec[i];
                if (!p_ok || !r_ok) {
                    report.hmm_strictly_better_overload_flash = false;
                    report.notes.push_back(s.family + ": hmm not strictly above " + method_names()[i] + " on " +
                                           (!p_ok ? "precision" : "recall"));
                }
            }
        }
        if (starts_with(s.family, "noise_")) {
            noise_recall.emplace_back(-std::stod(s.family.substr(6)), rec[h]);
        }
    }
    // -90 first, then quieter levels.
    std::sort(noise_recall.begin(), noise_recall.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 1; k < noise_recall.size(); ++k) {
        const auto& prev = noise_recall[k - 1].second;
        const auto& cur = noise_recall[k].second;
        if (prev && cur && *cur > *prev) {
            report.noise_recall_non_increasing = false;
            report.notes.push_back("hmm recall rises from " + std::to_string(noise_recall[k - 1].first) + " to " +
                                   std::to_string(noise_recall[k].first) + " dBm");
        }
    }
    return report;
}

}  // namespace apwatch::eval
