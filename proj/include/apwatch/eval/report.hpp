#pragma once

#include "apwatch/eval/experiment.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace apwatch::eval {

inline constexpr const char* kSummaryHeader =
    "seed,method,precision,recall,true_positive,false_positive,false_negative,flagged";
inline constexpr const char* kBoxplotHeader = "method,metric,stat,value";
inline constexpr const char* kSeriesPlotHeader = "kind,slot_index,value";
inline constexpr const char* kComparisonHeader = "family,metric,ordering,raw,pca,hmm";

/// Collects every written file so the manifest can list it.
class OutputSink {
public:
    explicit OutputSink(std::filesystem::path root) : root_(std::move(root)) {}

    void write(const std::filesystem::path& relative, const std::string& content, const std::string& fingerprint);
    const std::filesystem::path& root() const { return root_; }
    /// relative path -> (content hash, spec fingerprint)
    const std::map<std::string, std::pair<std::string, std::string>>& files() const { return files_; }

private:
    std::filesystem::path root_;
    std::map<std::string, std::pair<std::string, std::string>> files_;
};

std::string detections_json(const CellResult& cell);
std::string summary_csv(const FamilySummary& summary);
std::string boxplot_csv(const FamilySummary& summary);
std::string series_plot_csv(const CellResult& cell);
std::string comparison_csv(const ComparisonReport& report);

std::string series_svg(const CellResult& cell);
std::string boxplot_svg(const FamilySummary& summary);

/// Writes <family>/<seed>/{sessions,features,likelihood,series_plot}.csv,
/// detections.json, likelihood.svg.
void write_cell(OutputSink& sink, const CellResult& cell, const std::string& fingerprint);

/// Writes <family>/{summary,boxplot}.csv and boxplot.svg.
void write_family(OutputSink& sink, const FamilySummary& summary, const std::string& fingerprint);

void write_models(OutputSink& sink, const TrainedModels& models, const std::string& fingerprint);

/// manifest.json: effective config, fingerprints and every file listed in the sink.
void write_manifest(OutputSink& sink, const FlatConfig& cfg, const std::vector<std::string>& notes);

struct ReproOptions {
    std::filesystem::path out_dir;
    int jobs = 1;
    bool force = false;
    std::vector<std::string> families;  // empty: all
};

struct ReproResult {
    std::vector<FamilySummary> summaries;
    ComparisonReport comparison;
};

/// Runs every family end to end into a temporary directory and renames it to
/// `out_dir` once everything is written.
ReproResult repro(const FlatConfig& base, const std::vector<std::string>& overrides, const ReproOptions& options);

/// Runs one family into `out_dir` with the same layout, atomically promoted.
ReproResult eval_family(const FlatConfig& base, const std::vector<std::string>& overrides, const std::string& family,
                        const std::vector<std::uint64_t>& seeds, const ReproOptions& options);

}  // namespace apwatch::eval
