#include "apwatch/detect/detector.hpp"
#include "apwatch/detect/histogram.hpp"
#include "apwatch/error.hpp"
#include "apwatch/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace apwatch;
using namespace apwatch::detect;

namespace {

Eigen::VectorXd normals(int n, std::uint64_t seed) {
    Rng rng = make_stream(seed, StreamKind::Synthetic);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = z(rng);
    return v;
}

HistogramThresholdConfig both_tails() {
    HistogramThresholdConfig c;
    c.tails = Tails::Both;
    return c;
}

}  // namespace

TEST(Histogram, PlantedLowOutlierIsTheOnlyDetection) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Eigen::VectorXd v(40);
        v.head(39) = normals(39, seed);
        v(39) = -50.0;
        EXPECT_EQ(histogram_threshold(v, {}), std::vector<int>{39}) << "seed " << seed;
    }
}

TEST(Histogram, ConstantSeriesIsClean) {
    EXPECT_TRUE(histogram_threshold(Eigen::VectorXd::Constant(40, -3.0), {}).empty());
    EXPECT_TRUE(histogram_threshold(Eigen::VectorXd::Constant(40, 2.0), both_tails()).empty());
}

TEST(Histogram, FlatHistogramIsClean) {
    Eigen::VectorXd v(42);
    for (int i = 0; i < 42; ++i) v(i) = i % 7;
    HistogramThresholdConfig c = both_tails();
    c.bin_count = 7;
    EXPECT_TRUE(histogram_threshold(v, c).empty());
}

TEST(Histogram, HandWorkedExample) {
    // 8 values, auto bins = ceil(sqrt(8)) = 3 over [0, 9]: counts {1, 1, 6}.
    // Mode is bin 2; walking down, bin 1 has 1 < 1.5, so bins 1 and 0 are cut.
    Eigen::VectorXd v(8);
    v << 0, 4, 7, 8, 8, 8, 9, 9;
    EXPECT_EQ(resolve_bin_count({}, 8), 3);
    auto h = build_histogram(v, 3);
    EXPECT_EQ(h.counts, (std::vector<int>{1, 1, 6}));
    EXPECT_EQ(histogram_threshold(v, {}), (std::vector<int>{0, 1}));
}

TEST(Histogram, StopBinIsItselfAnomalous) {
    // counts {2, 1, 9, 2}: the walk down stops at bin 1 and bin 0 follows it;
    // upwards bin 3 holds 2 < 9 / 4.
    Eigen::VectorXd v(14);
    v << 0, 0.5, 1.5, 2.1, 2.2, 2.3, 2.4, 2.5, 2.6, 2.7, 2.8, 2.9, 3.5, 4.0;
    HistogramThresholdConfig c;
    c.bin_count = 4;
    EXPECT_EQ(build_histogram(v, 4).counts, (std::vector<int>{2, 1, 9, 2}));
    EXPECT_EQ(histogram_threshold(v, c), (std::vector<int>{0, 1, 2}));
    c.tails = Tails::Both;
    EXPECT_EQ(histogram_threshold(v, c), (std::vector<int>{0, 1, 2, 12, 13}));
}

TEST(Histogram, ModeTieGoesToMedianSide) {
    // Bins 0 and 3 both hold 3; the median (2.55) is nearer bin 3.
    Eigen::VectorXd v(8);
    v << 0, 0, 0, 2.5, 2.6, 3.5, 3.6, 4.0;
    auto h = build_histogram(v, 4);
    ASSERT_EQ(h.counts, (std::vector<int>{3, 0, 2, 3}));
    EXPECT_EQ(mode_bin(h, v), 3);

    // Median exactly between the tied bins: lower index wins.
    Eigen::VectorXd w(6);
    w << 0, 0, 4, 4, 1.5, 2.5;
    auto hw = build_histogram(w, 4);
    ASSERT_EQ(hw.counts, (std::vector<int>{2, 1, 1, 2}));
    EXPECT_EQ(mode_bin(hw, w), 0);
}

TEST(Histogram, MaximumLandsInLastBin) {
    Eigen::VectorXd v(5);
    v << 0, 1, 2, 3, 4;
    auto h = build_histogram(v, 4);
    EXPECT_EQ(h.bin_of.back(), 3);
    EXPECT_EQ(h.counts, (std::vector<int>{1, 1, 1, 2}));
}

TEST(Histogram, RejectsShortOrNonFiniteInput) {
    EXPECT_THROW(histogram_threshold(Eigen::Vector3d(1, 2, 3), {}), ValidationError);
    Eigen::VectorXd v = normals(10, 1);
    v(3) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(histogram_threshold(v, {}), ValidationError);
    HistogramThresholdConfig c;
    c.mode_fraction = 1.0;
    EXPECT_THROW(c.validate(), ValidationError);
    c.mode_fraction = 0.25;
    c.bin_count = 1;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Histogram, PermutingInputPermutesDetections) {
    Rng rng = make_stream(3, StreamKind::Synthetic);
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        Eigen::VectorXd v = normals(40, seed);
        v(static_cast<int>(seed % 40)) -= 6.0;
        std::vector<int> perm(40);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Eigen::VectorXd p(40);
        for (int i = 0; i < 40; ++i) p(i) = v(perm[static_cast<std::size_t>(i)]);
        auto base = histogram_threshold(v, both_tails());
        std::vector<int> mapped;
        for (int i : histogram_threshold(p, both_tails())) mapped.push_back(perm[static_cast<std::size_t>(i)]);
        std::sort(mapped.begin(), mapped.end());
        EXPECT_EQ(mapped, base) << "seed " << seed;
    }
}

TEST(Histogram, LowTailIsALowerSet) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        Eigen::VectorXd v = normals(40, seed + 100);
        auto hits = histogram_threshold(v, {});
        if (hits.empty()) continue;
        double cut = -std::numeric_limits<double>::infinity();
        for (int i : hits) cut = std::max(cut, v(i));
        for (int i = 0; i < 40; ++i) {
            if (v(i) < cut) EXPECT_TRUE(std::binary_search(hits.begin(), hits.end(), i)) << seed << " " << i;
        }
    }
}

TEST(Histogram, PositiveAffineMapsKeepDetections) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        Eigen::VectorXd v = normals(40, seed + 200);
        v(0) = -5.0;
        for (auto [a, b] : {std::pair{3.0, -7.0}, std::pair{0.01, 100.0}, std::pair{250.0, 0.5}}) {
            Eigen::VectorXd w = (a * v).array() + b;
            EXPECT_EQ(histogram_threshold(w, both_tails()), histogram_threshold(v, both_tails()))
                << seed << " a=" << a;
        }
    }
}

TEST(Detector, UnionOfPerFeatureDetections) {
    // Feature 1 flags slots {2, 4}, feature 3 flags {4, 15}, the rest are flat.
    Eigen::MatrixXd cols = Eigen::MatrixXd::Constant(20, 7, 10.0);
    for (int t = 0; t < 20; ++t) {
        cols(t, 0) = 10.0 + 0.01 * (t % 3);
        cols(t, 2) = 5.0 + 0.01 * (t % 2);
    }
    cols(2, 0) = -40.0;
    cols(4, 0) = -40.0;
    cols(4, 2) = 60.0;
    cols(15, 2) = 60.0;
    std::vector<std::string> names(features::kFeatureNames.begin(), features::kFeatureNames.end());
    auto r = detect_columns(cols, names, Method::Raw, both_tails());
    EXPECT_EQ(r.per_series.at(names[0]), (std::vector<int>{2, 4}));
    EXPECT_EQ(r.per_series.at(names[2]), (std::vector<int>{4, 15}));
    EXPECT_EQ(r.anomalous_slots, (std::vector<int>{2, 4, 15}));

    std::vector<int> merged;
    for (const auto& [name, slots] : r.per_series) merged.insert(merged.end(), slots.begin(), slots.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    EXPECT_EQ(merged, r.anomalous_slots);
}

TEST(Detector, ConstantFeaturesAreClean) {
    features::FeatureSeries s;
    s.vectors.assign(40, features::FeatureVector{3, 4, 40, 100, 2000, 10, 20});
    EXPECT_TRUE(detect_raw(s, both_tails()).anomalous_slots.empty());
}

TEST(Detector, PcaFlagsOutlierAlongTheComponent) {
    features::FeatureSeries s;
    Eigen::VectorXd dir(7);
    dir << 1, 2, 3, 4, 5, 6, 7;
    Rng rng = make_stream(4, StreamKind::Synthetic);
    for (int t = 0; t < 40; ++t) {
        double c = t == 17 ? 60.0 : uniform01(rng);
        s.vectors.push_back(features::FeatureVector::from_vector(100.0 + c * dir.array()));
    }
    auto pca = features::fit_pca(s.matrix(), 1);
    auto r = detect_pca(s, pca, both_tails());
    EXPECT_EQ(r.per_series.at("pc1"), std::vector<int>{17});
}

TEST(Detector, ValleyInFlatLikelihoodIsFound) {
    Eigen::VectorXd ll = Eigen::VectorXd::Constant(40, -3.0) + 0.05 * normals(40, 9);
    ll.segment(20, 3) << -25.0, -30.0, -22.0;
    auto r = detect_hmm(ll, {});
    EXPECT_EQ(r.anomalous_slots, (std::vector<int>{20, 21, 22}));
}

TEST(Detector, JsonRoundTrip) {
    Eigen::MatrixXd cols = Eigen::MatrixXd::Random(30, 3);
    cols(3, 1) = 40;
    auto r = detect_columns(cols, {"pc1", "pc2", "pc3"}, Method::Pca, both_tails());
    auto back = detection_from_json(detection_to_json(r));
    EXPECT_EQ(back.method, Method::Pca);
    EXPECT_EQ(back.slot_count, 30u);
    EXPECT_EQ(back.anomalous_slots, r.anomalous_slots);
    EXPECT_EQ(back.per_series, r.per_series);
    EXPECT_EQ(back.config.tails, Tails::Both);
    EXPECT_EQ(back.config.bin_count, 0);
    EXPECT_THROW(detection_from_json("{\"format\":\"apwatch-detections-v1\",\"method\":\"hmm\"}"), ValidationError);
}
