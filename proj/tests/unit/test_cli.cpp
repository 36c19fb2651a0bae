#include "apwatch/detect/detector.hpp"
#include "apwatch/io.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("apwatch-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args) {
        std::string cmd = std::string(APWATCH_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                          " 2> " + (dir_ / "stderr.txt").string();
        int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    std::string err() const { return apwatch::read_text(dir_ / "stderr.txt"); }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateIsByteIdentical) {
    ASSERT_EQ(run("simulate --seed 1 --out " + path("a.csv")), 0) << err();
    ASSERT_EQ(run("simulate --seed 1 --out " + path("b.csv")), 0) << err();
    EXPECT_EQ(apwatch::read_text(path("a.csv")), apwatch::read_text(path("b.csv")));
    ASSERT_EQ(run("simulate --seed 2 --out " + path("c.csv")), 0) << err();
    EXPECT_NE(apwatch::read_text(path("a.csv")), apwatch::read_text(path("c.csv")));
}

TEST_F(Cli, UnknownKeyExitsTwoAndNamesIt) {
    EXPECT_EQ(run("simulate --set hmm.stats=3 --out " + path("a.csv")), 2);
    EXPECT_NE(err().find("hmm.stats"), std::string::npos) << err();
    EXPECT_FALSE(fs::exists(path("a.csv")));
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("simulate --set anomaly.noise_dbm=-20 --set anomaly.kind=noise --set anomaly.window_end_s=30 --out " +
                  path("a.csv")),
              2);
}

TEST_F(Cli, ConstantLikelihoodGivesEmptyDetections) {
    std::string csv = "slot_index,loglik\n";
    for (int t = 0; t < 40; ++t) csv += std::to_string(t) + ",-4.5\n";
    apwatch::write_text_atomic(path("ll.csv"), csv);
    ASSERT_EQ(run("detect --series " + path("ll.csv") + " --out " + path("d.json")), 0) << err();
    auto r = apwatch::detect::load_detection(path("d.json"));
    EXPECT_TRUE(r.anomalous_slots.empty());
    EXPECT_EQ(r.slot_count, 40u);
}

TEST_F(Cli, PipelineEndToEnd) {
    std::string train_files;
    for (int seed : {101, 102, 103}) {
        auto s = path("s" + std::to_string(seed) + ".csv");
        auto f = path("f" + std::to_string(seed) + ".csv");
        ASSERT_EQ(run("simulate --seed " + std::to_string(seed) + " --out " + s), 0) << err();
        ASSERT_EQ(run("featurize --sessions " + s + " --ap 1 --out " + f), 0) << err();
        train_files += " " + f;
    }
    ASSERT_EQ(run("train --features" + train_files + " --restarts 2 --out-model " + path("m.json") + " --out-pca " +
                  path("p.json")),
              0)
        << err();
    ASSERT_EQ(run("simulate --seed 1 --set anomaly.kind=ap_halt --set anomaly.window_start_s=150 "
                  "--set anomaly.window_end_s=195 --set anomaly.halt_period_s=45 --out " +
                  path("h.csv") + " --truth " + path("truth.csv")),
              0)
        << err();
    ASSERT_EQ(run("featurize --sessions " + path("h.csv") + " --ap 1 --out " + path("hf.csv")), 0) << err();
    ASSERT_EQ(run("score --model " + path("m.json") + " --pca " + path("p.json") + " --features " + path("hf.csv") +
                  " --out " + path("ll.csv")),
              0)
        << err();
    ASSERT_EQ(run("detect --series " + path("ll.csv") + " --out " + path("d.json")), 0) << err();
    auto hmm = apwatch::detect::load_detection(path("d.json"));
    for (int slot : {10, 11, 12}) {
        EXPECT_TRUE(std::binary_search(hmm.anomalous_slots.begin(), hmm.anomalous_slots.end(), slot)) << slot;
    }
    ASSERT_EQ(run("detect --features " + path("hf.csv") + " --method pca --pca " + path("p.json") + " --out " +
                  path("dp.json")),
              0)
        << err();
    EXPECT_EQ(apwatch::detect::load_detection(path("dp.json")).per_series.size(), 3u);

    // A model scored against features of the wrong width is a validation error.
    EXPECT_EQ(run("score --model " + path("m.json") + " --pca " + path("p.json") + " --features " + path("ll.csv") +
                  " --out " + path("x.csv")),
              2);
}

TEST_F(Cli, BadFilesMapToExitCodes) {
    EXPECT_EQ(run("featurize --sessions " + path("nope.csv") + " --ap 1 --out " + path("f.csv")), 2);
    apwatch::write_text_atomic(path("s.csv"), "ap_id,station_id\n");
    EXPECT_EQ(run("featurize --sessions " + path("s.csv") + " --ap 1 --out " + path("f.csv")), 2);
    // Output below a regular file cannot be created.
    EXPECT_EQ(run("simulate --out " + path("s.csv") + "/x.csv"), 4);
}

TEST_F(Cli, EvalManifestEchoesEffectiveConfig) {
    ASSERT_EQ(run("eval --family halt_eq --seeds 1,2 --set hmm.restarts=2 --set eval.train_seeds=101..103 --out " +
                  path("out")),
              0)
        << err();
    auto manifest = nlohmann::json::parse(apwatch::read_text(path("out/manifest.json")));
    EXPECT_EQ(manifest["effective_config"]["hmm.restarts"], "2");
    EXPECT_EQ(manifest["effective_config"]["hmm.states"], "3");
    EXPECT_TRUE(fs::exists(path("out/halt_eq/summary.csv")));
    EXPECT_TRUE(fs::exists(path("out/halt_eq/2/detections.json")));
    // Refuses to clobber without --force.
    EXPECT_EQ(run("eval --family halt_eq --seeds 1 --out " + path("out")), 4);
    EXPECT_EQ(run("eval --family halt_eq --seeds 1 --set eval.train_seeds=101..102 --force --out " + path("out")), 0)
        << err();
}
