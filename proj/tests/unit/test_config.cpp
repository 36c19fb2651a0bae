#include "apwatch/config.hpp"
#include "apwatch/error.hpp"
#include "apwatch/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace apwatch;

TEST(FlatConfig, OverrideBeatsFileBeatsDefault) {
    FlatConfig cfg = FlatConfig::defaults();
    EXPECT_EQ(cfg.get("hmm.states"), "3");
    cfg.merge_text("hmm.states = 4\nhmm.restarts = 2  # trailing comment\n", "file");
    EXPECT_EQ(cfg.get_int("hmm.states"), 4);
    cfg.apply_override("hmm.states=5");
    EXPECT_EQ(cfg.get_int("hmm.states"), 5);
    EXPECT_EQ(cfg.get_int("hmm.restarts"), 2);
}

TEST(FlatConfig, UnknownKeysAreRejected) {
    FlatConfig cfg = FlatConfig::defaults();
    EXPECT_THROW(cfg.apply_override("hmm.stats=3"), ValidationError);
    EXPECT_THROW(cfg.merge_text("detector.bin = 7\n", "x"), ValidationError);
    EXPECT_THROW(cfg.apply_override("no-equals-sign"), ValidationError);
    EXPECT_NO_THROW(cfg.apply_override("traffic.flow.2.rate=7"));
}

TEST(FlatConfig, TypedAccessorsRejectGarbage) {
    FlatConfig cfg = FlatConfig::defaults();
    cfg.set("hmm.states", "three");
    EXPECT_THROW(cfg.get_int("hmm.states"), ValidationError);
    cfg.set("hmm.tolerance", "1e-6x");
    EXPECT_THROW(cfg.get_double("hmm.tolerance"), ValidationError);
    cfg.set("pca.standardize", "maybe");
    EXPECT_THROW(cfg.get_bool("pca.standardize"), ValidationError);
}

TEST(FlatConfig, CanonicalTextIsSortedAndStable) {
    FlatConfig a = FlatConfig::defaults();
    FlatConfig b = FlatConfig::defaults();
    b.apply_override("hmm.seed=7");
    EXPECT_EQ(a.to_text(), b.to_text());
    auto text = a.to_text();
    EXPECT_LT(text.find("anomaly.kind"), text.find("run.seed"));
}

TEST(SeedList, RangesAndLists) {
    EXPECT_EQ(parse_seed_list("1..4"), (std::vector<std::uint64_t>{1, 2, 3, 4}));
    EXPECT_EQ(parse_seed_list("5, 3,9"), (std::vector<std::uint64_t>{5, 3, 9}));
    EXPECT_EQ(parse_seed_list("1..2,7"), (std::vector<std::uint64_t>{1, 2, 7}));
    EXPECT_THROW(parse_seed_list("3..1"), ValidationError);
    EXPECT_THROW(parse_seed_list("1,1"), ValidationError);
    EXPECT_THROW(parse_seed_list(""), ValidationError);
    EXPECT_THROW(parse_seed_list("a"), ValidationError);
}

TEST(Fingerprint, KnownFnvVectors) {
    EXPECT_EQ(fingerprint_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fingerprint_hex("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(fingerprint_hex("foobar"), "85944171f73967e8");
}

TEST(Io, ExactFormatRoundTrips) {
    for (double v : {0.1, -2.718281828459045, 1e-300, 12345.678901234567}) {
        EXPECT_EQ(parse_double(format_exact(v), "v"), v);
    }
    EXPECT_EQ(format_fixed(1.23456, 3), "1.235");
    EXPECT_THROW(parse_double("1.5abc", "v"), ValidationError);
}

TEST(Io, CsvHeaderMismatchIsRejected) {
    std::istringstream in("a,b\n1,2\n");
    EXPECT_THROW(read_csv(in, "a,c", "test"), ValidationError);
    std::istringstream ok("a,b\n1,2\n");
    auto rows = read_csv(ok, "a,b", "test");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0][1], "2");
}
