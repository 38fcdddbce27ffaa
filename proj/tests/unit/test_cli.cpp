#include <gtest/gtest.h>

#include "cli.hpp"
#include "test_util.hpp"

using namespace tnfcm;
using tnfcm::cli::run_cli;
using testing_util::read_file;
using testing_util::TempDir;
using testing_util::write_file;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), {"tnfcm", "-q"});
    return run_cli(args);
}

std::string p(const TempDir& d, const std::string& name) { return (d / name).string(); }

/// Small corpus plus a short training run, shared by the eval tests.
class CliFixture : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new TempDir();
        ASSERT_EQ(run({"synth", "--items-per-cat", "40", "--pairs-per-relation", "60", "--feature-dim", "12",
                       "--seed", "3", "--out", p(*dir_, "data")}),
                  0);
        ASSERT_EQ(run({"train", "--corpus", p(*dir_, "data"), "--dim", "8", "--epochs", "2", "--seed", "4", "--out",
                       p(*dir_, "m.tnfm")}),
                  0);
    }
    static void TearDownTestSuite() {
        delete dir_;
        dir_ = nullptr;
    }
    static TempDir* dir_;
};

TempDir* CliFixture::dir_ = nullptr;

}  // namespace

TEST(Cli, SynthWritesLoadableCorpusAndManifest) {
    TempDir d;
    ASSERT_EQ(run({"synth", "--categories", "4", "--items-per-cat", "200", "--latent-dim", "8", "--feature-dim", "32",
                   "--noise", "0.05", "--seed", "1", "--out", p(d, "data")}),
              0);
    const Corpus c = load_corpus(d / "data");
    EXPECT_EQ(c.num_items(), 800u);
    const auto m = nlohmann::json::parse(read_file(d / "data" / "run_manifest.json"));
    EXPECT_EQ(m["command"], "synth");
    EXPECT_EQ(m["seeds"]["seed"], 1);
    EXPECT_EQ(m["flags"]["items-per-cat"], "200");
    EXPECT_EQ(m["digests"].size(), 5u);
    EXPECT_EQ(m["digests"][(d / "data" / "pairs.tsv").string()], cli::sha256_file(d / "data" / "pairs.tsv"));
    EXPECT_TRUE(m.contains("wall_seconds"));
}

TEST(Cli, UsageErrorsExitTwo) {
    TempDir d;
    EXPECT_EQ(run({"synth", "--seed", "1"}), 2);
    EXPECT_EQ(run({}), 2);
    EXPECT_EQ(run({"frobnicate"}), 2);
    EXPECT_EQ(run({"synth", "--out", p(d, "x"), "--bogus"}), 2);
    EXPECT_EQ(run({"synth", "--out", p(d, "x"), "--seed", "abc"}), 2);
    EXPECT_EQ(run({"synth", "--out", p(d, "x"), "--latent-dim", "64"}), 2);
}

TEST(Cli, Sha256KnownVector) {
    TempDir d;
    write_file(d / "abc", "abc");
    EXPECT_EQ(cli::sha256_file(d / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(CliFixture, TrainOutputs) {
    EXPECT_TRUE(fs::exists(dir_->path() / "m.tnfm"));
    EXPECT_TRUE(fs::exists(dir_->path() / "m.tnfm.best"));
    const std::string log = read_file(dir_->path() / "m.tnfm.log.jsonl");
    std::size_t lines = 0;
    std::stringstream ss(log);
    for (std::string line; std::getline(ss, line); ++lines) {
        const auto j = nlohmann::json::parse(line);
        for (const char* key : {"epoch", "loss", "lr", "active_hinge_fraction", "validation_auc"})
            EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(lines, 2u);
    const auto m = nlohmann::json::parse(read_file(dir_->path() / "m.tnfm.manifest.json"));
    EXPECT_EQ(m["command"], "train");
    EXPECT_EQ(m["flags"]["untied"], false);
    EXPECT_EQ(m["seeds"]["seed"], 4);
    EXPECT_EQ(m["digests"].size(), 3u);
}

TEST_F(CliFixture, TrainRerunIsBitIdentical) {
    TempDir d;
    for (const char* name : {"a.tnfm", "b.tnfm"})
        ASSERT_EQ(run({"train", "--corpus", p(*dir_, "data"), "--dim", "8", "--epochs", "2", "--seed", "4", "--out",
                       p(d, name)}),
                  0);
    EXPECT_EQ(read_file(d / "a.tnfm"), read_file(dir_->path() / "m.tnfm"));
    EXPECT_EQ(read_file(d / "a.tnfm"), read_file(d / "b.tnfm"));
    const auto ma = nlohmann::json::parse(read_file(d / "a.tnfm.manifest.json"));
    const auto mb = nlohmann::json::parse(read_file(d / "b.tnfm.manifest.json"));
    EXPECT_EQ(ma["digests"][p(d, "a.tnfm")], mb["digests"][p(d, "b.tnfm")]);
}

TEST_F(CliFixture, TrainUsageErrors) {
    TempDir d;
    const std::string data = p(*dir_, "data");
    EXPECT_EQ(run({"train", "--corpus", data, "--dim", "0", "--out", p(d, "x")}), 2);
    EXPECT_EQ(run({"train", "--corpus", data, "--model", "monomer", "--out", p(d, "x")}), 2);
    EXPECT_EQ(run({"train", "--corpus", data, "--modalities", "v,v", "--out", p(d, "x")}), 2);
    EXPECT_EQ(run({"train", "--corpus", p(d, "nowhere"), "--epochs", "1", "--out", p(d, "x")}), 1);
}

TEST_F(CliFixture, EvalReportFormat) {
    TempDir d;
    ASSERT_EQ(run({"eval", "--corpus", p(*dir_, "data"), "--checkpoint", p(*dir_, "m.tnfm"), "--negatives", "100",
                   "--k", "5,10,20,40", "--report", p(d, "r.json")}),
              0);
    const auto r = nlohmann::json::parse(read_file(d / "r.json"));
    for (const char* key : {"AUC", "Hit@5", "Hit@10", "Hit@20", "Hit@40"}) {
        ASSERT_TRUE(r["percent"].contains(key)) << key;
        EXPECT_GE(r["percent"][key].get<double>(), 0.0);
        EXPECT_LE(r["percent"][key].get<double>(), 100.0);
    }
    EXPECT_DOUBLE_EQ(r["percent"]["AUC"].get<double>(), 100.0 * r["auc"].get<double>());
    EXPECT_GT(r["n_queries"].get<int>(), 0);
    EXPECT_GT(r["n_shortfall"].get<int>(), 0);  // 40 items per category cannot supply 100 negatives
    EXPECT_EQ(r["mode"], "open");
    EXPECT_EQ(r["split"], "test");
    const auto m = nlohmann::json::parse(read_file(d / "r.json.manifest.json"));
    EXPECT_EQ(m["command"], "eval");
    EXPECT_EQ(m["digests"][p(d, "r.json")], cli::sha256_file(d / "r.json"));
}

TEST_F(CliFixture, EvalRerunIsIdenticalAndPartsWork) {
    TempDir d;
    const std::vector<std::string> base{"eval", "--corpus", p(*dir_, "data"), "--checkpoint", p(*dir_, "m.tnfm"),
                                        "--negatives", "30"};
    auto with = [&](std::vector<std::string> extra) {
        auto a = base;
        a.insert(a.end(), extra.begin(), extra.end());
        return a;
    };
    ASSERT_EQ(run(with({"--report", p(d, "a.json")})), 0);
    ASSERT_EQ(run(with({"--report", p(d, "b.json")})), 0);
    EXPECT_EQ(read_file(d / "a.json"), read_file(d / "b.json"));
    for (const char* part : {"global", "category"}) {
        ASSERT_EQ(run(with({"--part", part, "--report", p(d, std::string(part) + ".json")})), 0);
        EXPECT_EQ(nlohmann::json::parse(read_file(d / (std::string(part) + ".json")))["score_part"], part);
    }
    ASSERT_EQ(run(with({"--mode", "known-target", "--report", p(d, "k.json")})), 0);
    EXPECT_EQ(nlohmann::json::parse(read_file(d / "k.json"))["mode"], "known-target");
}

TEST_F(CliFixture, EvalUsageErrors) {
    TempDir d;
    const std::string data = p(*dir_, "data"), ck = p(*dir_, "m.tnfm"), rep = p(d, "r.json");
    EXPECT_EQ(run({"eval", "--corpus", data, "--checkpoint", ck, "--k", "0", "--report", rep}), 2);
    EXPECT_EQ(run({"eval", "--corpus", data, "--checkpoint", ck, "--k", "5,x", "--report", rep}), 2);
    EXPECT_EQ(run({"eval", "--corpus", data, "--checkpoint", ck, "--negatives", "0", "--report", rep}), 2);
    EXPECT_EQ(run({"eval", "--corpus", data, "--checkpoint", ck, "--mode", "closed", "--report", rep}), 2);
    EXPECT_EQ(run({"eval", "--corpus", data, "--checkpoint", ck, "--part", "half", "--report", rep}), 2);
    EXPECT_EQ(run({"eval", "--corpus", data, "--checkpoint", ck, "--split", "dev", "--report", rep}), 2);
    EXPECT_EQ(run({"eval", "--corpus", data, "--checkpoint", ck, "--candidates-in", "a", "--candidates-out", "b",
                   "--report", rep}),
              2);
    EXPECT_EQ(run({"eval", "--corpus", data, "--checkpoint", p(d, "missing.tnfm"), "--report", rep}), 1);
    EXPECT_FALSE(fs::exists(rep));
}

TEST_F(CliFixture, FrozenCandidatesAcrossModels) {
    TempDir d;
    ASSERT_EQ(run({"train", "--corpus", p(*dir_, "data"), "--model", "trinet", "--dim", "8", "--epochs", "1",
                   "--no-validate", "--out", p(d, "tri.tnfm")}),
              0);
    EXPECT_FALSE(fs::exists(d / "tri.tnfm.best"));
    ASSERT_EQ(run({"eval", "--corpus", p(*dir_, "data"), "--checkpoint", p(*dir_, "m.tnfm"), "--negatives", "20",
                   "--candidates-out", p(d, "c.jsonl"), "--report", p(d, "a.json")}),
              0);
    ASSERT_EQ(run({"eval", "--corpus", p(*dir_, "data"), "--checkpoint", p(d, "tri.tnfm"), "--negatives", "20",
                   "--candidates-in", p(d, "c.jsonl"), "--report", p(d, "b.json")}),
              0);
    ASSERT_EQ(run({"eval", "--corpus", p(*dir_, "data"), "--checkpoint", p(d, "tri.tnfm"), "--negatives", "20",
                   "--report", p(d, "c.json")}),
              0);
    const auto b = nlohmann::json::parse(read_file(d / "b.json"));
    const auto c = nlohmann::json::parse(read_file(d / "c.json"));
    EXPECT_EQ(b["auc"], c["auc"]);
    EXPECT_EQ(b["hits"], c["hits"]);
    EXPECT_EQ(run({"eval", "--corpus", p(*dir_, "data"), "--checkpoint", p(d, "tri.tnfm"), "--part", "global",
                   "--report", p(d, "x.json")}),
              2);
}

TEST_F(CliFixture, ConfigFileWithOverride) {
    TempDir d;
    write_file(d / "cfg.json", R"({"negatives": 10, "k": [1, 3], "mode": "known-target"})");
    ASSERT_EQ(run({"eval", "--config", p(d, "cfg.json"), "--corpus", p(*dir_, "data"), "--checkpoint",
                   p(*dir_, "m.tnfm"), "--negatives", "15", "--report", p(d, "r.json")}),
              0);
    const auto r = nlohmann::json::parse(read_file(d / "r.json"));
    EXPECT_EQ(r["config"]["negatives"], 15);
    EXPECT_EQ(r["mode"], "known-target");
    EXPECT_TRUE(r["hits"].contains("3"));
    write_file(d / "bad.json", "[1, 2]");
    EXPECT_EQ(run({"eval", "--config", p(d, "bad.json"), "--corpus", "x", "--checkpoint", "y", "--report", "z"}), 2);
    EXPECT_EQ(run({"eval", "--config", p(d, "nope.json")}), 2);
}

TEST(Cli, SplitAndKsParsing) {
    EXPECT_EQ(cli::parse_ks("5,10,20,40"), (std::vector<std::size_t>{5, 10, 20, 40}));
    EXPECT_THROW(cli::parse_ks("0"), cli::UsageError);
    EXPECT_THROW(cli::parse_ks(""), cli::UsageError);
    EXPECT_THROW(cli::parse_ks("3.5"), cli::UsageError);
    EXPECT_EQ(cli::split_list("v,,t"), (std::vector<std::string>{"v", "t"}));
}
