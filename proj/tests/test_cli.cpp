#include <sstream>

#include <json.hpp>

#include "cornyield/cli.hpp"
#include "cornyield/csv.hpp"
#include "cornyield/persist.hpp"
#include "support.hpp"

using namespace cornyield;
using namespace cornyield::cli;
using cornyield::testing::TempDir;
using cornyield::testing::read_text;
using cornyield::testing::write_text;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

// Six counties, 1995-2016, small network: a whole pipeline in seconds.
std::string small_config(const std::filesystem::path& out) {
    return "out_dir = " + out.string() +
           "\n"
           "synth_crd_sizes = 3,3\n"
           "train_years = 1995-2012\n"
           "test_years = 2013-2016\n"
           "hidden = 8\n"
           "learning_rate = 0.02\n"
           "batch_size = 8\n"
           "max_epochs = 40\n"
           "patience = 8\n"
           "seed = 3\n";
}

void run_ok(const std::vector<std::string>& args) {
    const auto r = invoke(args);
    ASSERT_EQ(r.code, 0) << r.err;
}

}  // namespace

TEST(Config, ParsesKeysAndComments) {
    TempDir dir;
    write_text(dir / "a.cfg",
               "# comment\n"
               "trend = constant\n"
               "base_year = 2016\n"
               "feature_set = set15   # trailing comment\n"
               "augment = pairs3\n"
               "time_len = 153\n"
               "train_years = 1980-2010\n"
               "test_years = 2011-2016\n"
               "hidden = 64-32\n"
               "search_hidden = 8,16\n"
               "yield = inputs/yield.csv\n");
    const auto cfg = load_config(dir / "a.cfg");
    EXPECT_EQ(cfg.trend, detrend::TrendKind::Constant);
    EXPECT_EQ(cfg.base_year, 2016);
    EXPECT_EQ(cfg.feature_set, "set15");
    EXPECT_EQ(cfg.augment, augment::Mode::PairsAndTriples);
    EXPECT_EQ(cfg.time_len, 153u);
    EXPECT_EQ(cfg.train_years.last, 2010);
    EXPECT_EQ(cfg.hp.hidden_sizes, (std::vector<std::size_t>{64, 32}));
    EXPECT_EQ(cfg.space.hidden_choices, (std::vector<std::size_t>{8, 16}));
    EXPECT_EQ(*cfg.yield, dir / "inputs/yield.csv");
    EXPECT_NO_THROW(validate(cfg));
    EXPECT_EQ(canonical_text(cfg), canonical_text(load_config(dir / "a.cfg")));
}

TEST(Config, InvalidValuesAreUsageErrors) {
    RunConfig cfg;
    EXPECT_ERROR_KIND(apply(cfg, "colour", "red"), ErrorKind::Usage);
    EXPECT_ERROR_KIND(apply(cfg, "time_len", "abc"), ErrorKind::Usage);
    EXPECT_ERROR_KIND(apply(cfg, "train_years", "1980"), ErrorKind::Usage);
    EXPECT_ERROR_KIND(apply(cfg, "trend", "linear"), ErrorKind::Usage);

    cfg = RunConfig{};
    cfg.time_len = 100;
    EXPECT_ANY_THROW(validate(cfg));
    cfg = RunConfig{};
    cfg.test_years = {2010, 2016};
    EXPECT_ANY_THROW(validate(cfg));
}

TEST(Config, MonthMapping) {
    EXPECT_EQ(month_to_days("aug"), 122u);
    EXPECT_EQ(month_to_days("sep"), 153u);
    EXPECT_EQ(month_to_days("oct"), 183u);
    EXPECT_EQ(month_to_days("final"), 214u);
    EXPECT_ERROR_KIND(month_to_days("jul"), ErrorKind::Usage);
}

TEST(Config, HashIsStable) {
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}

TEST(Cli, UsageErrorsExitWithTwo) {
    EXPECT_EQ(invoke({"frobnicate"}).code, kUsage);
    EXPECT_EQ(invoke({"train", "--set", "nonsense"}).code, kUsage);
    EXPECT_EQ(invoke({"train", "--set", "colour=red"}).code, kUsage);
    TempDir dir;
    EXPECT_EQ(invoke({"predict", "-o", dir.path().string(), "--month", "jul"}).code, kUsage);
}

TEST(Cli, MissingInputsExitWithDataError) {
    TempDir dir;
    const auto r = invoke({"ingest", "-o", dir.path().string()});
    EXPECT_EQ(r.code, kData);
    EXPECT_NE(r.err.find("weather.csv"), std::string::npos) << r.err;
}

TEST(Pipeline, SynthToEvaluateBeatsBaseline) {
    TempDir dir;
    write_text(dir / "run.cfg", small_config(dir / "out"));
    const std::string cfg = (dir / "run.cfg").string();
    for (const std::string cmd : {"synth", "ingest", "featurize", "select", "train", "predict", "evaluate"}) {
        run_ok({cmd, "-c", cfg});
        EXPECT_TRUE(std::filesystem::exists(dir / "out" / ("manifest_" + cmd + ".json"))) << cmd;
    }
    const auto summary = nlohmann::json::parse(read_text(dir / "out" / "eval_summary.json"));
    EXPECT_EQ(summary["county_years"], 24);
    EXPECT_LT(summary["mse_bu_ac"].get<double>(), summary["baseline_mse_bu_ac"].get<double>()) << summary.dump();

    const auto preds = csv::Table::read(dir / "out" / "predictions.csv", "test");
    EXPECT_EQ(preds.rows(), 24u);
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "eval_county.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "eval_state.csv"));

    const auto manifest = nlohmann::json::parse(read_text(dir / "out" / "manifest_train.json"));
    EXPECT_EQ(manifest["command"], "train");
    EXPECT_EQ(manifest["seed"], 3);
    EXPECT_EQ(manifest["config_hash"], hex64(fnv1a(manifest["config"].get<std::string>())));
    EXPECT_TRUE(manifest["artifacts"].contains("model.yldc"));
}

TEST(Pipeline, EarlyPredictionIgnoresLaterDays) {
    TempDir dir;
    write_text(dir / "run.cfg", small_config(dir / "out") + "max_epochs = 3\n");
    const std::string cfg = (dir / "run.cfg").string();
    for (const std::string cmd : {"synth", "featurize", "train"}) run_ok({cmd, "-c", cfg});
    run_ok({"predict", "-c", cfg, "--month", "aug"});
    const auto before = read_text(dir / "out" / "predictions.csv");
    EXPECT_NE(before.find(",122,"), std::string::npos);

    // Scramble every day from August 1 on; August predictions must not move.
    const auto test_path = dir / "out" / "test.ylds";
    auto ds = persist::load_dataset(test_path);
    for (auto& s : ds.samples)
        for (std::size_t f = 0; f < s.feature_count(); ++f)
            for (std::size_t t = 122; t < s.time_len(); ++t) s.features(f, t) = 1e6 + static_cast<double>(t);
    persist::save(ds, test_path);
    run_ok({"predict", "-c", cfg, "--month", "aug"});
    EXPECT_EQ(read_text(dir / "out" / "predictions.csv"), before);
    run_ok({"predict", "-c", cfg, "--month", "final"});
    EXPECT_NE(read_text(dir / "out" / "predictions.csv"), before);
}

TEST(Pipeline, SameSeedReproducesArtifacts) {
    TempDir dir;
    std::vector<nlohmann::json> manifests;
    for (const std::string name : {"a", "b"}) {
        write_text(dir / (name + ".cfg"), small_config(dir / name) + "max_epochs = 4\n");
        const std::string cfg = (dir / (name + ".cfg")).string();
        for (const std::string cmd : {"synth", "featurize"}) run_ok({cmd, "-c", cfg});
        run_ok({"search", "-c", cfg, "--trials", "3", "--seed", "42", "--set", "search_hidden=8",
                "--set", "search_layers=1", "--set", "max_epochs=3"});
        manifests.push_back(nlohmann::json::parse(read_text(dir / name / "manifest_search.json")));
    }
    EXPECT_EQ(manifests[0]["artifacts"], manifests[1]["artifacts"]);
    EXPECT_EQ(read_text(dir / "a" / "trials.csv"), read_text(dir / "b" / "trials.csv"));
    EXPECT_EQ(read_text(dir / "a" / "model.yldc"), read_text(dir / "b" / "model.yldc"));
}
