#include "cornyield/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cornyield/csv.hpp"
#include "cornyield/error.hpp"
#include "cornyield/eval.hpp"
#include "cornyield/features.hpp"
#include "cornyield/log.hpp"
#include "cornyield/persist.hpp"
#include "cornyield/rng.hpp"
#include "cornyield/select.hpp"

namespace cornyield::cli {

namespace {

constexpr std::string_view kModule = "cli";

[[noreturn]] void usage(const std::string& message) { throw Error(ErrorKind::Usage, kModule, message); }

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || value.empty()) usage("bad value \"" + value + "\" for " + key);
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
    std::vector<T> out;
    for (const auto& piece : csv::split(value, ',')) out.push_back(parse_number<T>(key, trim(piece)));
    return out;
}

ingest::YearRange parse_years(const std::string& key, const std::string& value) {
    const auto dash = value.find('-');
    if (dash == std::string::npos) usage("bad year range \"" + value + "\" for " + key + " (expected FIRST-LAST)");
    return {parse_number<int>(key, value.substr(0, dash)), parse_number<int>(key, value.substr(dash + 1))};
}

std::string years_text(ingest::YearRange r) { return std::to_string(r.first) + "-" + std::to_string(r.last); }

template <class T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (const auto& x : v) {
        if (!out.empty()) out += ',';
        if constexpr (std::is_floating_point_v<T>) {
            out += csv::format_exact(x);
        } else {
            out += std::to_string(x);
        }
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)>;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    std::filesystem::path p(value);
    return (p.is_relative() && !base.empty()) ? base / p : p;
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto path_field = [](std::optional<std::filesystem::path> RunConfig::*field) {
            return [field](RunConfig& c, const std::string& v, const std::filesystem::path& base) {
                c.*field = resolve(base, v);
            };
        };
        t["weather"] = path_field(&RunConfig::weather);
        t["yield"] = path_field(&RunConfig::yield);
        t["soil"] = path_field(&RunConfig::soil);
        t["pdsi"] = path_field(&RunConfig::pdsi);
        t["crd_map"] = path_field(&RunConfig::crd_map);
        t["usda"] = path_field(&RunConfig::usda);
        t["out_dir"] = [](RunConfig& c, const std::string& v, const std::filesystem::path& base) {
            c.out_dir = resolve(base, v);
        };
        t["trend"] = [](RunConfig& c, const std::string& v, auto&) { c.trend = detrend::parse_trend_kind(v); };
        t["base_year"] = [](RunConfig& c, const std::string& v, auto&) { c.base_year = parse_number<int>("base_year", v); };
        t["feature_set"] = [](RunConfig& c, const std::string& v, auto&) {
            features::feature_set(v);
            c.feature_set = v;
        };
        t["augment"] = [](RunConfig& c, const std::string& v, auto&) { c.augment = augment::parse_mode(v); };
        t["time_len"] = [](RunConfig& c, const std::string& v, auto&) { c.time_len = parse_number<std::size_t>("time_len", v); };
        t["train_years"] = [](RunConfig& c, const std::string& v, auto&) { c.train_years = parse_years("train_years", v); };
        t["test_years"] = [](RunConfig& c, const std::string& v, auto&) { c.test_years = parse_years("test_years", v); };
        t["validation_fraction"] = [](RunConfig& c, const std::string& v, auto&) {
            c.validation_fraction = parse_number<double>("validation_fraction", v);
        };
        t["impute"] = [](RunConfig& c, const std::string& v, auto&) {
            if (v == "none") c.impute = ingest::Impute::None;
            else if (v == "linear") c.impute = ingest::Impute::Linear;
            else usage("impute must be none or linear");
        };
        t["max_gap_days"] = [](RunConfig& c, const std::string& v, auto&) {
            c.max_gap_days = parse_number<std::size_t>("max_gap_days", v);
        };
        t["learning_rate"] = [](RunConfig& c, const std::string& v, auto&) {
            c.hp.learning_rate = parse_number<double>("learning_rate", v);
        };
        t["hidden"] = [](RunConfig& c, const std::string& v, auto&) { c.hp.hidden_sizes = train::parse_hidden(v); };
        t["dropout"] = [](RunConfig& c, const std::string& v, auto&) { c.hp.dropout_rate = parse_number<double>("dropout", v); };
        t["batch_size"] = [](RunConfig& c, const std::string& v, auto&) {
            c.hp.batch_size = c.space.batch_size = parse_number<std::size_t>("batch_size", v);
        };
        t["max_epochs"] = [](RunConfig& c, const std::string& v, auto&) {
            c.hp.max_epochs = c.space.max_epochs = parse_number<std::size_t>("max_epochs", v);
        };
        t["patience"] = [](RunConfig& c, const std::string& v, auto&) {
            c.hp.patience = c.space.patience = parse_number<std::size_t>("patience", v);
        };
        t["clip_norm"] = [](RunConfig& c, const std::string& v, auto&) { c.hp.clip_norm = parse_number<double>("clip_norm", v); };
        t["search_lr_min"] = [](RunConfig& c, const std::string& v, auto&) { c.space.lr_min = parse_number<double>("search_lr_min", v); };
        t["search_lr_max"] = [](RunConfig& c, const std::string& v, auto&) { c.space.lr_max = parse_number<double>("search_lr_max", v); };
        t["search_layers"] = [](RunConfig& c, const std::string& v, auto&) {
            c.space.layer_choices = parse_list<std::size_t>("search_layers", v);
        };
        t["search_hidden"] = [](RunConfig& c, const std::string& v, auto&) {
            c.space.hidden_choices = parse_list<std::size_t>("search_hidden", v);
        };
        t["search_dropout"] = [](RunConfig& c, const std::string& v, auto&) {
            c.space.dropout_choices = parse_list<double>("search_dropout", v);
        };
        t["trials"] = [](RunConfig& c, const std::string& v, auto&) { c.trials = parse_number<std::size_t>("trials", v); };
        t["jobs"] = [](RunConfig& c, const std::string& v, auto&) { c.jobs = parse_number<std::size_t>("jobs", v); };
        t["seed"] = [](RunConfig& c, const std::string& v, auto&) { c.seed = parse_number<std::uint64_t>("seed", v); };
        t["select_k"] = [](RunConfig& c, const std::string& v, auto&) { c.select_k = parse_number<std::size_t>("select_k", v); };
        t["select_bins"] = [](RunConfig& c, const std::string& v, auto&) {
            c.select_bins = parse_number<std::size_t>("select_bins", v);
        };
        t["select_summary"] = [](RunConfig& c, const std::string& v, auto&) {
            select::parse_summary(v);
            c.select_summary = v;
        };
        t["prune_threshold"] = [](RunConfig& c, const std::string& v, auto&) {
            c.prune_threshold = parse_number<double>("prune_threshold", v);
        };
        t["synth_crd_sizes"] = [](RunConfig& c, const std::string& v, auto&) {
            c.synth_crd_sizes = v.empty() ? std::vector<int>{} : parse_list<int>("synth_crd_sizes", v);
        };
        t["synth_noise_sd"] = [](RunConfig& c, const std::string& v, auto&) {
            c.synth_noise_sd = parse_number<double>("synth_noise_sd", v);
        };
        return t;
    }();
    return table;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage:
        case ErrorKind::Config: return kUsage;
        case ErrorKind::Numeric: return kNumeric;
        default: return kData;
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct Context {
    RunConfig cfg;
    std::string command;
    bool timing = false;
    std::optional<std::size_t> predict_days;
    std::ostream& out;
    std::vector<std::filesystem::path> artifacts;

    std::filesystem::path at(const std::string& name) const { return cfg.out_dir / name; }

    void write(const std::string& name, const std::string& content) {
        persist::write_file_atomic(at(name), content);
        artifacts.push_back(at(name));
    }

    void record(const std::filesystem::path& path) { artifacts.push_back(path); }
};

void write_manifest(Context& ctx) {
    nlohmann::json files = nlohmann::json::object();
    for (const auto& p : ctx.artifacts) {
        files[std::filesystem::relative(p, ctx.cfg.out_dir).generic_string()] = hex64(fnv1a(persist::read_file(p)));
    }
    const std::string config = canonical_text(ctx.cfg);
    nlohmann::json manifest = {
        {"command", ctx.command},
        {"config", config},
        {"config_hash", hex64(fnv1a(config))},
        {"seed", ctx.cfg.seed},
        {"versions",
         {{"cornyield", std::string(kVersion)},
          {"checkpoint_format", persist::kCheckpointVersion},
          {"dataset_format", persist::kDatasetVersion}}},
        {"artifacts", files},
    };
    persist::write_file_atomic(ctx.at("manifest_" + ctx.command + ".json"), manifest.dump(2) + "\n");
}

void cmd_synth(Context& ctx) {
    const auto& cfg = ctx.cfg;
    ingest::SynthConfig sc;
    sc.crd_sizes = cfg.synth_crd_sizes;
    sc.first_year = cfg.train_years.first;
    sc.last_year = cfg.test_years.last;
    sc.noise_sd = cfg.synth_noise_sd;
    sc.trend = cfg.trend_model();
    const auto synth = ingest::generate_synthetic(sc, cfg.seed);
    const auto dir = cfg.out_dir / "data";
    std::filesystem::create_directories(dir);
    const auto paths = ingest::write_dataset(synth.dataset, dir);
    for (const auto& p : {paths.weather, paths.yield, paths.soil, paths.pdsi}) ctx.record(p);
    ctx.record(dir / "crd_map.csv");

    std::string truth = "county,year,truth_adjusted\n";
    for (const auto& [key, v] : synth.truth_values) {
        truth += key.first + ',' + std::to_string(key.second) + ',' + csv::format_exact(v) + '\n';
    }
    persist::write_file_atomic(dir / "truth.csv", truth);
    ctx.record(dir / "truth.csv");
    ctx.out << "synth: " << synth.dataset.yields.size() << " county-years in " << synth.crd_map.size()
            << " counties written to " << dir.string() << "\n";
}

ingest::RawDataset load_raw(const RunConfig& cfg) {
    ingest::WeatherOptions opts;
    opts.impute = cfg.impute;
    opts.max_gap_days = cfg.max_gap_days;
    auto raw = ingest::load_dataset(cfg.input_paths(), opts);
    ingest::validate(raw);
    return raw;
}

void cmd_ingest(Context& ctx) {
    const auto raw = load_raw(ctx.cfg);
    std::ostringstream s;
    s << "counties=" << raw.counties.size() << "\n"
      << "county_years_weather=" << raw.weather.size() << "\n"
      << "yield_records=" << raw.yields.size() << "\n"
      << "pdsi_series=" << raw.pdsi.size() << "\n";
    ctx.write("ingest_summary.txt", s.str());
    ctx.out << s.str();
}

void cmd_featurize(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto raw = load_raw(cfg);
    const auto fs = features::feature_set(cfg.feature_set);
    const auto trend = cfg.trend_model();
    for (const auto& [name, range] : {std::pair{"train", cfg.train_years}, std::pair{"test", cfg.test_years}}) {
        persist::Dataset ds;
        ds.feature_names = fs.names();
        ds.feature_set = fs.name;
        ds.trend = trend;
        ds.samples = features::build_samples(raw, trend, fs, range);
        if (ds.samples.empty()) {
            throw Error(ErrorKind::Coverage, kModule, std::string("no ") + name + " samples in " + years_text(range));
        }
        persist::save(ds, ctx.at(std::string(name) + ".ylds"));
        ctx.record(ctx.at(std::string(name) + ".ylds"));
        ctx.out << "featurize: " << ds.samples.size() << " " << name << " samples x " << ds.feature_names.size()
                << " features\n";
    }
}

std::vector<Sample> truncated(std::vector<Sample> samples, std::size_t t) {
    for (auto& s : samples) {
        if (s.time_len() != t) s = truncate_time(s, t);
    }
    return samples;
}

void cmd_select(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto ds = persist::load_dataset(ctx.at("train.ylds"));
    const auto samples = truncated(ds.samples, cfg.time_len);
    const auto summary = select::summarize(samples, ds.feature_names, select::parse_summary(cfg.select_summary));
    const auto ranked = select::mrmr_rank(summary, std::min(cfg.select_k, ds.feature_names.size()), cfg.select_bins);
    const auto kept = select::correlation_prune(summary, cfg.prune_threshold, cfg.select_bins);

    std::string text = "rank,feature,score\n";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        text += std::to_string(i + 1) + ',' + ranked[i].name + ',' + csv::format_exact(ranked[i].score) + '\n';
    }
    ctx.write("selection.csv", text);
    std::string pruned = "feature\n";
    for (const auto& k : kept) pruned += k + '\n';
    ctx.write("pruned.csv", pruned);
    ctx.out << "select: top " << ranked.size() << " of " << ds.feature_names.size() << " features; " << kept.size()
            << " survive the correlation prune\n";
    for (const auto& r : ranked) ctx.out << "  " << r.name << " " << csv::format_fixed(r.score, 6) << "\n";
}

struct Prepared {
    persist::Dataset dataset;
    train::Split split;
};

Prepared prepare_training(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    Prepared p;
    p.dataset = persist::load_dataset(ctx.at("train.ylds"));
    auto samples = truncated(std::move(p.dataset.samples), cfg.time_len);
    p.dataset.samples.clear();
    p.split = train::split_validation(std::move(samples), cfg.validation_fraction, Rng::derive(cfg.seed, 7));
    if (cfg.augment != augment::Mode::None) {
        const auto plan = augment::make_plan(cfg.augment, ingest::parse_crd_map_csv(cfg.crd_map_path()));
        const auto before = p.split.train.size();
        p.split.train = augment::augment_dataset(p.split.train, plan);
        log::info("augmented " + std::to_string(before) + " training samples to " +
                  std::to_string(p.split.train.size()));
    }
    return p;
}

std::string split_note(const RunConfig& cfg, const train::Split& split) {
    return "validation: seeded random " + csv::format_exact(cfg.validation_fraction * 100.0) +
           "% of original county samples (" + std::to_string(split.validation.size()) + " held out, " +
           std::to_string(split.train.size()) + " training samples, augment=" +
           std::string(augment::to_string(cfg.augment)) + ")";
}

persist::Checkpoint checkpoint_for(const Context& ctx, const Prepared& p, const train::TrainReport& report,
                                   const train::Hyperparams& hp) {
    persist::Checkpoint ckpt;
    ckpt.model = report.model;
    ckpt.trend = p.dataset.trend;
    ckpt.feature_set = p.dataset.feature_set;
    ckpt.feature_names = p.dataset.feature_names;
    ckpt.time_len = ctx.cfg.time_len;
    ckpt.hyperparams = hp;
    return ckpt;
}

void cmd_train(Context& ctx) {
    const auto p = prepare_training(ctx);
    auto hp = ctx.cfg.hp;
    hp.seed = ctx.cfg.seed;
    std::string curve = "epoch,train_mse,val_mse\n";
    const auto report = train::train_model(p.split, hp, [&](std::size_t epoch, double tr, double va) {
        curve += std::to_string(epoch) + ',' + csv::format_exact(tr) + ',' + csv::format_exact(va) + '\n';
    });
    ctx.write("train_log.csv", curve);
    persist::save(checkpoint_for(ctx, p, report, hp), ctx.at("model.yldc"));
    ctx.record(ctx.at("model.yldc"));
    ctx.out << "train: best validation MSE " << csv::format_fixed(report.best_validation_mse(), 4) << " at epoch "
            << report.best_epoch << " of " << report.validation_mse.size() << "\n";
}

void cmd_search(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto p = prepare_training(ctx);
    const auto result = train::random_search(cfg.space, cfg.trials, cfg.seed, p.split, cfg.jobs);
    train::write_trial_log(result, ctx.at("trials.csv"), ctx.timing, split_note(cfg, p.split));
    ctx.record(ctx.at("trials.csv"));
    const auto& best = result.trials[result.best];
    persist::save(checkpoint_for(ctx, p, result.best_report, best.hp), ctx.at("model.yldc"));
    ctx.record(ctx.at("model.yldc"));
    ctx.out << "search: " << result.trials.size() << " trials; best #" << best.index << " lr "
            << csv::format_exact(best.hp.learning_rate) << " hidden " << train::hidden_to_string(best.hp.hidden_sizes)
            << " dropout " << csv::format_exact(best.hp.dropout_rate) << " val MSE "
            << csv::format_fixed(best.validation_mse, 4) << "\n";
}

void cmd_predict(Context& ctx) {
    const auto ckpt = persist::load(ctx.at("model.yldc"));
    const auto ds = persist::load_dataset(ctx.at("test.ylds"));
    if (ds.feature_names != ckpt.feature_names) {
        throw Error(ErrorKind::Consistency, kModule, "test features do not match the checkpoint's features");
    }
    const std::size_t days = ctx.predict_days.value_or(ckpt.time_len);
    const auto samples = truncated(ds.samples, days);
    const auto pred = train::predict(ckpt.model, samples);
    std::string text = "county,year,days,pred_adjusted,pred_bu_ac\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        text += s.key + ',' + std::to_string(s.year) + ',' + std::to_string(days) + ',' + csv::format_exact(pred[i]) +
                ',' + csv::format_exact(detrend::invert(pred[i], s.year, ckpt.trend)) + '\n';
    }
    ctx.write("predictions.csv", text);
    ctx.out << "predict: " << samples.size() << " county-years using days 0.." << days - 1 << "\n";
}

void cmd_evaluate(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto table = csv::Table::read(ctx.at("predictions.csv"), kModule);
    const auto c_county = table.require_column("county");
    const auto c_year = table.require_column("year");
    const auto c_adj = table.require_column("pred_adjusted");
    const auto c_bu = table.require_column("pred_bu_ac");
    std::vector<eval::Prediction> preds, preds_adj;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto county = table.text(r, c_county);
        const int year = static_cast<int>(table.integer(r, c_year));
        preds.push_back({county, year, table.number(r, c_bu)});
        preds_adj.push_back({county, year, table.number(r, c_adj)});
    }

    const auto trend = cfg.trend_model();
    std::vector<YieldRecord> yields;
    for (auto& y : ingest::parse_yield_csv(cfg.input_paths().yield)) {
        if (cfg.test_years.contains(y.year)) yields.push_back(std::move(y));
    }
    std::vector<YieldRecord> adjusted;
    for (const auto& y : yields) adjusted.push_back({y.county_id, y.year, detrend::adjust(y.yield_bu_ac, y.year, trend)});

    eval::EvalReport report;
    report.county = eval::county_errors(preds, yields);
    const auto county_adj = eval::county_errors(preds_adj, adjusted);

    std::map<std::string, double> acres;
    for (const auto& [id, meta] : ingest::parse_soil_csv(cfg.input_paths().soil)) {
        if (meta.harvested_acres) acres[id] = *meta.harvested_acres;
    }
    report.state = eval::state_aggregate(report.county.rows, acres);
    if (cfg.usda) report.usda = eval::usda_compare(report.state.rows, eval::parse_usda_csv(*cfg.usda));

    // Constant predictor: the mean adjusted training yield, re-trended.
    std::optional<double> baseline;
    if (std::filesystem::exists(ctx.at("train.ylds"))) {
        const auto train_ds = persist::load_dataset(ctx.at("train.ylds"));
        double mean = 0.0;
        for (const auto& s : train_ds.samples) mean += s.target_adjusted;
        mean /= static_cast<double>(train_ds.samples.size());
        std::vector<eval::Prediction> base;
        for (const auto& y : yields) base.push_back({y.county_id, y.year, detrend::invert(mean, y.year, trend)});
        baseline = eval::county_errors(base, yields).mse;
    }

    const auto [county_csv, state_csv] = eval::emit_plot_csv(report, ctx.at("eval"));
    ctx.record(county_csv);
    ctx.record(state_csv);

    nlohmann::json summary = {
        {"county_years", report.county.rows.size()},
        {"mse_bu_ac", report.county.mse},
        {"mse_adjusted", county_adj.mse},
        {"mean_abs_error_bu_ac", report.county.mean_abs_error},
        {"state_weighting", std::string(eval::to_string(report.state.weighting))},
    };
    if (baseline) summary["baseline_mse_bu_ac"] = *baseline;
    nlohmann::json by_year = nlohmann::json::object();
    for (const auto& [year, m] : report.county.mse_by_year) by_year[std::to_string(year)] = m;
    summary["mse_by_year_bu_ac"] = by_year;
    nlohmann::json usda = nlohmann::json::array();
    for (const auto& u : report.usda) {
        if (!u.compared) continue;
        usda.push_back({{"year", u.year}, {"actual", u.actual}, {"usda", u.usda}, {"model", u.model},
                        {"usda_error", u.usda_error}, {"model_error", u.model_error}});
    }
    summary["usda_comparison"] = usda;
    ctx.write("eval_summary.json", summary.dump(2) + "\n");

    ctx.out << "evaluate: " << report.county.rows.size() << " county-years, MSE "
            << csv::format_fixed(report.county.mse, 4) << " bu/ac^2 (adjusted " << csv::format_fixed(county_adj.mse, 4)
            << ")";
    if (baseline) ctx.out << ", variance baseline " << csv::format_fixed(*baseline, 4);
    ctx.out << "\n";
    for (const auto& s : report.state.rows) {
        ctx.out << "  " << s.year << " state " << csv::format_fixed(s.predicted, 2) << " actual "
                << csv::format_fixed(s.actual, 2) << "\n";
    }
}

}  // namespace

detrend::TrendModel RunConfig::trend_model() const {
    detrend::TrendModel m;
    m.kind = trend;
    m.base_year = base_year.value_or(test_years.last);
    detrend::validate(m);
    return m;
}

ingest::InputPaths RunConfig::input_paths() const {
    const auto data = out_dir / "data";
    return {weather.value_or(data / "weather.csv"), yield.value_or(data / "yield.csv"),
            soil.value_or(data / "soil.csv"), pdsi.value_or(data / "pdsi.csv")};
}

std::filesystem::path RunConfig::crd_map_path() const { return crd_map.value_or(out_dir / "data" / "crd_map.csv"); }

void apply(RunConfig& cfg, const std::string& key, const std::string& value, const std::filesystem::path& base_dir) {
    const auto it = setters().find(key);
    if (it == setters().end()) usage("unknown config key \"" + key + "\"");
    try {
        it->second(cfg, value, base_dir);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Usage) throw;
        usage("bad value \"" + value + "\" for " + key + ": " + e.message());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) usage("cannot open config " + path.string());
    RunConfig cfg;
    const auto base = path.parent_path();
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        const auto body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) usage(path.string() + ":" + std::to_string(number) + ": expected key = value");
        apply(cfg, trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)), base);
    }
    return cfg;
}

void validate(const RunConfig& cfg) {
    if (!season::is_valid_truncation(cfg.time_len)) usage("time_len must be one of 122, 153, 183, 214");
    if (cfg.train_years.first > cfg.train_years.last) usage("train_years is empty");
    if (cfg.test_years.first > cfg.test_years.last) usage("test_years is empty");
    if (cfg.train_years.last >= cfg.test_years.first && cfg.test_years.last >= cfg.train_years.first) {
        usage("train_years and test_years overlap");
    }
    if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) usage("validation_fraction must lie in (0, 1)");
    if (cfg.trials == 0) usage("trials must be positive");
    if (cfg.jobs == 0) usage("jobs must be positive");
    if (!(cfg.prune_threshold > 0.0 && cfg.prune_threshold < 1.0)) usage("prune_threshold must lie in (0, 1)");
    if (!(cfg.synth_noise_sd >= 0.0)) usage("synth_noise_sd must be non-negative");
    try {
        auto hp = cfg.hp;
        train::validate(hp);
        train::validate(cfg.space);
        const auto m = cfg.trend_model();
        if (m.base_year < std::max(cfg.train_years.last, cfg.test_years.last)) {
            usage("base_year precedes the last data year");
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Usage) throw;
        usage(e.message());
    }
}

std::string canonical_text(const RunConfig& cfg) {
    const auto paths = cfg.input_paths();
    std::map<std::string, std::string> kv = {
        {"weather", paths.weather.generic_string()},
        {"yield", paths.yield.generic_string()},
        {"soil", paths.soil.generic_string()},
        {"pdsi", paths.pdsi.generic_string()},
        {"crd_map", cfg.crd_map_path().generic_string()},
        {"usda", cfg.usda ? cfg.usda->generic_string() : ""},
        {"out_dir", cfg.out_dir.generic_string()},
        {"trend", std::string(detrend::to_string(cfg.trend))},
        {"base_year", std::to_string(cfg.base_year.value_or(cfg.test_years.last))},
        {"feature_set", cfg.feature_set},
        {"augment", std::string(augment::to_string(cfg.augment))},
        {"time_len", std::to_string(cfg.time_len)},
        {"train_years", years_text(cfg.train_years)},
        {"test_years", years_text(cfg.test_years)},
        {"validation_fraction", csv::format_exact(cfg.validation_fraction)},
        {"impute", cfg.impute == ingest::Impute::None ? "none" : "linear"},
        {"max_gap_days", std::to_string(cfg.max_gap_days)},
        {"learning_rate", csv::format_exact(cfg.hp.learning_rate)},
        {"hidden", train::hidden_to_string(cfg.hp.hidden_sizes)},
        {"dropout", csv::format_exact(cfg.hp.dropout_rate)},
        {"batch_size", std::to_string(cfg.hp.batch_size)},
        {"max_epochs", std::to_string(cfg.hp.max_epochs)},
        {"patience", std::to_string(cfg.hp.patience)},
        {"clip_norm", csv::format_exact(cfg.hp.clip_norm)},
        {"search_lr_min", csv::format_exact(cfg.space.lr_min)},
        {"search_lr_max", csv::format_exact(cfg.space.lr_max)},
        {"search_layers", join(cfg.space.layer_choices)},
        {"search_hidden", join(cfg.space.hidden_choices)},
        {"search_dropout", join(cfg.space.dropout_choices)},
        {"trials", std::to_string(cfg.trials)},
        {"jobs", std::to_string(cfg.jobs)},
        {"seed", std::to_string(cfg.seed)},
        {"select_k", std::to_string(cfg.select_k)},
        {"select_bins", std::to_string(cfg.select_bins)},
        {"select_summary", cfg.select_summary},
        {"prune_threshold", csv::format_exact(cfg.prune_threshold)},
        {"synth_crd_sizes", join(cfg.synth_crd_sizes)},
        {"synth_noise_sd", csv::format_exact(cfg.synth_noise_sd)},
    };
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::size_t month_to_days(const std::string& month) {
    if (month == "aug") return 122;
    if (month == "sep") return 153;
    if (month == "oct") return 183;
    if (month == "final") return 214;
    usage("month must be one of aug, sep, oct, final");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"County-level corn yield forecasting with an LSTM", "cornyield"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    std::optional<std::string> config_path, out_dir, trend, feature_set, augment_mode, month;
    std::optional<int> base_year;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials, jobs;
    std::vector<std::string> overrides;
    bool timing = false;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"synth", "generate a synthetic dataset under <out_dir>/data"},
        {"ingest", "parse and validate the input CSVs"},
        {"featurize", "build train/test feature tensors"},
        {"select", "rank features by mRMR and prune correlated ones"},
        {"train", "train one model with the configured hyperparameters"},
        {"search", "random hyperparameter search"},
        {"predict", "predict the test years from the saved model"},
        {"evaluate", "county and state error reports"},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", config_path, "key=value config file");
        sub->add_option("-o,--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--set", overrides, "override a config key (key=value)");
        sub->add_option("--trend", trend, "percentage or constant");
        sub->add_option("--base-year", base_year, "de-trending base year");
        sub->add_option("--feature-set", feature_set, "best10, set15, set16 or all28");
        sub->add_option("--augment", augment_mode, "none, pairs or pairs3");
        subs[name] = sub;
    }
    subs["search"]->add_option("--trials", trials, "number of trials");
    subs["search"]->add_option("--jobs", jobs, "parallel trial workers");
    subs["search"]->add_flag("--timing", timing, "record wall time per trial in the trial log");
    subs["predict"]->add_option("--month", month, "aug, sep, oct or final");

    std::vector<const char*> argv = {"cornyield"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    std::string command;
    for (const auto& [name, sub] : subs) {
        if (sub->parsed()) command = name;
    }

    try {
        RunConfig cfg = config_path ? load_config(*config_path) : RunConfig{};
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) usage("--set expects key=value, got \"" + o + "\"");
            apply(cfg, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
        }
        if (out_dir) apply(cfg, "out_dir", *out_dir);
        if (seed) cfg.seed = *seed;
        if (trend) apply(cfg, "trend", *trend);
        if (base_year) cfg.base_year = *base_year;
        if (feature_set) apply(cfg, "feature_set", *feature_set);
        if (augment_mode) apply(cfg, "augment", *augment_mode);
        if (trials) cfg.trials = *trials;
        if (jobs) cfg.jobs = *jobs;
        validate(cfg);

        Context ctx{cfg, command, timing, std::nullopt, out, {}};
        if (month) ctx.predict_days = month_to_days(*month);
        std::filesystem::create_directories(cfg.out_dir);

        static const std::map<std::string, void (*)(Context&)> handlers = {
            {"synth", cmd_synth},     {"ingest", cmd_ingest}, {"featurize", cmd_featurize},
            {"select", cmd_select},   {"train", cmd_train},   {"search", cmd_search},
            {"predict", cmd_predict}, {"evaluate", cmd_evaluate},
        };
        handlers.at(command)(ctx);
        write_manifest(ctx);
        return kOk;
    } catch (const Error& e) {
        err << "cornyield " << command << ": " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "cornyield " << command << ": io error: " << e.what() << "\n";
        return kData;
    }
}

}  // namespace cornyield::cli
