#include "cli.hpp"

#include "lmf/align.hpp"
#include "lmf/dataset.hpp"
#include "lmf/error.hpp"
#include "lmf/eval.hpp"
#include "lmf/features.hpp"
#include "lmf/model.hpp"
#include "lmf/modelselect.hpp"
#include "lmf/svm.hpp"
#include "lmf/synth.hpp"
#include "lmf/text.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>

namespace lmf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Failure that has already been reported; carries the exit status.
struct Exit {
    int status;
};

int exit_code_for(ErrorCode code) {
    return code == ErrorCode::AllCellsFailed ? kExitTrainingFailure : kExitDataError;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::string_view rest = text;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto token = trim(rest.substr(0, comma));
        if (!token.empty()) out.push_back(parse_double(token));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    if (out.empty()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is empty");
    return out;
}

std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += format_double(values[i]);
    }
    return out;
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error(ErrorCode::IoFailure, "cannot create output directory " + dir.string());
    }
}

void write_run_config(const fs::path& dir, const std::string& command, json config) {
    config["command"] = command;
    write_file((dir / "run_config.json").string(), config.dump(2) + "\n");
}

// -- config files ------------------------------------------------------------------

std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    return path;
}

std::string config_value(const std::string& key, const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return format_double(v.get<double>());
    if (v.is_array()) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i > 0) out += ',';
            out += config_value(key, v[i]);
        }
        return out;
    }
    throw Error(ErrorCode::InvalidArgument, "config key '" + key + "' has an unsupported value type");
}

/// Turns a flat JSON object into `--key value` arguments. The `command` key
/// written into run_config.json is checked against the subcommand.
std::vector<std::string> config_arguments(const fs::path& path, const std::string& command) {
    json j;
    try {
        j = json::parse(read_file(path.string()));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedFile, "config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::MalformedFile, "config " + path.string() + " is not a JSON object");
    std::vector<std::string> out;
    for (const auto& [key, value] : j.items()) {
        if (key == "config" || value.is_null()) continue;
        if (key == "command") {
            if (value != command) {
                throw Error(ErrorCode::InvalidArgument, "config was written for '" + config_value(key, value) +
                                                            "', not '" + command + "'");
            }
            continue;
        }
        if (value.is_boolean()) {
            if (value.get<bool>()) out.push_back("--" + key);
            continue;
        }
        out.push_back("--" + key);
        out.push_back(config_value(key, value));
    }
    return out;
}

// -- train ----------------------------------------------------------------------------

struct TrainOptions {
    std::string manifest;
    std::string out;
    std::uint64_t seed = 0;
    std::size_t folds = 5;
    std::string c_grid = join(Grid{}.c_values);
    std::string gamma_grid = join(Grid{}.gamma_values);
    double kkt_tolerance = 1e-3;
    int max_passes = 10;
    unsigned threads = 0;
    double train_fraction = 1.0;
    CLI::Option* train_fraction_opt = nullptr;

    json to_json() const {
        json j = {{"manifest", manifest},
                  {"out", out},
                  {"seed", seed},
                  {"folds", folds},
                  {"c-grid", c_grid},
                  {"gamma-grid", gamma_grid},
                  {"kkt-tolerance", kkt_tolerance},
                  {"max-passes", max_passes},
                  {"threads", threads}};
        if (train_fraction_opt->count() > 0) j["train-fraction"] = train_fraction;
        return j;
    }
};

fs::path resolve_against(const fs::path& manifest, const std::string& path) {
    const fs::path p(path);
    if (p.is_absolute()) return p;
    return (fs::absolute(manifest).parent_path() / p).lexically_normal();
}

void warn_skipped(const std::vector<SkippedRecord>& skipped, std::ostream& err) {
    for (const auto& s : skipped) err << "warning: skipped " << s.id << ": " << s.reason << "\n";
}

int cmd_train(const TrainOptions& o, std::ostream& err) {
    const fs::path out_dir(o.out);
    ensure_directory(out_dir);

    Grid grid;
    grid.c_values = parse_list(o.c_grid, "c-grid");
    grid.gamma_values = parse_list(o.gamma_grid, "gamma-grid");
    grid.validate();

    std::vector<SkippedRecord> skipped;
    Dataset data = load_manifest(o.manifest, ParseFailurePolicy::Skip, &skipped);
    warn_skipped(skipped, err);
    if (data.empty()) throw Error(ErrorCode::EmptyInput, "manifest has no usable records");
    for (const auto& r : data.records()) label_sign(r.label);

    if (o.train_fraction_opt->count() > 0) {
        if (!(o.train_fraction > 0.0 && o.train_fraction < 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "train-fraction must lie strictly between 0 and 1");
        }
        auto split = split_train_test(data, o.train_fraction, o.seed);
        std::vector<ManifestRow> rows;
        for (const auto& r : split.test.records()) {
            rows.push_back({resolve_against(o.manifest, r.id).string(), r.label, r.group});
        }
        write_file((out_dir / "test_manifest.csv").string(), format_manifest(rows));
        data = std::move(split.train);
    }

    const std::size_t n_real = data.count(Label::Real);
    const std::size_t n_fake = data.count(Label::Fake);
    if (n_real == 0 || n_fake == 0) {
        err << "error: single class: training data contains only " << (n_real == 0 ? "fake" : "real")
            << " records\n";
        throw Exit{kExitDataError};
    }

    const AlignmentConfig alignment;
    std::vector<LandmarkSet> reals;
    for (const auto& r : data.records()) {
        if (r.label == Label::Real) reals.push_back(r);
    }
    const ReferenceShape reference = compute_reference_shape(std::span<const LandmarkSet>(reals), alignment, o.seed);

    std::vector<FeatureVector> raw;
    std::vector<Label> labels;
    std::size_t align_failures = 0;
    for (const auto& r : data.records()) {
        try {
            raw.push_back(flatten(align(r, reference, alignment)));
            labels.push_back(r.label);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateLandmarks) throw;
            err << "warning: skipped " << r.id << ": " << e.what() << "\n";
            ++align_failures;
        }
    }

    const Standardizer standardizer = fit_standardizer(raw);
    std::vector<Sample> samples;
    samples.reserve(raw.size());
    for (const auto& f : raw) {
        const auto z = standardize(standardizer, f);
        samples.emplace_back(z.values.begin(), z.values.end());
    }

    GridSearchOptions gs;
    gs.folds = o.folds;
    gs.seed = o.seed;
    gs.kkt_tolerance = o.kkt_tolerance;
    gs.max_passes = o.max_passes;
    gs.threads = o.threads;

    GridSearchResult result;
    try {
        result = grid_search(samples, labels, grid, gs);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        err << "error: training failed: " << e.what() << "\n";
        throw Exit{kExitTrainingFailure};
    }
    if (!result.final_model.converged) {
        err << "warning: final SVM stopped before reaching the KKT tolerance (violation "
            << format_double(result.final_model.kkt_violation) << ")\n";
    }

    const auto& best = result.cv.best();
    json metadata = {{"seed", o.seed},
                     {"folds", o.folds},
                     {"n_train", samples.size()},
                     {"n_real", static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Real))},
                     {"n_fake", static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Fake))},
                     {"skipped_records", skipped.size() + align_failures},
                     {"cv_mean_auroc", format_double(best.mean_auroc)},
                     {"converged", result.final_model.converged},
                     {"smo_iterations", result.final_model.iterations},
                     {"dual_objective", format_double(result.final_model.dual_objective)},
                     {"grid", {{"c", grid.c_values.size()}, {"gamma", grid.gamma_values.size()}}},
                     {"final_fit", "retrained on all training records with the chosen cell"},
                     {"class_weight_scheme", "n/(2*n_c)"},
                     {"cv", cv_to_json(result.cv)}};

    SvmModel model{result.final_model.machine,
                   result.final_params.c,
                   result.final_params.class_weights,
                   standardizer,
                   reference,
                   alignment,
                   std::move(metadata)};
    model.training_metadata["parameter_count"] = model.parameter_count();
    save_model(model, out_dir / "model.json");
    write_file((out_dir / "cv_results.csv").string(), format_cv_csv(result.cv));
    write_run_config(out_dir, "train", o.to_json());

    err << "trained on " << samples.size() << " records (" << skipped.size() + align_failures
        << " skipped); c=" << format_double(best.c) << " gamma=" << format_double(best.gamma)
        << " cv AUROC=" << format_double(best.mean_auroc) << "; "
        << model.machine.support_vectors.size() << " support vectors\n";
    return kExitOk;
}

// -- predict --------------------------------------------------------------------------

struct PredictOptions {
    std::string model;
    std::string manifest;
    std::string out;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    json to_json() const {
        return {{"model", model}, {"manifest", manifest}, {"out", out}, {"seed", seed}, {"threads", threads}};
    }
};

int cmd_predict(const PredictOptions& o, std::ostream& err) {
    const fs::path out_dir(o.out);
    SvmModel model = [&] {
        try {
            return load_model(o.model);
        } catch (const Error& e) {
            err << "error: cannot load model: " << e.what() << "\n";
            throw Exit{kExitDataError};
        }
    }();
    ensure_directory(out_dir);

    std::vector<SkippedRecord> skipped;
    const Dataset data = load_manifest(o.manifest, ParseFailurePolicy::Skip, &skipped);
    warn_skipped(skipped, err);

    std::vector<ScoredRecord> rows;
    std::vector<Sample> samples;
    std::size_t align_failures = 0;
    for (const auto& r : data.records()) {
        try {
            const auto f = model_features(model, r.points);
            samples.emplace_back(f.values.begin(), f.values.end());
            rows.push_back({r.id, r.group, r.label, 0.0});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateLandmarks) throw;
            err << "warning: skipped " << r.id << ": " << e.what() << "\n";
            ++align_failures;
        }
    }
    const auto scores = decision_batch(model.machine, samples, o.threads);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].score = scores[i];

    write_file((out_dir / "scores.csv").string(), format_scores_csv(rows));
    write_run_config(out_dir, "predict", o.to_json());
    err << "scored " << rows.size() << " records, skipped " << skipped.size() + align_failures << "\n";
    return kExitOk;
}

// -- eval -------------------------------------------------------------------------------

struct EvalOptions {
    std::string scores;
    std::string out;
    std::uint64_t seed = 0;
    std::string level = "frame";
    std::string aggregation = "mean-score";

    json to_json() const {
        return {{"scores", scores}, {"out", out}, {"seed", seed}, {"level", level}, {"aggregation", aggregation}};
    }
};

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
    const fs::path out_dir(o.out);
    const EvalLevel level = parse_eval_level(o.level);
    AggregationMode mode = AggregationMode::MeanScore;
    if (o.aggregation == "mean-label") {
        mode = AggregationMode::MeanLabel;
    } else if (o.aggregation != "mean-score") {
        throw Error(ErrorCode::InvalidArgument, "aggregation must be mean-score or mean-label");
    }
    const auto records = parse_scores_csv(read_file(o.scores));
    if (records.empty()) throw Error(ErrorCode::EmptyInput, "scores CSV has no rows");
    const auto report = evaluate(records, level, mode);
    ensure_directory(out_dir);
    write_file((out_dir / "report.json").string(), report_to_json(report).dump(1) + "\n");
    write_run_config(out_dir, "eval", o.to_json());
    out << to_string(level) << " AUROC " << format_double(report.auroc) << " (" << report.n_positive << " fake, "
        << report.n_negative << " real)\n";
    (void)err;
    return kExitOk;
}

// -- stats -------------------------------------------------------------------------------

struct StatsOptions {
    std::string manifest;
    std::string model;
    std::string out;
    std::uint64_t seed = 0;
    std::size_t bins = 50;
    double lo = -0.25;
    double hi = 1.25;

    json to_json() const {
        json j = {{"manifest", manifest}, {"out", out}, {"seed", seed}, {"bins", bins}, {"lo", lo}, {"hi", hi}};
        if (!model.empty()) j["model"] = model;
        return j;
    }
};

int cmd_stats(const StatsOptions& o, std::ostream& err) {
    const fs::path out_dir(o.out);
    if (!(o.bins >= 2) || !(o.lo < o.hi)) {
        throw Error(ErrorCode::InvalidArgument, "stats needs bins >= 2 and lo < hi");
    }
    std::vector<SkippedRecord> skipped;
    const Dataset data = load_manifest(o.manifest, ParseFailurePolicy::Skip, &skipped);
    warn_skipped(skipped, err);
    if (data.empty()) throw Error(ErrorCode::EmptyInput, "manifest has no usable records");

    AlignmentConfig alignment;
    std::optional<ReferenceShape> reference;
    if (!o.model.empty()) {
        const SvmModel model = load_model(o.model);
        alignment = model.alignment_config;
        reference = model.reference;
    } else {
        std::vector<LandmarkSet> pool;
        for (const auto& r : data.records()) {
            if (r.label == Label::Real) pool.push_back(r);
        }
        if (pool.empty()) pool = data.records();
        reference = compute_reference_shape(std::span<const LandmarkSet>(pool), alignment, o.seed);
    }

    std::vector<Shape> real;
    std::vector<Shape> fake;
    std::size_t unlabeled = 0;
    for (const auto& r : data.records()) {
        if (r.label == Label::Unlabeled) {
            ++unlabeled;
            continue;
        }
        try {
            (r.label == Label::Real ? real : fake).push_back(align(r, *reference, alignment));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateLandmarks) throw;
            err << "warning: skipped " << r.id << ": " << e.what() << "\n";
        }
    }
    if (unlabeled > 0) err << "warning: ignored " << unlabeled << " unlabeled records\n";

    std::vector<Label> empty_classes;
    const auto table = marginal_density(real, fake, DensityOptions{o.bins, o.lo, o.hi}, &empty_classes);
    for (auto label : empty_classes) err << "warning: no " << to_string(label) << " records\n";

    ensure_directory(out_dir);
    write_file((out_dir / "density.csv").string(), format_density_csv(table));
    write_run_config(out_dir, "stats", o.to_json());
    return kExitOk;
}

// -- synth -------------------------------------------------------------------------------

struct SynthOptions {
    std::string out;
    SynthConfig config;
    std::string fake_part = "mouth";
    double shift_direction = 0.0;
    CLI::Option* shift_direction_opt = nullptr;

    json to_json() const {
        const auto& c = config;
        json j = {{"out", out},
                  {"seed", c.seed},
                  {"n-per-class", c.n_per_class},
                  {"shape-noise", c.shape_noise},
                  {"fake-part", fake_part},
                  {"shift-mean", c.shift_mean},
                  {"shift-std", c.shift_std},
                  {"frames-per-group", c.frames_per_group},
                  {"scale-min", c.pose.scale_min},
                  {"scale-max", c.pose.scale_max},
                  {"rotation-deg", c.pose.rotation_deg},
                  {"translation-min", c.pose.translation_min},
                  {"translation-max", c.pose.translation_max}};
        if (shift_direction_opt->count() > 0) j["shift-direction"] = shift_direction;
        return j;
    }
};

int cmd_synth(SynthOptions o, std::ostream& err) {
    const fs::path out_dir(o.out);
    o.config.fake_part = PartIndexGroups::by_name(o.fake_part);
    if (o.shift_direction_opt->count() > 0) o.config.shift_direction_deg = o.shift_direction;
    o.config.validate();
    ensure_directory(out_dir);
    const auto rows = write_synthetic_corpus(out_dir, o.config, default_template());
    write_run_config(out_dir, "synth", o.to_json());
    err << "wrote " << rows.size() << " landmark files to " << out_dir.string() << "\n";
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Landmark-geometry face forgery detector", "lmf"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_version_flag("--version", "lmf 0.1.0");

    std::string config_path;
    const auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON file of flat flag-name keys; flags override it");
    };

    TrainOptions train;
    auto* t = app.add_subcommand("train", "Fit reference shape, standardizer and RBF SVM");
    add_config(t);
    t->add_option("--manifest", train.manifest, "Manifest CSV (path,label,group)")->required();
    t->add_option("--out", train.out, "Output directory")->required();
    t->add_option("--seed", train.seed, "Seed for the reference subsample, folds and solver");
    t->add_option("--folds", train.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
    t->add_option("--c-grid", train.c_grid, "Comma-separated C values");
    t->add_option("--gamma-grid", train.gamma_grid, "Comma-separated RBF gamma values");
    t->add_option("--kkt-tolerance", train.kkt_tolerance, "SMO KKT tolerance");
    t->add_option("--max-passes", train.max_passes, "SMO stale sweeps before stopping");
    t->add_option("--threads", train.threads, "Worker threads (0 = all cores)");
    train.train_fraction_opt =
        t->add_option("--train-fraction", train.train_fraction, "Hold out a stratified test split");

    PredictOptions predict;
    auto* p = app.add_subcommand("predict", "Score a manifest with a trained model");
    add_config(p);
    p->add_option("--model", predict.model, "model.json")->required();
    p->add_option("--manifest", predict.manifest, "Manifest CSV")->required();
    p->add_option("--out", predict.out, "Output directory")->required();
    p->add_option("--seed", predict.seed, "Unused; accepted for a uniform interface");
    p->add_option("--threads", predict.threads, "Worker threads (0 = all cores)");

    EvalOptions eval;
    auto* e = app.add_subcommand("eval", "AUROC and ROC curve of a scores CSV");
    add_config(e);
    e->add_option("--scores", eval.scores, "Scores CSV (id,group,label,score)")->required();
    e->add_option("--out", eval.out, "Output directory")->required();
    e->add_option("--seed", eval.seed, "Unused; accepted for a uniform interface");
    e->add_option("--level", eval.level, "frame or video")->check(CLI::IsMember({"frame", "video"}));
    e->add_option("--aggregation", eval.aggregation, "Video aggregation: mean-score or mean-label")
        ->check(CLI::IsMember({"mean-score", "mean-label"}));

    StatsOptions stats;
    auto* s = app.add_subcommand("stats", "Per-coordinate landmark densities by class");
    add_config(s);
    s->add_option("--manifest", stats.manifest, "Manifest CSV")->required();
    s->add_option("--out", stats.out, "Output directory")->required();
    s->add_option("--model", stats.model, "Take the reference shape from this model");
    s->add_option("--seed", stats.seed, "Seed for the reference subsample");
    s->add_option("--bins", stats.bins, "Histogram bins");
    s->add_option("--lo", stats.lo, "Histogram lower edge");
    s->add_option("--hi", stats.hi, "Histogram upper edge");

    SynthOptions synth;
    auto* y = app.add_subcommand("synth", "Generate a synthetic real/fake landmark corpus");
    add_config(y);
    y->add_option("--out", synth.out, "Output directory")->required();
    y->add_option("--seed", synth.config.seed, "Generator seed");
    y->add_option("--n-per-class", synth.config.n_per_class, "Samples per class");
    y->add_option("--shape-noise", synth.config.shape_noise, "Per-coordinate jitter std (unit square)");
    y->add_option("--fake-part", synth.fake_part, "Part shifted in fakes")
        ->check(CLI::IsMember({"jaw", "brows", "nose", "eyes", "mouth"}));
    y->add_option("--shift-mean", synth.config.shift_mean, "Mean part offset (unit square)");
    y->add_option("--shift-std", synth.config.shift_std, "Std of the part offset");
    synth.shift_direction_opt =
        y->add_option("--shift-direction", synth.shift_direction, "Fixed offset direction in degrees");
    y->add_option("--frames-per-group", synth.config.frames_per_group, "Samples per video group (0 = none)");
    y->add_option("--scale-min", synth.config.pose.scale_min, "Minimum pose scale (px)");
    y->add_option("--scale-max", synth.config.pose.scale_max, "Maximum pose scale (px)");
    y->add_option("--rotation-deg", synth.config.pose.rotation_deg, "Maximum absolute rotation");
    y->add_option("--translation-min", synth.config.pose.translation_min, "Minimum translation (px)");
    y->add_option("--translation-max", synth.config.pose.translation_max, "Maximum translation (px)");

    std::vector<std::string> argv = args;
    try {
        if (const auto cfg = find_config_path(args); cfg && !args.empty()) {
            const auto extra = config_arguments(*cfg, args.front());
            argv.insert(argv.begin() + 1, extra.begin(), extra.end());
        }
    } catch (const Error& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitDataError;
    }

    try {
        std::reverse(argv.begin(), argv.end());
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion& ex) {
        out << ex.what() << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitDataError;
    }

    try {
        if (t->parsed()) return cmd_train(train, err);
        if (p->parsed()) return cmd_predict(predict, err);
        if (e->parsed()) return cmd_eval(eval, out, err);
        if (s->parsed()) return cmd_stats(stats, err);
        if (y->parsed()) return cmd_synth(synth, err);
    } catch (const Exit& x) {
        return x.status;
    } catch (const Error& ex) {
        err << "error: " << ex.what() << "\n";
        return exit_code_for(ex.code());
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitTrainingFailure;
    }
    return kExitDataError;
}

} // namespace lmf::cli
