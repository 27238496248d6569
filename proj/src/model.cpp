#include "lmf/model.hpp"

#include "lmf/error.hpp"
#include "lmf/text.hpp"

#include <cmath>

namespace lmf {

using nlohmann::json;

namespace {

constexpr double kCoefficientSumTolerance = 1e-6;

json real(double v) { return format_double(v); }

json reals(std::span<const double> values) {
    json out = json::array();
    for (double v : values) out.push_back(real(v));
    return out;
}

[[noreturn]] void corrupt(const std::string& what) {
    throw Error(ErrorCode::CorruptModel, what);
}

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) corrupt(std::string("missing field '") + key + "'");
    return j.at(key);
}

double read_real(const json& j, const char* what) {
    if (!j.is_string()) corrupt(std::string(what) + " must be a decimal string");
    try {
        const double v = parse_double(j.get<std::string>());
        if (!std::isfinite(v)) corrupt(std::string(what) + " is not finite");
        return v;
    } catch (const Error&) {
        corrupt(std::string(what) + " is not a number");
    }
}

std::vector<double> read_reals(const json& j, const char* what) {
    if (!j.is_array()) corrupt(std::string(what) + " must be an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) out.push_back(read_real(v, what));
    return out;
}

template <typename T>
T read_integer(const json& j, const char* what) {
    if (!j.is_number_integer()) corrupt(std::string(what) + " must be an integer");
    return j.get<T>();
}

} // namespace

void SvmModel::check_invariants() const {
    const auto& m = machine;
    if (m.support_vectors.empty()) corrupt("model has no support vectors");
    if (m.support_vectors.size() != m.dual_coefficients.size()) {
        corrupt("support vector and coefficient counts differ");
    }
    for (const auto& sv : m.support_vectors) {
        if (sv.size() != kFeatureDim) corrupt("support vector is not 136-dimensional");
    }
    if (!(m.kernel.gamma > 0.0) || !std::isfinite(m.kernel.gamma)) corrupt("gamma must be positive");
    if (!(c > 0.0) || !(class_weights.real > 0.0) || !(class_weights.fake > 0.0)) {
        corrupt("c and class weights must be positive");
    }
    double sum = 0.0;
    for (double coef : m.dual_coefficients) {
        const double bound = c * class_weights.for_sign(coef > 0.0 ? 1 : -1);
        if (!(std::abs(coef) > 0.0) || std::abs(coef) > bound * (1.0 + 1e-12)) {
            corrupt("dual coefficient " + format_double(coef) + " outside (0, c*w]");
        }
        sum += coef;
    }
    if (std::abs(sum) > kCoefficientSumTolerance) {
        corrupt("dual coefficients sum to " + format_double(sum) + ", expected 0");
    }
    if (standardizer.mean().size() != kFeatureDim) corrupt("standardizer is not 136-dimensional");
}

std::size_t SvmModel::parameter_count() const {
    return machine.support_vectors.size() * (kFeatureDim + 1) + 1;
}

FeatureVector model_features(const SvmModel& model, const Shape& landmarks) {
    return standardize(model.standardizer, flatten(align(landmarks, model.reference, model.alignment_config)));
}

Prediction predict_face(const SvmModel& model, const LandmarkSet& landmarks) {
    FeatureVector f;
    try {
        f = model_features(model, landmarks.points);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DegenerateLandmarks) {
            throw Error(ErrorCode::DegenerateLandmarks, landmarks.id + ": inner landmarks are collinear");
        }
        throw;
    }
    Prediction p;
    p.score = decision(model.machine, f.values);
    p.label = p.score > 0.0 ? Label::Fake : Label::Real;
    return p;
}

json model_to_json(const SvmModel& model) {
    json j;
    j["schema_version"] = kModelSchemaVersion;
    j["gamma"] = real(model.machine.kernel.gamma);
    j["bias"] = real(model.machine.bias);
    j["c"] = real(model.c);

    json svs = json::array();
    for (const auto& sv : model.machine.support_vectors) svs.push_back(reals(sv));
    j["support_vectors"] = std::move(svs);
    j["dual_coefficients"] = reals(model.machine.dual_coefficients);

    j["standardizer"] = {{"mean", reals(model.standardizer.mean())},
                         {"scale", reals(model.standardizer.scale())},
                         {"sample_count", model.standardizer.sample_count()},
                         {"std", "population"}};

    json ref = json::array();
    for (const auto& p : model.reference.points()) ref.push_back(json::array({real(p.x), real(p.y)}));
    j["reference_shape"] = std::move(ref);
    const auto& prov = model.reference.provenance();
    j["reference_provenance"] = {{"method", prov.method},
                                 {"sample_count", prov.sample_count},
                                 {"seed", prov.seed},
                                 {"iterations", prov.iterations}};

    const auto& ac = model.alignment_config;
    j["alignment_config"] = {{"inner_indices", ac.inner_indices},
                             {"gpa_max_iterations", ac.gpa_max_iterations},
                             {"gpa_tolerance", real(ac.gpa_tolerance)},
                             {"reference_margin", real(ac.reference_margin)}};

    j["class_weights"] = {{"real", real(model.class_weights.real)},
                          {"fake", real(model.class_weights.fake)},
                          {"scheme", "n/(2*n_c)"}};
    j["feature_layout"] = "interleaved-xy";
    j["training_metadata"] = model.training_metadata;
    return j;
}

SvmModel model_from_json(const json& j) {
    const auto& version = field(j, "schema_version");
    if (!version.is_number_integer() || version.get<int>() != kModelSchemaVersion) {
        throw Error(ErrorCode::SchemaVersionMismatch,
                    "model schema version " + version.dump() + ", expected " + std::to_string(kModelSchemaVersion));
    }

    KernelMachine machine;
    machine.kernel.gamma = read_real(field(j, "gamma"), "gamma");
    machine.bias = read_real(field(j, "bias"), "bias");
    const auto& svs = field(j, "support_vectors");
    if (!svs.is_array()) corrupt("support_vectors must be an array");
    for (const auto& sv : svs) machine.support_vectors.push_back(read_reals(sv, "support vector"));
    machine.dual_coefficients = read_reals(field(j, "dual_coefficients"), "dual coefficient");

    const auto& sj = field(j, "standardizer");
    std::optional<Standardizer> standardizer;
    try {
        standardizer.emplace(read_reals(field(sj, "mean"), "standardizer mean"),
                             read_reals(field(sj, "scale"), "standardizer scale"),
                             read_integer<std::size_t>(field(sj, "sample_count"), "sample_count"));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptModel) throw;
        corrupt(std::string("invalid standardizer: ") + e.what());
    }

    const auto& rj = field(j, "reference_shape");
    if (!rj.is_array() || rj.size() != kNumLandmarks) corrupt("reference_shape must hold 68 points");
    Shape ref_points{};
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
        if (!rj[i].is_array() || rj[i].size() != 2) corrupt("reference point must be an [x, y] pair");
        ref_points[i] = {read_real(rj[i][0], "reference x"), read_real(rj[i][1], "reference y")};
    }
    ReferenceProvenance prov;
    if (j.contains("reference_provenance")) {
        const auto& pj = j.at("reference_provenance");
        prov.method = pj.value("method", prov.method);
        prov.sample_count = pj.value("sample_count", std::size_t{0});
        prov.seed = pj.value("seed", std::uint64_t{0});
        prov.iterations = pj.value("iterations", 0);
    }
    std::optional<ReferenceShape> reference;
    try {
        reference.emplace(ref_points, prov);
    } catch (const Error& e) {
        corrupt(std::string("invalid reference shape: ") + e.what());
    }

    AlignmentConfig ac;
    const auto& aj = field(j, "alignment_config");
    const auto& idx = field(aj, "inner_indices");
    if (!idx.is_array()) corrupt("inner_indices must be an array");
    ac.inner_indices.clear();
    for (const auto& i : idx) ac.inner_indices.push_back(read_integer<std::size_t>(i, "inner index"));
    ac.gpa_max_iterations = read_integer<int>(field(aj, "gpa_max_iterations"), "gpa_max_iterations");
    ac.gpa_tolerance = read_real(field(aj, "gpa_tolerance"), "gpa_tolerance");
    ac.reference_margin = read_real(field(aj, "reference_margin"), "reference_margin");
    try {
        ac.validate();
    } catch (const Error& e) {
        corrupt(std::string("invalid alignment config: ") + e.what());
    }

    const auto& wj = field(j, "class_weights");
    ClassWeights weights{read_real(field(wj, "real"), "real weight"), read_real(field(wj, "fake"), "fake weight")};

    SvmModel model{std::move(machine),
                   read_real(field(j, "c"), "c"),
                   weights,
                   std::move(*standardizer),
                   std::move(*reference),
                   std::move(ac),
                   j.value("training_metadata", json::object())};
    model.check_invariants();
    return model;
}

std::string serialize_model(const SvmModel& model) {
    return model_to_json(model).dump(1) + "\n";
}

void save_model(const SvmModel& model, const std::filesystem::path& path) {
    model.check_invariants();
    write_file(path.string(), serialize_model(model));
}

SvmModel load_model(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path.string());
    } catch (const Error& e) {
        throw Error(ErrorCode::IoFailure, e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        corrupt(std::string("model is not valid JSON: ") + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const json::exception& e) {
        corrupt(std::string("model has an unexpected layout: ") + e.what());
    }
}

} // namespace lmf
