#pragma once

#include "lmf/align.hpp"
#include "lmf/features.hpp"
#include "lmf/svm.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace lmf {

inline constexpr int kModelSchemaVersion = 1;

/// Everything needed to score a raw landmark set end to end.
struct SvmModel {
    KernelMachine machine;
    double c = 1.0;
    ClassWeights class_weights;
    Standardizer standardizer;
    ReferenceShape reference;
    AlignmentConfig alignment_config;
    nlohmann::json training_metadata = nlohmann::json::object();

    /// Throws Error(CorruptModel) when a structural invariant does not hold:
    /// 136-dimensional support vectors, 0 < |coef_i| <= c * w_{y_i}, and
    /// coefficients summing to zero within 1e-6.
    void check_invariants() const;

    /// Support-vector entries plus coefficients plus bias.
    std::size_t parameter_count() const;
};

struct Prediction {
    Label label = Label::Unlabeled;
    double score = 0.0;
};

/// align -> flatten -> standardize -> decision. Fake iff score > 0.
/// Propagates Error(DegenerateLandmarks).
Prediction predict_face(const SvmModel& model, const LandmarkSet& landmarks);

/// The standardized feature vector predict_face scores.
FeatureVector model_features(const SvmModel& model, const Shape& landmarks);

nlohmann::json model_to_json(const SvmModel& model);
SvmModel model_from_json(const nlohmann::json& j);

/// Reals are written as shortest round-trip decimal strings, so a loaded model
/// reproduces decisions bit for bit. Throws Error(IoFailure).
void save_model(const SvmModel& model, const std::filesystem::path& path);
std::string serialize_model(const SvmModel& model);

/// Throws Error(IoFailure), Error(SchemaVersionMismatch) or Error(CorruptModel).
SvmModel load_model(const std::filesystem::path& path);

} // namespace lmf
