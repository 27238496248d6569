#include "lmf/error.hpp"
#include "lmf/model.hpp"

#include "oracles.hpp"
#include "pipeline.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>

namespace lmf {
namespace {

const testing::TrainedModel& trained() {
    static const testing::TrainedModel t =
        testing::train_fixed(testing::synth_records(testing::small_synth(0, 60)), 1.0, 1.0 / 136.0);
    return t;
}

ErrorCode load_error(const std::filesystem::path& path) {
    try {
        load_model(path);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "load_model did not throw";
    return ErrorCode::InvalidArgument;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

TEST(SvmModel, TrainedModelSatisfiesInvariants) {
    const auto& m = trained().model;
    EXPECT_NO_THROW(m.check_invariants());
    EXPECT_GT(m.machine.support_vectors.size(), 0u);
    EXPECT_EQ(m.parameter_count(), m.machine.support_vectors.size() * 137 + 1);
}

TEST(SvmModel, InvariantViolationsDetected) {
    auto m = trained().model;
    m.machine.dual_coefficients[0] += 0.5;
    EXPECT_THROW(m.check_invariants(), Error);

    auto wide = trained().model;
    wide.machine.dual_coefficients[0] = 1e6;
    EXPECT_THROW(wide.check_invariants(), Error);

    auto shortv = trained().model;
    shortv.machine.support_vectors[0].pop_back();
    EXPECT_THROW(shortv.check_invariants(), Error);
}

TEST(SvmModel, SaveLoadReproducesDecisionsBitwise) {
    const auto& m = trained().model;
    testing::TempDir dir;
    save_model(m, dir / "model.json");
    const auto loaded = load_model(dir / "model.json");
    EXPECT_EQ(loaded.machine.dual_coefficients, m.machine.dual_coefficients);
    EXPECT_EQ(loaded.machine.support_vectors, m.machine.support_vectors);
    EXPECT_EQ(loaded.machine.bias, m.machine.bias);
    EXPECT_EQ(loaded.standardizer.mean(), m.standardizer.mean());
    EXPECT_EQ(loaded.standardizer.scale(), m.standardizer.scale());
    EXPECT_EQ(serialize_model(loaded), serialize_model(m));

    const auto records = testing::synth_records(testing::small_synth(9, 50));
    ASSERT_EQ(records.size(), 100u);
    for (const auto& r : records) {
        EXPECT_EQ(predict_face(loaded, r).score, predict_face(m, r).score) << r.id;
    }
}

TEST(SvmModel, SerializationIsStable) {
    const auto& m = trained().model;
    const auto text = serialize_model(m);
    EXPECT_EQ(serialize_model(m), text);
    const auto j = nlohmann::json::parse(text);
    EXPECT_EQ(j.at("schema_version"), kModelSchemaVersion);
    EXPECT_EQ(j.at("feature_layout"), "interleaved-xy");
    EXPECT_EQ(j.at("reference_shape").size(), 68u);
}

TEST(SvmModel, LoadErrors) {
    testing::TempDir dir;
    EXPECT_EQ(load_error(dir / "absent.json"), ErrorCode::IoFailure);

    write_text(dir / "garbage.json", "{ not json");
    EXPECT_EQ(load_error(dir / "garbage.json"), ErrorCode::CorruptModel);

    auto j = model_to_json(trained().model);
    j["schema_version"] = 2;
    write_text(dir / "future.json", j.dump());
    EXPECT_EQ(load_error(dir / "future.json"), ErrorCode::SchemaVersionMismatch);

    auto tampered = model_to_json(trained().model);
    auto coef = tampered["dual_coefficients"][0].get<std::string>();
    tampered["dual_coefficients"][0] = std::to_string(std::stod(coef) * 0.5);
    write_text(dir / "tampered.json", tampered.dump());
    EXPECT_EQ(load_error(dir / "tampered.json"), ErrorCode::CorruptModel);

    auto missing = model_to_json(trained().model);
    missing.erase("bias");
    write_text(dir / "missing.json", missing.dump());
    EXPECT_EQ(load_error(dir / "missing.json"), ErrorCode::CorruptModel);

    auto short_ref = model_to_json(trained().model);
    short_ref["reference_shape"].erase(0);
    write_text(dir / "short.json", short_ref.dump());
    EXPECT_EQ(load_error(dir / "short.json"), ErrorCode::CorruptModel);
}

TEST(PredictFace, MatchesTrainingDecision) {
    const auto& t = trained();
    for (std::size_t i = 0; i < t.records.size(); i += 7) {
        const double expected = decision(t.model.machine, t.features[i]);
        const auto p = predict_face(t.model, t.records[i]);
        EXPECT_NEAR(p.score, expected, 1e-9);
        EXPECT_EQ(p.label, p.score > 0.0 ? Label::Fake : Label::Real);
    }
}

TEST(PredictFace, InvariantUnderAffineCopy) {
    const auto& t = trained();
    const double th = 30.0 * std::numbers::pi / 180.0;
    AffineTransform a;
    a.linear << 3.2 * std::cos(th), -3.2 * std::sin(th), 3.2 * std::sin(th), 3.2 * std::cos(th);
    a.translation << 50.0, 80.0;
    for (std::size_t i = 0; i < t.records.size(); i += 11) {
        auto moved = t.records[i];
        moved.points = testing::transform(moved.points, a);
        EXPECT_NEAR(predict_face(t.model, moved).score, predict_face(t.model, t.records[i]).score, 1e-6);
    }
}

TEST(PredictFace, HeldOutMouthShiftScoresFake) {
    auto config = testing::small_synth(1, 20, 0.08);
    config.shift_std = 0.0;
    const auto fakes = generate_fake(config, default_template());
    EXPECT_GT(predict_face(trained().model, fakes[0]).score, 0.0);
    std::size_t positive = 0;
    for (const auto& f : fakes) positive += predict_face(trained().model, f).score > 0.0 ? 1 : 0;
    EXPECT_GE(positive, 18u);
}

TEST(PredictFace, CollinearInputRejected) {
    LandmarkSet bad;
    bad.id = "flat";
    for (std::size_t i = 0; i < kNumLandmarks; ++i) bad.points[i] = {static_cast<double>(i), 2.0 * i};
    try {
        predict_face(trained().model, bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateLandmarks);
        EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
    }
}

} // namespace
} // namespace lmf
