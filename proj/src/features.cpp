#include "lmf/features.hpp"

#include "lmf/error.hpp"

#include <cmath>

namespace lmf {

namespace {
constexpr double kMinScale = 1e-12;
}

FeatureVector flatten(const Shape& aligned) {
    FeatureVector f;
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
        f.values[2 * i] = aligned[i].x;
        f.values[2 * i + 1] = aligned[i].y;
    }
    return f;
}

Shape unflatten(const FeatureVector& features) {
    Shape shape{};
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
        shape[i] = {features.values[2 * i], features.values[2 * i + 1]};
    }
    return shape;
}

Standardizer::Standardizer(std::vector<double> mean, std::vector<double> scale, std::size_t sample_count)
    : mean_(std::move(mean)), scale_(std::move(scale)), sample_count_(sample_count) {
    if (mean_.size() != kFeatureDim || scale_.size() != kFeatureDim) {
        throw Error(ErrorCode::DimensionMismatch, "standardizer must have 136 components");
    }
    if (sample_count_ < 2) {
        throw Error(ErrorCode::InvalidArgument, "standardizer fitted from fewer than 2 samples");
    }
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
        if (!std::isfinite(mean_[j]) || !std::isfinite(scale_[j]) || !(scale_[j] > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "standardizer component " + std::to_string(j) + " is invalid");
        }
    }
}

Standardizer fit_standardizer(std::span<const FeatureVector> features) {
    if (features.size() < 2) {
        throw Error(ErrorCode::TooFewSamples, "standardizer needs at least 2 samples");
    }
    const double n = static_cast<double>(features.size());
    std::vector<double> mean(kFeatureDim, 0.0);
    std::vector<double> scale(kFeatureDim, 0.0);
    // Welford update per component.
    std::size_t k = 0;
    for (const auto& f : features) {
        ++k;
        for (std::size_t j = 0; j < kFeatureDim; ++j) {
            const double delta = f.values[j] - mean[j];
            mean[j] += delta / static_cast<double>(k);
            scale[j] += delta * (f.values[j] - mean[j]);
        }
    }
    for (auto& s : scale) {
        s = std::sqrt(s / n);
        if (!(s >= kMinScale)) s = 1.0;
    }
    return Standardizer(std::move(mean), std::move(scale), features.size());
}

FeatureVector standardize(const Standardizer& s, const FeatureVector& f) {
    if (f.standardized) {
        throw Error(ErrorCode::AlreadyStandardized, "feature vector is already standardized");
    }
    FeatureVector out;
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
        out.values[j] = (f.values[j] - s.mean()[j]) / s.scale()[j];
    }
    out.standardized = true;
    return out;
}

FeatureVector unstandardize(const Standardizer& s, const FeatureVector& f) {
    FeatureVector out;
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
        out.values[j] = f.values[j] * s.scale()[j] + s.mean()[j];
    }
    out.standardized = false;
    return out;
}

} // namespace lmf
