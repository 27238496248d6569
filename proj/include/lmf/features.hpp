#pragma once

#include "lmf/dataset.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace lmf {

inline constexpr std::size_t kFeatureDim = 2 * kNumLandmarks;

/// Interleaved [x0, y0, x1, y1, ...] in landmark order.
struct FeatureVector {
    std::array<double, kFeatureDim> values{};
    bool standardized = false;
};

FeatureVector flatten(const Shape& aligned);
Shape unflatten(const FeatureVector& features);

/// Per-component z-scoring fitted on training features. Uses the population
/// standard deviation; components whose deviation falls below 1e-12 get a
/// scale of 1.
class Standardizer {
public:
    Standardizer() = default;
    /// Throws Error(InvalidArgument) for non-positive scales or fewer than 2 samples.
    Standardizer(std::vector<double> mean, std::vector<double> scale, std::size_t sample_count);

    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& scale() const { return scale_; }
    std::size_t sample_count() const { return sample_count_; }

private:
    std::vector<double> mean_;
    std::vector<double> scale_;
    std::size_t sample_count_ = 0;
};

/// Throws Error(TooFewSamples) for n < 2.
Standardizer fit_standardizer(std::span<const FeatureVector> features);

/// Throws Error(AlreadyStandardized) if `f` is already standardized.
FeatureVector standardize(const Standardizer& s, const FeatureVector& f);
FeatureVector unstandardize(const Standardizer& s, const FeatureVector& f);

} // namespace lmf
