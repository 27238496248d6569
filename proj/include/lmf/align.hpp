#pragma once

#include "lmf/dataset.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lmf {

/// x -> linear * x + translation
struct AffineTransform {
    Eigen::Matrix2d linear = Eigen::Matrix2d::Identity();
    Eigen::Vector2d translation = Eigen::Vector2d::Zero();

    static AffineTransform identity() { return {}; }

    Point2 operator()(const Point2& p) const;

    /// (this * inner)(p) == (*this)(inner(p))
    AffineTransform compose(const AffineTransform& inner) const;

    bool is_finite() const;
};

struct AlignmentConfig {
    std::vector<std::size_t> inner_indices = default_inner_indices();
    int gpa_max_iterations = 10;
    double gpa_tolerance = 1e-8;
    double reference_margin = 0.05;

    /// iBUG indices 17-67, i.e. everything except the jaw contour.
    static std::vector<std::size_t> default_inner_indices();

    /// Throws Error(InvalidArgument) on out-of-range or too few indices.
    void validate() const;
};

struct ReferenceProvenance {
    std::string method = "similarity-gpa";
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
    int iterations = 0;
};

/// The standard configuration every face is warped onto. Coordinates lie in
/// the unit square and the inner points span the plane.
class ReferenceShape {
public:
    /// Throws Error(InvalidArgument) when the invariants do not hold.
    explicit ReferenceShape(const Shape& points, ReferenceProvenance provenance = {});

    const Shape& points() const { return points_; }
    const ReferenceProvenance& provenance() const { return provenance_; }

private:
    Shape points_;
    ReferenceProvenance provenance_;
};

/// Least-squares affine map taking src onto dst over all six parameters.
/// Throws Error(DegenerateSource) for fewer than three points or when the
/// source points are (numerically) collinear.
AffineTransform estimate_affine(std::span<const Point2> src, std::span<const Point2> dst);

/// Least-squares similarity (scale, rotation, translation; no reflection).
/// Throws Error(DegenerateSource) when the source points coincide.
AffineTransform estimate_similarity(std::span<const Point2> src, std::span<const Point2> dst);

std::vector<Point2> apply_affine(const AffineTransform& t, std::span<const Point2> points);
Shape apply_affine(const AffineTransform& t, const Shape& points);

/// Transform estimated from the inner landmarks onto the reference's inner
/// landmarks. Throws Error(DegenerateLandmarks) if the inner points are
/// collinear.
AffineTransform alignment_transform(const Shape& landmarks, const ReferenceShape& reference,
                                    const AlignmentConfig& config);

/// Warps all 68 points with alignment_transform. No clipping to the unit square.
Shape align(const Shape& landmarks, const ReferenceShape& reference, const AlignmentConfig& config);
Shape align(const LandmarkSet& landmarks, const ReferenceShape& reference, const AlignmentConfig& config);

/// Similarity generalized Procrustes analysis over the given shapes. The mean
/// is turned upright (eye centroids level) and then min-max rescaled, aspect
/// preserved, into [margin, 1 - margin]^2.
/// More than 5000 inputs are subsampled with `seed`.
ReferenceShape compute_reference_shape(std::span<const LandmarkSet> training_reals, const AlignmentConfig& config,
                                       std::uint64_t seed);
ReferenceShape compute_reference_shape(std::span<const Shape> shapes, const AlignmentConfig& config,
                                       std::uint64_t seed);

/// Bounding box of all 68 points mapped into [margin, 1 - margin]^2, longer
/// axis filling the range and the shorter one centred.
Shape rescale_to_unit_box(const Shape& shape, double margin);

/// RMS point distance over `indices`. Throws Error(EmptyIndexSet).
double residual(const Shape& aligned, const ReferenceShape& reference, std::span<const std::size_t> indices);

} // namespace lmf
