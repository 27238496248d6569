#include "lmf/align.hpp"

#include "lmf/error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lmf {

namespace {

constexpr std::size_t kMaxReferenceSamples = 5000;

// det(cov) relative to trace(cov)^2; 0 for collinear points, 1/4 for an
// isotropic cloud.
constexpr double kCollinearityRatio = 1e-12;

Eigen::Vector2d vec(const Point2& p) { return {p.x, p.y}; }

struct Centered {
    Eigen::Vector2d src_mean = Eigen::Vector2d::Zero();
    Eigen::Vector2d dst_mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d src_cov = Eigen::Matrix2d::Zero();   // sum s s^T
    Eigen::Matrix2d cross = Eigen::Matrix2d::Zero();     // sum d s^T
};

Centered center(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.size() != dst.size()) {
        throw Error(ErrorCode::DimensionMismatch, "source and destination point counts differ");
    }
    Centered c;
    const double n = static_cast<double>(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        c.src_mean += vec(src[i]);
        c.dst_mean += vec(dst[i]);
    }
    c.src_mean /= n;
    c.dst_mean /= n;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Eigen::Vector2d s = vec(src[i]) - c.src_mean;
        const Eigen::Vector2d d = vec(dst[i]) - c.dst_mean;
        c.src_cov += s * s.transpose();
        c.cross += d * s.transpose();
    }
    return c;
}

std::vector<Point2> gather(const Shape& shape, std::span<const std::size_t> indices) {
    std::vector<Point2> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(shape[i]);
    return out;
}

bool spans_plane(std::span<const Point2> points) {
    if (points.size() < 3) return false;
    const auto c = center(points, points);
    const double tr = c.src_cov.trace();
    return tr > 0.0 && c.src_cov.determinant() > kCollinearityRatio * tr * tr;
}

// Centre the inner points on the origin with unit RMS radius.
Shape normalize(const Shape& shape, std::span<const std::size_t> inner) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (auto i : inner) mean += vec(shape[i]);
    mean /= static_cast<double>(inner.size());
    double ss = 0.0;
    for (auto i : inner) ss += (vec(shape[i]) - mean).squaredNorm();
    const double scale = std::sqrt(ss / static_cast<double>(inner.size()));
    if (!(scale > 0.0)) {
        throw Error(ErrorCode::DegenerateLandmarks, "inner landmarks coincide");
    }
    Shape out{};
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
        const Eigen::Vector2d p = (vec(shape[i]) - mean) / scale;
        out[i] = {p.x(), p.y()};
    }
    return out;
}

AffineTransform similarity_onto(const Shape& from, const Shape& to, std::span<const std::size_t> inner) {
    try {
        return estimate_similarity(gather(from, inner), gather(to, inner));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DegenerateSource) {
            throw Error(ErrorCode::DegenerateLandmarks, "inner landmarks coincide");
        }
        throw;
    }
}

// Rotate about the origin so the line from the image-left eye centroid
// (36-41) to the image-right one (42-47) points along +x.
Shape upright(const Shape& shape) {
    Eigen::Vector2d left = Eigen::Vector2d::Zero();
    Eigen::Vector2d right = Eigen::Vector2d::Zero();
    for (std::size_t i = 36; i < 42; ++i) left += vec(shape[i]);
    for (std::size_t i = 42; i < 48; ++i) right += vec(shape[i]);
    const Eigen::Vector2d eye_line = right - left;
    if (!(eye_line.norm() > 0.0)) return shape;
    const double angle = -std::atan2(eye_line.y(), eye_line.x());
    AffineTransform t;
    t.linear << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return apply_affine(t, shape);
}

} // namespace

// -- AffineTransform ------------------------------------------------------------

Point2 AffineTransform::operator()(const Point2& p) const {
    const Eigen::Vector2d q = linear * vec(p) + translation;
    return {q.x(), q.y()};
}

AffineTransform AffineTransform::compose(const AffineTransform& inner) const {
    return {linear * inner.linear, linear * inner.translation + translation};
}

bool AffineTransform::is_finite() const {
    return linear.allFinite() && translation.allFinite();
}

// -- AlignmentConfig ------------------------------------------------------------

std::vector<std::size_t> AlignmentConfig::default_inner_indices() {
    std::vector<std::size_t> idx(kNumLandmarks - 17);
    std::iota(idx.begin(), idx.end(), std::size_t{17});
    return idx;
}

void AlignmentConfig::validate() const {
    if (inner_indices.size() < 3) {
        throw Error(ErrorCode::InvalidArgument, "alignment needs at least three inner indices");
    }
    for (auto i : inner_indices) {
        if (i >= kNumLandmarks) {
            throw Error(ErrorCode::InvalidArgument, "inner index " + std::to_string(i) + " out of range");
        }
    }
    if (gpa_max_iterations < 1 || !(gpa_tolerance >= 0.0) || !(reference_margin >= 0.0 && reference_margin < 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "invalid reference shape parameters");
    }
}

// -- ReferenceShape ---------------------------------------------------------------

ReferenceShape::ReferenceShape(const Shape& points, ReferenceProvenance provenance)
    : points_(points), provenance_(std::move(provenance)) {
    for (const auto& p : points_) {
        if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "reference shape leaves the unit square");
        }
    }
    const auto inner = AlignmentConfig::default_inner_indices();
    if (!spans_plane(gather(points_, inner))) {
        throw Error(ErrorCode::InvalidArgument, "reference inner points are collinear");
    }
}

// -- estimation -----------------------------------------------------------------------

AffineTransform estimate_affine(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.size() < 3) {
        throw Error(ErrorCode::DegenerateSource, "affine fit needs at least three points");
    }
    const auto c = center(src, dst);
    const double tr = c.src_cov.trace();
    const double det = c.src_cov.determinant();
    if (!(tr > 0.0) || !(det > kCollinearityRatio * tr * tr)) {
        throw Error(ErrorCode::DegenerateSource, "source points are collinear");
    }
    // Normal equations split per output coordinate once the means are removed:
    // linear * src_cov = cross.
    AffineTransform t;
    t.linear = c.cross * c.src_cov.inverse();
    t.translation = c.dst_mean - t.linear * c.src_mean;
    return t;
}

AffineTransform estimate_similarity(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.empty()) {
        throw Error(ErrorCode::DegenerateSource, "similarity fit needs points");
    }
    const auto c = center(src, dst);
    const double denom = c.src_cov.trace();
    if (!(denom > 0.0)) {
        throw Error(ErrorCode::DegenerateSource, "source points coincide");
    }
    const double a = (c.cross(0, 0) + c.cross(1, 1)) / denom;
    const double b = (c.cross(1, 0) - c.cross(0, 1)) / denom;
    AffineTransform t;
    t.linear << a, -b, b, a;
    t.translation = c.dst_mean - t.linear * c.src_mean;
    return t;
}

std::vector<Point2> apply_affine(const AffineTransform& t, std::span<const Point2> points) {
    std::vector<Point2> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(t(p));
    return out;
}

Shape apply_affine(const AffineTransform& t, const Shape& points) {
    Shape out{};
    std::transform(points.begin(), points.end(), out.begin(), [&t](const Point2& p) { return t(p); });
    return out;
}

// -- per-face alignment -----------------------------------------------------------------

AffineTransform alignment_transform(const Shape& landmarks, const ReferenceShape& reference,
                                    const AlignmentConfig& config) {
    try {
        return estimate_affine(gather(landmarks, config.inner_indices),
                               gather(reference.points(), config.inner_indices));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DegenerateSource) {
            throw Error(ErrorCode::DegenerateLandmarks, "inner landmarks are collinear");
        }
        throw;
    }
}

Shape align(const Shape& landmarks, const ReferenceShape& reference, const AlignmentConfig& config) {
    return apply_affine(alignment_transform(landmarks, reference, config), landmarks);
}

Shape align(const LandmarkSet& landmarks, const ReferenceShape& reference, const AlignmentConfig& config) {
    try {
        return align(landmarks.points, reference, config);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DegenerateLandmarks) {
            throw Error(ErrorCode::DegenerateLandmarks, landmarks.id + ": inner landmarks are collinear");
        }
        throw;
    }
}

// -- reference shape ---------------------------------------------------------------------

Shape rescale_to_unit_box(const Shape& shape, double margin) {
    double x_lo = shape[0].x, x_hi = shape[0].x, y_lo = shape[0].y, y_hi = shape[0].y;
    for (const auto& p : shape) {
        x_lo = std::min(x_lo, p.x);
        x_hi = std::max(x_hi, p.x);
        y_lo = std::min(y_lo, p.y);
        y_hi = std::max(y_hi, p.y);
    }
    const double width = x_hi - x_lo;
    const double height = y_hi - y_lo;
    const double span = 1.0 - 2.0 * margin;
    const double longer = std::max(width, height);
    if (!(longer > 0.0)) {
        throw Error(ErrorCode::DegenerateLandmarks, "shape has zero extent");
    }
    const double s = span / longer;
    const double x0 = margin + 0.5 * (span - width * s);
    const double y0 = margin + 0.5 * (span - height * s);
    Shape out{};
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
        out[i] = {std::clamp(x0 + (shape[i].x - x_lo) * s, 0.0, 1.0),
                  std::clamp(y0 + (shape[i].y - y_lo) * s, 0.0, 1.0)};
    }
    return out;
}

ReferenceShape compute_reference_shape(std::span<const Shape> input, const AlignmentConfig& config,
                                       std::uint64_t seed) {
    config.validate();
    if (input.empty()) {
        throw Error(ErrorCode::EmptyInput, "reference shape needs at least one training face");
    }

    std::vector<std::size_t> chosen(input.size());
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
    if (chosen.size() > kMaxReferenceSamples) {
        std::mt19937_64 rng(seed);
        std::shuffle(chosen.begin(), chosen.end(), rng);
        chosen.resize(kMaxReferenceSamples);
        std::sort(chosen.begin(), chosen.end());
    }
    const auto& inner = config.inner_indices;
    for (auto i : chosen) {
        if (!spans_plane(gather(input[i], inner))) {
            throw Error(ErrorCode::DegenerateLandmarks, "training face " + std::to_string(i) + " is degenerate");
        }
    }

    Shape reference = normalize(input[chosen.front()], inner);
    int iterations = 0;
    for (int iter = 0; iter < config.gpa_max_iterations; ++iter) {
        ++iterations;
        std::array<Eigen::Vector2d, kNumLandmarks> sum;
        sum.fill(Eigen::Vector2d::Zero());
        for (auto i : chosen) {
            const auto t = similarity_onto(input[i], reference, inner);
            for (std::size_t k = 0; k < kNumLandmarks; ++k) sum[k] += vec(t(input[i][k]));
        }
        Shape mean{};
        for (std::size_t k = 0; k < kNumLandmarks; ++k) {
            const Eigen::Vector2d m = sum[k] / static_cast<double>(chosen.size());
            mean[k] = {m.x(), m.y()};
        }
        // Pin the mean's orientation to the current reference so it cannot drift.
        const Shape next = normalize(apply_affine(similarity_onto(mean, reference, inner), mean), inner);

        double movement = 0.0;
        for (std::size_t k = 0; k < kNumLandmarks; ++k) {
            movement += (vec(next[k]) - vec(reference[k])).squaredNorm();
        }
        movement = std::sqrt(movement / static_cast<double>(kNumLandmarks));
        reference = next;
        if (movement < config.gpa_tolerance) break;
    }

    reference = upright(reference);

    ReferenceProvenance provenance;
    provenance.sample_count = chosen.size();
    provenance.seed = seed;
    provenance.iterations = iterations;
    return ReferenceShape(rescale_to_unit_box(reference, config.reference_margin), provenance);
}

ReferenceShape compute_reference_shape(std::span<const LandmarkSet> training_reals, const AlignmentConfig& config,
                                       std::uint64_t seed) {
    std::vector<Shape> shapes;
    shapes.reserve(training_reals.size());
    for (const auto& r : training_reals) shapes.push_back(r.points);
    return compute_reference_shape(std::span<const Shape>(shapes), config, seed);
}

double residual(const Shape& aligned, const ReferenceShape& reference, std::span<const std::size_t> indices) {
    if (indices.empty()) {
        throw Error(ErrorCode::EmptyIndexSet, "residual needs at least one index");
    }
    double ss = 0.0;
    for (auto i : indices) {
        const double dx = aligned[i].x - reference.points()[i].x;
        const double dy = aligned[i].y - reference.points()[i].y;
        ss += dx * dx + dy * dy;
    }
    return std::sqrt(ss / static_cast<double>(indices.size()));
}

} // namespace lmf
