#pragma once

#include "lmf/align.hpp"
#include "lmf/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lmf {

/// Named iBUG landmark groups; together they partition 0..67.
struct PartIndexGroups {
    static std::vector<std::size_t> jaw();    // 0-16
    static std::vector<std::size_t> brows();  // 17-26
    static std::vector<std::size_t> nose();   // 27-35
    static std::vector<std::size_t> eyes();   // 36-47
    static std::vector<std::size_t> mouth();  // 48-67

    static std::vector<std::string_view> names();
    /// Throws Error(InvalidArgument) for an unknown name.
    static std::vector<std::size_t> by_name(std::string_view name);
};

/// Ranges of the random similarity transform placing a unit-square face into
/// pixel coordinates.
struct PoseRanges {
    double scale_min = 80.0;
    double scale_max = 400.0;
    double rotation_deg = 15.0;  // uniform in [-rotation_deg, rotation_deg]
    double translation_min = 0.0;
    double translation_max = 500.0;
};

struct SynthConfig {
    std::uint64_t seed = 0;
    std::size_t n_per_class = 100;
    double shape_noise = 0.01;  // per-coordinate jitter std, unit-square units
    PoseRanges pose;
    std::vector<std::size_t> fake_part = PartIndexGroups::mouth();
    double shift_mean = 0.06;
    double shift_std = 0.02;
    /// Fixed offset direction in degrees (0 = +x); random when absent.
    std::optional<double> shift_direction_deg;
    /// When positive, consecutive blocks of this many samples share a group id.
    std::size_t frames_per_group = 0;

    void validate() const;
};

/// The bundled neutral mean face (data/mean_face.pts).
Shape default_template_points();
ReferenceShape default_template();

/// Per-sample stream seed; independent of how samples are scheduled.
std::uint64_t sample_seed(std::uint64_t seed, Label label, std::size_t index);

/// One face from its sample seed: template + jitter, the part offset when
/// `label` is Fake, then the pose. With a zero offset the Fake and Real
/// outputs for the same seed coincide.
Shape synthesize_face(const Shape& tmpl, const SynthConfig& config, std::uint64_t stream_seed, Label label);

std::vector<LandmarkSet> generate_real(const SynthConfig& config, const ReferenceShape& tmpl);
std::vector<LandmarkSet> generate_fake(const SynthConfig& config, const ReferenceShape& tmpl);

/// Writes real/ and fake/ `.pts` files plus manifest.csv under `out_dir` and
/// returns the manifest rows. Throws Error(IoFailure).
std::vector<ManifestRow> write_synthetic_corpus(const std::filesystem::path& out_dir, const SynthConfig& config,
                                                const ReferenceShape& tmpl);

} // namespace lmf
