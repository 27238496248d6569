#include "lmf/synth.hpp"

#include "lmf/error.hpp"
#include "lmf/text.hpp"

#include "mean_face_pts.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>

namespace lmf {

namespace fs = std::filesystem;

namespace {

std::vector<std::size_t> range(std::size_t first, std::size_t last) {
    std::vector<std::size_t> out(last - first + 1);
    std::iota(out.begin(), out.end(), first);
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string sample_name(Label label, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%05zu.pts", index);
    return std::string(to_string(label)) + buf;
}

std::vector<LandmarkSet> generate(const SynthConfig& config, const ReferenceShape& tmpl, Label label) {
    config.validate();
    std::vector<LandmarkSet> out;
    out.reserve(config.n_per_class);
    const std::string dir(to_string(label));
    for (std::size_t i = 0; i < config.n_per_class; ++i) {
        LandmarkSet s;
        s.id = dir + "/" + sample_name(label, i);
        s.label = label;
        s.points = synthesize_face(tmpl.points(), config, sample_seed(config.seed, label, i), label);
        if (config.frames_per_group > 0) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "_v%04zu", i / config.frames_per_group);
            s.group = dir + buf;
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace

std::vector<std::size_t> PartIndexGroups::jaw() { return range(0, 16); }
std::vector<std::size_t> PartIndexGroups::brows() { return range(17, 26); }
std::vector<std::size_t> PartIndexGroups::nose() { return range(27, 35); }
std::vector<std::size_t> PartIndexGroups::eyes() { return range(36, 47); }
std::vector<std::size_t> PartIndexGroups::mouth() { return range(48, 67); }

std::vector<std::string_view> PartIndexGroups::names() {
    return {"jaw", "brows", "nose", "eyes", "mouth"};
}

std::vector<std::size_t> PartIndexGroups::by_name(std::string_view name) {
    if (name == "jaw") return jaw();
    if (name == "brows") return brows();
    if (name == "nose") return nose();
    if (name == "eyes") return eyes();
    if (name == "mouth") return mouth();
    throw Error(ErrorCode::InvalidArgument, "unknown face part '" + std::string(name) + "'");
}

void SynthConfig::validate() const {
    if (n_per_class < 1) throw Error(ErrorCode::InvalidArgument, "n_per_class must be at least 1");
    if (!(shape_noise >= 0.0)) throw Error(ErrorCode::InvalidArgument, "shape_noise must be non-negative");
    if (fake_part.empty()) throw Error(ErrorCode::InvalidArgument, "fake_part must not be empty");
    for (auto i : fake_part) {
        if (i >= kNumLandmarks) throw Error(ErrorCode::InvalidArgument, "fake_part index out of range");
    }
    if (!(shift_std >= 0.0) || !std::isfinite(shift_mean)) {
        throw Error(ErrorCode::InvalidArgument, "invalid shift distribution");
    }
    if (!(pose.scale_min > 0.0) || pose.scale_max < pose.scale_min || pose.rotation_deg < 0.0 ||
        pose.translation_max < pose.translation_min) {
        throw Error(ErrorCode::InvalidArgument, "invalid pose ranges");
    }
}

Shape default_template_points() {
    return parse_pts(kMeanFacePts);
}

ReferenceShape default_template() {
    ReferenceProvenance p;
    p.method = "bundled-mean-face";
    return ReferenceShape(default_template_points(), p);
}

std::uint64_t sample_seed(std::uint64_t seed, Label label, std::size_t index) {
    const std::uint64_t tag = label == Label::Fake ? 0x66616b65ULL : 0x7265616cULL;
    return splitmix64(splitmix64(seed) ^ splitmix64(tag + (static_cast<std::uint64_t>(index) << 32)));
}

Shape synthesize_face(const Shape& tmpl, const SynthConfig& config, std::uint64_t stream_seed, Label label) {
    std::mt19937_64 rng(stream_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    Shape face = tmpl;
    if (config.shape_noise > 0.0) {
        std::normal_distribution<double> jitter(0.0, config.shape_noise);
        for (auto& p : face) {
            p.x += jitter(rng);
            p.y += jitter(rng);
        }
    }

    // Draw order: jitter, pose, part offset.
    const double scale = uniform(config.pose.scale_min, config.pose.scale_max);
    const double angle = uniform(-config.pose.rotation_deg, config.pose.rotation_deg) * std::numbers::pi / 180.0;
    const double tx = uniform(config.pose.translation_min, config.pose.translation_max);
    const double ty = uniform(config.pose.translation_min, config.pose.translation_max);

    if (label == Label::Fake) {
        double magnitude = config.shift_mean;
        if (config.shift_std > 0.0) {
            magnitude = std::normal_distribution<double>(config.shift_mean, config.shift_std)(rng);
        }
        magnitude = std::max(0.0, magnitude);
        const double direction = config.shift_direction_deg
                                     ? *config.shift_direction_deg * std::numbers::pi / 180.0
                                     : uniform(0.0, 2.0 * std::numbers::pi);
        const double dx = magnitude * std::cos(direction);
        const double dy = magnitude * std::sin(direction);
        for (auto i : config.fake_part) {
            face[i].x += dx;
            face[i].y += dy;
        }
    }

    const double cs = scale * std::cos(angle);
    const double sn = scale * std::sin(angle);
    for (auto& p : face) {
        p = {cs * p.x - sn * p.y + tx, sn * p.x + cs * p.y + ty};
    }
    return face;
}

std::vector<LandmarkSet> generate_real(const SynthConfig& config, const ReferenceShape& tmpl) {
    return generate(config, tmpl, Label::Real);
}

std::vector<LandmarkSet> generate_fake(const SynthConfig& config, const ReferenceShape& tmpl) {
    return generate(config, tmpl, Label::Fake);
}

std::vector<ManifestRow> write_synthetic_corpus(const fs::path& out_dir, const SynthConfig& config,
                                                const ReferenceShape& tmpl) {
    config.validate();
    std::error_code ec;
    for (const char* sub : {"real", "fake"}) {
        fs::create_directories(out_dir / sub, ec);
        if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + (out_dir / sub).string() + ": " + ec.message());
    }
    std::vector<ManifestRow> rows;
    for (const auto& batch : {generate_real(config, tmpl), generate_fake(config, tmpl)}) {
        for (const auto& s : batch) {
            write_pts(out_dir / s.id, s.points);
            rows.push_back({s.id, s.label, s.group});
        }
    }
    write_file((out_dir / "manifest.csv").string(), format_manifest(rows));
    return rows;
}

} // namespace lmf
