#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lmf {

inline constexpr std::size_t kNumLandmarks = 68;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// 68 points in iBUG order: jaw 0-16, brows 17-26, nose 27-35, eyes 36-47,
/// mouth 48-67.
using Shape = std::array<Point2, kNumLandmarks>;

enum class Label { Real, Fake, Unlabeled };

std::string_view to_string(Label label);

/// Case-insensitive parse of "real" / "fake"; an empty string is Unlabeled.
/// Throws Error(UnknownLabel) for anything else.
Label parse_label(std::string_view text);

/// +1 for Fake, -1 for Real. Unlabeled throws Error(UnlabeledRecord).
int label_sign(Label label);

struct LandmarkSet {
    std::string id;
    Shape points{};
    Label label = Label::Unlabeled;
    std::optional<std::string> group;
};

/// Throws Error(MalformedFile) unless every coordinate is finite.
void validate(const LandmarkSet& set);

/// Immutable collection of landmark records with unique ids.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<LandmarkSet> records, std::string source);

    const std::vector<LandmarkSet>& records() const { return records_; }
    const std::string& source() const { return source_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const LandmarkSet& operator[](std::size_t i) const { return records_[i]; }

    std::size_t count(Label label) const;

private:
    std::vector<LandmarkSet> records_;
    std::string source_;
};

// -- .pts landmark files ------------------------------------------------------

Shape parse_pts(std::string_view text);
std::string serialize_pts(const Shape& points);

Shape read_pts(const std::filesystem::path& path);
void write_pts(const std::filesystem::path& path, const Shape& points);

// -- manifests ----------------------------------------------------------------

enum class ParseFailurePolicy { Throw, Skip };

struct SkippedRecord {
    std::string id;
    std::string reason;
};

struct ManifestRow {
    std::string path;
    Label label = Label::Unlabeled;
    std::optional<std::string> group;
};

/// Reads a `path,label,group` CSV. Paths are resolved against the manifest's
/// directory; the record id is the path as written in the manifest. With
/// ParseFailurePolicy::Skip, unreadable or malformed landmark files are
/// reported through `skipped` instead of aborting the load.
Dataset load_manifest(const std::filesystem::path& manifest,
                      ParseFailurePolicy policy = ParseFailurePolicy::Throw,
                      std::vector<SkippedRecord>* skipped = nullptr);

std::string format_manifest(const std::vector<ManifestRow>& rows);

// -- feature CSV (raw pixel coordinates) ----------------------------------------

std::string format_landmark_csv(const Dataset& dataset);
Dataset parse_landmark_csv(std::string_view text, std::string source = "csv");

// -- splitting and grouping -----------------------------------------------------

struct TrainTestSplit {
    Dataset train;
    Dataset test;
};

/// Stratified split: each class is shuffled independently with a seeded
/// permutation and its first floor(fraction * N_c) records go to train.
/// Both halves keep the input's record order.
TrainTestSplit split_train_test(const Dataset& dataset, double train_fraction, std::uint64_t seed);

/// Group id -> member record ids in dataset order. Records without a group
/// form singleton groups keyed by their own id.
std::map<std::string, std::vector<std::string>> group_by_video(const Dataset& dataset);

/// The key a record is grouped under.
const std::string& group_key(const LandmarkSet& set);

} // namespace lmf
