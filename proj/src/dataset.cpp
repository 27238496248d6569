#include "lmf/dataset.hpp"

#include "lmf/error.hpp"
#include "lmf/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <set>

namespace lmf {

namespace fs = std::filesystem;

std::string_view to_string(Label label) {
    switch (label) {
    case Label::Real: return "real";
    case Label::Fake: return "fake";
    case Label::Unlabeled: return "";
    }
    return "";
}

Label parse_label(std::string_view text) {
    text = trim(text);
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "real") return Label::Real;
    if (lower == "fake") return Label::Fake;
    if (lower.empty()) return Label::Unlabeled;
    throw Error(ErrorCode::UnknownLabel, "label '" + std::string(text) + "' is not real/fake");
}

int label_sign(Label label) {
    switch (label) {
    case Label::Real: return -1;
    case Label::Fake: return +1;
    case Label::Unlabeled: break;
    }
    throw Error(ErrorCode::UnlabeledRecord, "record has no real/fake label");
}

void validate(const LandmarkSet& set) {
    for (const auto& p : set.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw Error(ErrorCode::MalformedFile, "non-finite coordinate in " + set.id);
        }
    }
}

Dataset::Dataset(std::vector<LandmarkSet> records, std::string source)
    : records_(std::move(records)), source_(std::move(source)) {
    std::set<std::string_view> seen;
    for (const auto& r : records_) {
        validate(r);
        if (!seen.insert(r.id).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate record id '" + r.id + "'");
        }
    }
}

std::size_t Dataset::count(Label label) const {
    return static_cast<std::size_t>(std::count_if(
        records_.begin(), records_.end(), [label](const LandmarkSet& r) { return r.label == label; }));
}

// -- .pts ---------------------------------------------------------------------

Shape parse_pts(std::string_view text) {
    std::optional<long> declared;
    bool open = false;
    bool closed = false;
    std::vector<Point2> points;

    for (auto raw : split_lines(text)) {
        const auto line = trim(raw);
        if (line.empty()) continue;
        if (closed) {
            throw Error(ErrorCode::MalformedFile, "content after closing brace");
        }
        if (!open) {
            if (line == "{") {
                if (!declared) throw Error(ErrorCode::MalformedFile, "missing n_points header");
                open = true;
                continue;
            }
            const auto colon = line.find(':');
            if (colon == std::string_view::npos) {
                throw Error(ErrorCode::MalformedFile, "unexpected header line '" + std::string(line) + "'");
            }
            const auto key = trim(line.substr(0, colon));
            const auto value = trim(line.substr(colon + 1));
            if (key == "n_points") {
                const double n = parse_double(value);
                if (n != std::floor(n) || n < 0) {
                    throw Error(ErrorCode::MalformedFile, "bad n_points '" + std::string(value) + "'");
                }
                declared = static_cast<long>(n);
                if (*declared != static_cast<long>(kNumLandmarks)) {
                    throw Error(ErrorCode::WrongPointCount,
                                "n_points is " + std::to_string(*declared) + ", expected 68");
                }
            } else if (key != "version") {
                throw Error(ErrorCode::MalformedFile, "unknown header key '" + std::string(key) + "'");
            }
            continue;
        }
        if (line == "}") {
            closed = true;
            continue;
        }
        const auto space = line.find_first_of(" \t");
        if (space == std::string_view::npos) {
            throw Error(ErrorCode::MalformedFile, "coordinate line needs two values: '" + std::string(line) + "'");
        }
        const auto rest = trim(line.substr(space));
        if (rest.find_first_of(" \t") != std::string_view::npos) {
            throw Error(ErrorCode::MalformedFile, "coordinate line has extra tokens: '" + std::string(line) + "'");
        }
        points.push_back({parse_double(line.substr(0, space)), parse_double(rest)});
    }

    if (!open || !closed) {
        throw Error(ErrorCode::MalformedFile, "missing brace-delimited point block");
    }
    if (static_cast<long>(points.size()) != *declared) {
        throw Error(ErrorCode::WrongPointCount, "declared " + std::to_string(*declared) + " points, found " +
                                                    std::to_string(points.size()));
    }
    Shape shape{};
    std::copy(points.begin(), points.end(), shape.begin());
    for (const auto& p : shape) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw Error(ErrorCode::MalformedFile, "non-finite coordinate");
        }
    }
    return shape;
}

std::string serialize_pts(const Shape& points) {
    std::string out = "version: 1\nn_points: 68\n{\n";
    for (const auto& p : points) {
        out += format_double(p.x);
        out += ' ';
        out += format_double(p.y);
        out += '\n';
    }
    out += "}\n";
    return out;
}

Shape read_pts(const fs::path& path) {
    return parse_pts(read_file(path.string()));
}

void write_pts(const fs::path& path, const Shape& points) {
    write_file(path.string(), serialize_pts(points));
}

// -- manifest -------------------------------------------------------------------

namespace {

std::optional<std::string> optional_group(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    return std::string(text);
}

void expect_header(const std::vector<std::string>& header, const std::vector<std::string_view>& expected,
                   std::string_view what) {
    bool ok = header.size() >= expected.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i) {
        ok = trim(header[i]) == expected[i];
    }
    if (!ok) {
        throw Error(ErrorCode::MalformedFile, std::string(what) + " has an unexpected header");
    }
}

} // namespace

Dataset load_manifest(const fs::path& manifest, ParseFailurePolicy policy, std::vector<SkippedRecord>* skipped) {
    const std::string text = read_file(manifest.string());
    const auto lines = split_lines(text);
    if (lines.empty()) {
        throw Error(ErrorCode::MalformedFile, "empty manifest " + manifest.string());
    }
    std::string_view first = lines.front();
    if (first.substr(0, 3) == "\xEF\xBB\xBF") first.remove_prefix(3);
    expect_header(split_csv_row(first), {"path", "label", "group"}, "manifest");

    const fs::path base = manifest.parent_path();
    std::vector<LandmarkSet> records;
    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto fields = split_csv_row(lines[i]);
        if (fields.size() < 2 || fields.size() > 3) {
            throw Error(ErrorCode::MalformedFile, "manifest row " + std::to_string(i + 1) + " needs 2-3 fields");
        }
        LandmarkSet record;
        record.id = std::string(trim(fields[0]));
        record.label = parse_label(fields[1]);
        record.group = fields.size() == 3 ? optional_group(fields[2]) : std::nullopt;
        if (record.id.empty()) {
            throw Error(ErrorCode::MalformedFile, "manifest row " + std::to_string(i + 1) + " has no path");
        }
        if (!seen.insert(fs::path(record.id).lexically_normal().string()).second) {
            throw Error(ErrorCode::DuplicateId, "path listed twice: " + record.id);
        }

        fs::path file(record.id);
        if (file.is_relative()) file = base / file;
        if (!fs::exists(file)) {
            if (policy == ParseFailurePolicy::Skip) {
                if (skipped) skipped->push_back({record.id, "missing file"});
                continue;
            }
            throw Error(ErrorCode::MissingFile, "landmark file not found: " + file.string());
        }
        try {
            record.points = read_pts(file);
        } catch (const Error& e) {
            if (policy == ParseFailurePolicy::Throw) throw;
            if (skipped) skipped->push_back({record.id, e.what()});
            continue;
        }
        records.push_back(std::move(record));
    }
    return Dataset(std::move(records), manifest.string());
}

std::string format_manifest(const std::vector<ManifestRow>& rows) {
    std::string out = "path,label,group\n";
    for (const auto& row : rows) {
        out += csv_escape(row.path);
        out += ',';
        out += to_string(row.label);
        out += ',';
        if (row.group) out += csv_escape(*row.group);
        out += '\n';
    }
    return out;
}

// -- feature CSV -------------------------------------------------------------------

std::string format_landmark_csv(const Dataset& dataset) {
    std::string out = "id,group,label";
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
        out += ",x" + std::to_string(i) + ",y" + std::to_string(i);
    }
    out += '\n';
    for (const auto& r : dataset.records()) {
        out += csv_escape(r.id);
        out += ',';
        if (r.group) out += csv_escape(*r.group);
        out += ',';
        out += to_string(r.label);
        for (const auto& p : r.points) {
            out += ',' + format_double(p.x) + ',' + format_double(p.y);
        }
        out += '\n';
    }
    return out;
}

Dataset parse_landmark_csv(std::string_view text, std::string source) {
    const auto lines = split_lines(text);
    if (lines.empty()) {
        throw Error(ErrorCode::MalformedFile, "empty landmark CSV");
    }
    expect_header(split_csv_row(lines.front()), {"id", "group", "label", "x0", "y0"}, "landmark CSV");
    std::vector<LandmarkSet> records;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto fields = split_csv_row(lines[i]);
        if (fields.size() != 3 + 2 * kNumLandmarks) {
            throw Error(ErrorCode::WrongPointCount, "landmark CSV row " + std::to_string(i + 1) + " has " +
                                                        std::to_string(fields.size()) + " fields");
        }
        LandmarkSet r;
        r.id = fields[0];
        r.group = optional_group(fields[1]);
        r.label = parse_label(fields[2]);
        for (std::size_t k = 0; k < kNumLandmarks; ++k) {
            r.points[k] = {parse_double(fields[3 + 2 * k]), parse_double(fields[4 + 2 * k])};
        }
        records.push_back(std::move(r));
    }
    return Dataset(std::move(records), std::move(source));
}

// -- splitting / grouping -------------------------------------------------------------

TrainTestSplit split_train_test(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "train fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> real;
    std::vector<std::size_t> fake;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        switch (dataset[i].label) {
        case Label::Real: real.push_back(i); break;
        case Label::Fake: fake.push_back(i); break;
        case Label::Unlabeled:
            throw Error(ErrorCode::UnlabeledRecord, "cannot split unlabeled record " + dataset[i].id);
        }
    }

    std::mt19937_64 rng(seed);
    std::vector<bool> in_train(dataset.size(), false);
    for (auto* members : {&real, &fake}) {
        std::shuffle(members->begin(), members->end(), rng);
        const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(members->size())));
        for (std::size_t k = 0; k < n_train; ++k) in_train[(*members)[k]] = true;
    }

    std::vector<LandmarkSet> train;
    std::vector<LandmarkSet> test;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        (in_train[i] ? train : test).push_back(dataset[i]);
    }
    return {Dataset(std::move(train), dataset.source() + "#train"),
            Dataset(std::move(test), dataset.source() + "#test")};
}

const std::string& group_key(const LandmarkSet& set) {
    return set.group ? *set.group : set.id;
}

std::map<std::string, std::vector<std::string>> group_by_video(const Dataset& dataset) {
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& r : dataset.records()) {
        groups[group_key(r)].push_back(r.id);
    }
    return groups;
}

} // namespace lmf
