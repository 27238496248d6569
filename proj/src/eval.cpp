#include "lmf/eval.hpp"

#include "lmf/error.hpp"
#include "lmf/features.hpp"
#include "lmf/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace lmf {

using nlohmann::json;

namespace {

struct ClassCounts {
    std::size_t pos = 0;
    std::size_t neg = 0;
};

ClassCounts count_classes(std::span<const double> scores, std::span<const Label> labels) {
    if (scores.size() != labels.size()) {
        throw Error(ErrorCode::DimensionMismatch, "score and label counts differ");
    }
    ClassCounts c;
    for (auto l : labels) (label_sign(l) > 0 ? c.pos : c.neg) += 1;
    if (c.pos == 0 || c.neg == 0) {
        throw Error(ErrorCode::SingleClass, "single class: AUROC needs both real and fake records");
    }
    for (double s : scores) {
        if (std::isnan(s)) throw Error(ErrorCode::InvalidArgument, "score is NaN");
    }
    return c;
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return descending ? scores[a] > scores[b] : scores[a] < scores[b];
    });
    return order;
}

} // namespace

double auroc(std::span<const double> scores, std::span<const Label> labels) {
    const auto counts = count_classes(scores, labels);
    const auto order = order_by_score(scores, false);

    // Sum of positive mid-ranks (1-based). Ranks are multiples of 1/2, so the
    // sum and the U statistic below are exact in double precision.
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (label_sign(labels[order[k]]) > 0) rank_sum += mid_rank;
        }
        i = j;
    }
    const double np = static_cast<double>(counts.pos);
    const double nn = static_cast<double>(counts.neg);
    const double u = rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

double RocCurve::trapezoid_area() const {
    double area = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k) {
        area += (points[k].fpr - points[k - 1].fpr) * (points[k].tpr + points[k - 1].tpr) / 2.0;
    }
    return area;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels) {
    const auto counts = count_classes(scores, labels);
    const auto order = order_by_score(scores, true);
    RocCurve roc;
    roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = scores[order[i]];
        while (i < order.size() && scores[order[i]] == threshold) {
            (label_sign(labels[order[i]]) > 0 ? tp : fp) += 1;
            ++i;
        }
        roc.points.push_back({static_cast<double>(fp) / static_cast<double>(counts.neg),
                              static_cast<double>(tp) / static_cast<double>(counts.pos), threshold});
    }
    return roc;
}

std::string_view to_string(EvalLevel level) {
    return level == EvalLevel::Frame ? "frame" : "video";
}

EvalLevel parse_eval_level(std::string_view text) {
    if (text == "frame") return EvalLevel::Frame;
    if (text == "video") return EvalLevel::Video;
    throw Error(ErrorCode::InvalidArgument, "level must be frame or video");
}

std::vector<ScoredRecord> aggregate_by_group(std::span<const ScoredRecord> records, AggregationMode mode) {
    struct Accumulator {
        Label label = Label::Unlabeled;
        double sum = 0.0;
        std::size_t count = 0;
    };
    std::map<std::string, Accumulator> groups;
    for (const auto& r : records) {
        const std::string& key = r.group ? *r.group : r.id;
        auto [it, inserted] = groups.try_emplace(key);
        auto& acc = it->second;
        if (inserted) {
            acc.label = r.label;
        } else if (acc.label != r.label) {
            throw Error(ErrorCode::MixedLabelGroup, "group '" + key + "' mixes real and fake records");
        }
        acc.sum += mode == AggregationMode::MeanScore ? r.score : (r.score > 0.0 ? 1.0 : 0.0);
        acc.count += 1;
    }
    std::vector<ScoredRecord> out;
    out.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        out.push_back({key, key, acc.label, acc.sum / static_cast<double>(acc.count)});
    }
    return out;
}

EvalReport evaluate(std::span<const ScoredRecord> records, EvalLevel level, AggregationMode mode) {
    std::vector<ScoredRecord> aggregated;
    if (level == EvalLevel::Video) {
        aggregated = aggregate_by_group(records, mode);
        records = aggregated;
    }
    std::vector<double> scores;
    std::vector<Label> labels;
    for (const auto& r : records) {
        scores.push_back(r.score);
        labels.push_back(r.label);
    }
    EvalReport report;
    report.level = level;
    report.auroc = auroc(scores, labels);
    report.roc = roc_curve(scores, labels);
    for (auto l : labels) (label_sign(l) > 0 ? report.n_positive : report.n_negative) += 1;
    return report;
}

json report_to_json(const EvalReport& report) {
    json roc = json::array();
    for (const auto& p : report.roc.points) {
        roc.push_back({{"fpr", p.fpr},
                       {"tpr", p.tpr},
                       {"threshold", std::isinf(p.threshold) ? json("inf") : json(p.threshold)}});
    }
    return {{"auroc", report.auroc},
            {"n_positive", report.n_positive},
            {"n_negative", report.n_negative},
            {"level", std::string(to_string(report.level))},
            {"roc", std::move(roc)}};
}

std::string format_scores_csv(std::span<const ScoredRecord> records) {
    std::string out = "id,group,label,score\n";
    for (const auto& r : records) {
        out += csv_escape(r.id) + ',' + (r.group ? csv_escape(*r.group) : std::string()) + ',' +
               std::string(to_string(r.label)) + ',' + format_double(r.score) + '\n';
    }
    return out;
}

std::vector<ScoredRecord> parse_scores_csv(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw Error(ErrorCode::MalformedFile, "empty scores CSV");
    const auto header = split_csv_row(lines.front());
    if (header.size() != 4 || header[0] != "id" || header[1] != "group" || header[2] != "label" ||
        header[3] != "score") {
        throw Error(ErrorCode::MalformedFile, "scores CSV header must be id,group,label,score");
    }
    std::vector<ScoredRecord> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto f = split_csv_row(lines[i]);
        if (f.size() != 4) throw Error(ErrorCode::MalformedFile, "scores row " + std::to_string(i + 1));
        ScoredRecord r;
        r.id = f[0];
        if (!trim(f[1]).empty()) r.group = std::string(trim(f[1]));
        r.label = parse_label(f[2]);
        r.score = parse_double(f[3]);
        out.push_back(std::move(r));
    }
    return out;
}

// -- densities ---------------------------------------------------------------------------

double DensityTable::bin_lo(std::size_t b) const {
    return lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
}

double DensityTable::bin_hi(std::size_t b) const {
    return lo + (hi - lo) * static_cast<double>(b + 1) / static_cast<double>(bins);
}

DensityTable marginal_density(std::span<const Shape> real, std::span<const Shape> fake, const DensityOptions& options,
                              std::vector<Label>* empty_classes) {
    if (options.bins < 2 || !(options.lo < options.hi)) {
        throw Error(ErrorCode::InvalidArgument, "density needs at least 2 bins and lo < hi");
    }
    DensityTable table;
    table.bins = options.bins;
    table.lo = options.lo;
    table.hi = options.hi;

    const auto fill = [&](std::span<const Shape> shapes, Label label) {
        std::vector<Histogram> hists(kFeatureDim);
        if (shapes.empty()) {
            if (empty_classes) empty_classes->push_back(label);
            return hists;
        }
        const double width = (options.hi - options.lo) / static_cast<double>(options.bins);
        for (auto& h : hists) h.mass.assign(options.bins, 0.0);
        for (const auto& shape : shapes) {
            for (std::size_t i = 0; i < kNumLandmarks; ++i) {
                const double coords[2] = {shape[i].x, shape[i].y};
                for (std::size_t axis = 0; axis < 2; ++axis) {
                    const double pos = std::floor((coords[axis] - options.lo) / width);
                    const auto bin = static_cast<std::size_t>(
                        std::clamp(pos, 0.0, static_cast<double>(options.bins - 1)));
                    hists[2 * i + axis].mass[bin] += 1.0;
                }
            }
        }
        for (auto& h : hists) {
            for (auto& m : h.mass) m /= static_cast<double>(shapes.size());
        }
        return hists;
    };
    table.real = fill(real, Label::Real);
    table.fake = fill(fake, Label::Fake);
    return table;
}

double histogram_mean(const Histogram& h, const DensityTable& table) {
    double mean = 0.0;
    for (std::size_t b = 0; b < h.mass.size(); ++b) {
        mean += h.mass[b] * 0.5 * (table.bin_lo(b) + table.bin_hi(b));
    }
    return mean;
}

std::string format_density_csv(const DensityTable& table) {
    std::string out = "coordinate_index,axis,class,bin_lo,bin_hi,mass\n";
    for (const auto& [label, hists] : {std::pair{Label::Real, &table.real}, std::pair{Label::Fake, &table.fake}}) {
        for (std::size_t c = 0; c < hists->size(); ++c) {
            const auto& h = (*hists)[c];
            for (std::size_t b = 0; b < h.mass.size(); ++b) {
                out += std::to_string(c / 2) + ',' + (c % 2 == 0 ? "x" : "y") + ',' + std::string(to_string(label)) +
                       ',' + format_double(table.bin_lo(b)) + ',' + format_double(table.bin_hi(b)) + ',' +
                       format_double(h.mass[b]) + '\n';
            }
        }
    }
    return out;
}

} // namespace lmf
