#pragma once

#include "lmf/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmf {

// Fake is the positive class throughout.

/// Mann-Whitney statistic: P(score_pos > score_neg) with ties counted half.
/// Computed from mid-ranks. Throws Error(SingleClass).
double auroc(std::span<const double> scores, std::span<const Label> labels);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // +inf for the (0, 0) origin
};

/// Starts at (0,0), ends at (1,1), one point per distinct score (descending),
/// each classifying score >= threshold as positive.
struct RocCurve {
    std::vector<RocPoint> points;

    double trapezoid_area() const;
};

RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels);

enum class EvalLevel { Frame, Video };

std::string_view to_string(EvalLevel level);
EvalLevel parse_eval_level(std::string_view text);

struct ScoredRecord {
    std::string id;
    std::optional<std::string> group;
    Label label = Label::Unlabeled;
    double score = 0.0;
};

enum class AggregationMode { MeanScore, MeanLabel };

/// One record per group (keyed by group id, or by record id when the group is
/// absent) carrying the mean of its members' scores. MeanLabel averages the
/// thresholded 0/1 predictions instead. Throws Error(MixedLabelGroup).
std::vector<ScoredRecord> aggregate_by_group(std::span<const ScoredRecord> records,
                                             AggregationMode mode = AggregationMode::MeanScore);

struct EvalReport {
    double auroc = 0.5;
    RocCurve roc;
    std::size_t n_positive = 0;
    std::size_t n_negative = 0;
    EvalLevel level = EvalLevel::Frame;
};

EvalReport evaluate(std::span<const ScoredRecord> records, EvalLevel level,
                    AggregationMode mode = AggregationMode::MeanScore);

nlohmann::json report_to_json(const EvalReport& report);

std::string format_scores_csv(std::span<const ScoredRecord> records);
std::vector<ScoredRecord> parse_scores_csv(std::string_view text);

// -- landmark marginal densities --------------------------------------------------

struct Histogram {
    std::vector<double> mass;  // empty when the class had no samples
};

/// Per coordinate (interleaved x0, y0, ...), a normalized histogram for each
/// class over [lo, hi] with `bins` equal bins. Values outside the range fall
/// into the nearest edge bin.
struct DensityTable {
    std::size_t bins = 0;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<Histogram> real;
    std::vector<Histogram> fake;

    double bin_lo(std::size_t b) const;
    double bin_hi(std::size_t b) const;
};

struct DensityOptions {
    std::size_t bins = 50;
    double lo = -0.25;
    double hi = 1.25;
};

/// An empty class yields empty histograms and is reported via
/// `empty_classes` rather than thrown.
DensityTable marginal_density(std::span<const Shape> real, std::span<const Shape> fake, const DensityOptions& options,
                              std::vector<Label>* empty_classes = nullptr);

/// Mean of a histogram using bin centres.
double histogram_mean(const Histogram& h, const DensityTable& table);

std::string format_density_csv(const DensityTable& table);

} // namespace lmf
