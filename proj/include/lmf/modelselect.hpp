#pragma once

#include "lmf/dataset.hpp"
#include "lmf/svm.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lmf {

struct Grid {
    std::vector<double> c_values = {0.1, 1.0, 10.0, 100.0};
    std::vector<double> gamma_values = {0.001 / 136.0, 0.01 / 136.0, 0.1 / 136.0, 1.0 / 136.0};

    /// Throws Error(InvalidArgument) unless both axes are nonempty, positive
    /// and strictly ascending.
    void validate() const;
};

/// Per class: seeded shuffle, then dealt round-robin into k folds. Each fold
/// is returned in ascending index order. Throws Error(ClassTooSmall) when a
/// class has fewer than k members.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const Label> labels, std::size_t k,
                                                       std::uint64_t seed);

struct CvCell {
    double c = 0.0;
    double gamma = 0.0;
    std::vector<double> fold_auroc;
    double mean_auroc = 0.0;
    double std_auroc = 0.0;
    bool failed = false;
    std::string error;
    std::size_t unconverged_folds = 0;
};

struct CvResult {
    std::vector<CvCell> cells;  // c-major, gamma-minor grid order
    std::size_t chosen = 0;
    std::size_t folds = 0;
    std::uint64_t seed = 0;

    const CvCell& best() const { return cells.at(chosen); }
};

struct GridSearchOptions {
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    double kkt_tolerance = 1e-3;
    int max_passes = 10;
    /// Worker threads for cell/fold evaluation; 0 uses the hardware count.
    unsigned threads = 0;
};

struct GridSearchResult {
    CvResult cv;
    TrainResult final_model;
    TrainParams final_params;
};

/// Mean of the stored per-fold scores, accumulated in fold order.
double mean_of(std::span<const double> values);

/// Index of the cell with the largest mean AUROC; ties go to the smaller c,
/// then the smaller gamma. Failed cells are skipped. Throws
/// Error(AllCellsFailed) if nothing is left.
std::size_t choose_cell(std::span<const CvCell> cells);

/// k-fold cross-validated grid search over (c, gamma) scored by validation
/// AUROC, followed by a retrain on all samples with the chosen cell. Class
/// weights are recomputed on every training subset. The result does not
/// depend on the thread count.
GridSearchResult grid_search(std::span<const Sample> features, std::span<const Label> labels, const Grid& grid,
                             const GridSearchOptions& options);

/// `c,gamma,fold,auroc` rows, plus one `mean` row per cell.
std::string format_cv_csv(const CvResult& cv);

nlohmann::json cv_to_json(const CvResult& cv);

} // namespace lmf
