#include "lmf/modelselect.hpp"

#include "lmf/error.hpp"
#include "lmf/eval.hpp"
#include "lmf/text.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <random>
#include <thread>

namespace lmf {

using nlohmann::json;

void Grid::validate() const {
    for (const auto* axis : {&c_values, &gamma_values}) {
        if (axis->empty()) throw Error(ErrorCode::InvalidArgument, "grid axis is empty");
        for (std::size_t i = 0; i < axis->size(); ++i) {
            const double v = (*axis)[i];
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw Error(ErrorCode::InvalidArgument, "grid values must be positive");
            }
            if (i > 0 && !(v > (*axis)[i - 1])) {
                throw Error(ErrorCode::InvalidArgument, "grid values must be strictly ascending");
            }
        }
    }
}

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const Label> labels, std::size_t k,
                                                       std::uint64_t seed) {
    if (k < 2) throw Error(ErrorCode::InvalidArgument, "k-fold needs k >= 2");
    std::vector<std::size_t> real;
    std::vector<std::size_t> fake;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (label_sign(labels[i]) > 0 ? fake : real).push_back(i);
    }
    if (real.size() < k || fake.size() < k) {
        throw Error(ErrorCode::ClassTooSmall, "each class needs at least " + std::to_string(k) + " members (have " +
                                                  std::to_string(real.size()) + " real, " +
                                                  std::to_string(fake.size()) + " fake)");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::size_t>> folds(k);
    for (auto* members : {&real, &fake}) {
        std::shuffle(members->begin(), members->end(), rng);
        for (std::size_t j = 0; j < members->size(); ++j) folds[j % k].push_back((*members)[j]);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

double mean_of(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

std::size_t choose_cell(std::span<const CvCell> cells) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& cell = cells[i];
        if (cell.failed) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = cells[*best];
        const bool better = cell.mean_auroc > b.mean_auroc ||
                            (cell.mean_auroc == b.mean_auroc &&
                             (cell.c < b.c || (cell.c == b.c && cell.gamma < b.gamma)));
        if (better) best = i;
    }
    if (!best) throw Error(ErrorCode::AllCellsFailed, "every grid cell failed to train");
    return *best;
}

namespace {

template <typename T>
std::vector<T> pick(std::span<const T> values, std::span<const std::size_t> indices) {
    std::vector<T> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(values[i]);
    return out;
}

// Runs `task(i)` for i in [0, count) on up to `threads` workers.
template <typename Task>
void parallel_for(std::size_t count, unsigned threads, Task task) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) task(i);
        });
    }
}

struct FoldOutcome {
    double auroc = 0.0;
    bool converged = true;
    std::string error;
};

} // namespace

GridSearchResult grid_search(std::span<const Sample> features, std::span<const Label> labels, const Grid& grid,
                             const GridSearchOptions& options) {
    grid.validate();
    if (features.size() != labels.size()) {
        throw Error(ErrorCode::DimensionMismatch, "feature and label counts differ");
    }
    compute_class_weights(labels);  // SingleClass check up front
    const auto folds = stratified_kfold(labels, options.folds, options.seed);

    // Training subsets, one per fold; shared by every cell.
    std::vector<std::vector<std::size_t>> train_idx(folds.size());
    for (std::size_t f = 0; f < folds.size(); ++f) {
        for (std::size_t g = 0; g < folds.size(); ++g) {
            if (g != f) train_idx[f].insert(train_idx[f].end(), folds[g].begin(), folds[g].end());
        }
        std::sort(train_idx[f].begin(), train_idx[f].end());
    }

    const std::size_t n_gamma = grid.gamma_values.size();
    const std::size_t n_cells = grid.c_values.size() * n_gamma;
    const std::size_t n_folds = folds.size();

    // One kernel matrix per gamma over all samples; folds take sub-blocks.
    std::vector<GramMatrix> grams(n_gamma);
    parallel_for(n_gamma, options.threads,
                 [&](std::size_t g) { grams[g] = GramMatrix(features, KernelParams{grid.gamma_values[g]}); });

    std::vector<FoldOutcome> outcomes(n_cells * n_folds);
    parallel_for(n_cells * n_folds, options.threads, [&](std::size_t task) {
        const std::size_t cell = task / n_folds;
        const std::size_t f = task % n_folds;
        const std::size_t g = cell % n_gamma;
        auto& out = outcomes[task];
        try {
            const auto& tr = train_idx[f];
            const auto xs = pick(features, std::span<const std::size_t>(tr));
            const auto ys = pick(labels, std::span<const std::size_t>(tr));
            TrainParams params;
            params.c = grid.c_values[cell / n_gamma];
            params.kernel.gamma = grid.gamma_values[g];
            params.class_weights = compute_class_weights(ys);
            params.kkt_tolerance = options.kkt_tolerance;
            params.max_passes = options.max_passes;
            params.seed = options.seed;
            const auto result = train_smo(xs, ys, params, grams[g].subset(tr));
            out.converged = result.converged;

            // Validation decisions straight from the shared kernel matrix.
            std::vector<double> scores;
            std::vector<Label> val_labels;
            for (auto v : folds[f]) {
                double s = result.machine.bias;
                for (std::size_t k = 0; k < result.support_indices.size(); ++k) {
                    s += result.machine.dual_coefficients[k] * grams[g](tr[result.support_indices[k]], v);
                }
                scores.push_back(s);
                val_labels.push_back(labels[v]);
            }
            out.auroc = auroc(scores, val_labels);
        } catch (const Error& e) {
            out.error = e.what();
        }
    });

    CvResult cv;
    cv.folds = n_folds;
    cv.seed = options.seed;
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        CvCell c;
        c.c = grid.c_values[cell / n_gamma];
        c.gamma = grid.gamma_values[cell % n_gamma];
        for (std::size_t f = 0; f < n_folds; ++f) {
            const auto& o = outcomes[cell * n_folds + f];
            if (!o.error.empty()) {
                c.failed = true;
                c.error = o.error;
                break;
            }
            c.fold_auroc.push_back(o.auroc);
            if (!o.converged) ++c.unconverged_folds;
        }
        if (!c.failed) {
            c.mean_auroc = mean_of(c.fold_auroc);
            double ss = 0.0;
            for (double a : c.fold_auroc) ss += (a - c.mean_auroc) * (a - c.mean_auroc);
            c.std_auroc = std::sqrt(ss / static_cast<double>(n_folds));
        }
        cv.cells.push_back(std::move(c));
    }
    cv.chosen = choose_cell(cv.cells);

    GridSearchResult result;
    result.cv = cv;
    result.final_params.c = cv.best().c;
    result.final_params.kernel.gamma = cv.best().gamma;
    result.final_params.class_weights = compute_class_weights(labels);
    result.final_params.kkt_tolerance = options.kkt_tolerance;
    result.final_params.max_passes = options.max_passes;
    result.final_params.seed = options.seed;
    const auto chosen_gamma = static_cast<std::size_t>(cv.chosen % n_gamma);
    result.final_model = train_smo(features, labels, result.final_params, grams[chosen_gamma]);
    return result;
}

std::string format_cv_csv(const CvResult& cv) {
    std::string out = "c,gamma,fold,auroc\n";
    for (const auto& cell : cv.cells) {
        const std::string prefix = format_double(cell.c) + ',' + format_double(cell.gamma) + ',';
        for (std::size_t f = 0; f < cell.fold_auroc.size(); ++f) {
            out += prefix + std::to_string(f) + ',' + format_double(cell.fold_auroc[f]) + '\n';
        }
        out += prefix + "mean," + (cell.failed ? std::string("failed") : format_double(cell.mean_auroc)) + '\n';
    }
    return out;
}

json cv_to_json(const CvResult& cv) {
    json cells = json::array();
    for (const auto& cell : cv.cells) {
        json c = {{"c", format_double(cell.c)},
                  {"gamma", format_double(cell.gamma)},
                  {"failed", cell.failed},
                  {"unconverged_folds", cell.unconverged_folds}};
        if (cell.failed) {
            c["error"] = cell.error;
        } else {
            json folds = json::array();
            for (double a : cell.fold_auroc) folds.push_back(format_double(a));
            c["fold_auroc"] = std::move(folds);
            c["mean_auroc"] = format_double(cell.mean_auroc);
            c["std_auroc"] = format_double(cell.std_auroc);
        }
        cells.push_back(std::move(c));
    }
    return {{"metric", "auroc"},
            {"folds", cv.folds},
            {"seed", cv.seed},
            {"chosen", {{"c", format_double(cv.best().c)}, {"gamma", format_double(cv.best().gamma)}}},
            {"cells", std::move(cells)}};
}

} // namespace lmf
