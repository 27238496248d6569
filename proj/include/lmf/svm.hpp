#pragma once

#include "lmf/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lmf {

using Sample = std::vector<double>;

struct KernelParams {
    double gamma = 1.0;

    /// Throws Error(InvalidArgument) unless gamma is positive and finite.
    void validate() const;
};

/// exp(-gamma * |x - z|^2). Throws Error(DimensionMismatch).
double rbf_kernel(std::span<const double> x, std::span<const double> z, const KernelParams& k);

struct ClassWeights {
    double real = 1.0;
    double fake = 1.0;

    double for_label(Label label) const;
    double for_sign(int y) const { return y > 0 ? fake : real; }
};

/// w_c = N / (2 N_c). Throws Error(SingleClass) unless both classes occur.
ClassWeights compute_class_weights(std::span<const Label> labels);

struct TrainParams {
    double c = 1.0;
    KernelParams kernel;
    ClassWeights class_weights;
    double kkt_tolerance = 1e-3;
    /// Consecutive full sweeps in which no multiplier moves by more than
    /// 1e-5 before the solver gives up.
    int max_passes = 10;
    /// Hard cap on successful pair updates; 0 picks a size-dependent default.
    std::size_t max_iterations = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Kernel expansion sum_i coef_i K(sv_i, x) + bias; positive means Fake.
struct KernelMachine {
    std::vector<Sample> support_vectors;
    std::vector<double> dual_coefficients;  // alpha_i * y_i
    double bias = 0.0;
    KernelParams kernel;

    std::size_t dimension() const { return support_vectors.empty() ? 0 : support_vectors.front().size(); }
};

/// Throws Error(DimensionMismatch).
double decision(const KernelMachine& machine, std::span<const double> x);

/// Row-wise decision values; identical to calling decision() per row.
std::vector<double> decision_batch(const KernelMachine& machine, std::span<const Sample> xs, unsigned threads = 0);

/// Dense symmetric kernel matrix.
class GramMatrix {
public:
    GramMatrix() = default;
    GramMatrix(std::span<const Sample> xs, const KernelParams& k);

    /// Rows/columns `indices` of this matrix.
    GramMatrix subset(std::span<const std::size_t> indices) const;

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

struct TrainResult {
    KernelMachine machine;
    std::vector<double> alphas;               // one per training sample
    std::vector<std::size_t> support_indices; // training indices with alpha > 1e-8
    double dual_objective = 0.0;
    double kkt_violation = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    int sweeps = 0;
};

/// Soft-margin dual with per-sample boxes 0 <= alpha_i <= c * w_{y_i}, solved
/// by Platt's sequential minimal optimization. Fallback scans for the second
/// multiplier start at seeded random offsets, so results are deterministic in
/// the seed. Non-convergence is reported through TrainResult::converged rather
/// than thrown. Throws Error(SingleClass) / Error(TooFewSamples).
TrainResult train_smo(std::span<const Sample> xs, std::span<const Label> labels, const TrainParams& params);

/// Same as above with a precomputed kernel matrix for `xs` (must match
/// params.kernel).
TrainResult train_smo(std::span<const Sample> xs, std::span<const Label> labels, const TrainParams& params,
                      const GramMatrix& gram);

} // namespace lmf
