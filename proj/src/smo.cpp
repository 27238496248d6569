#include "lmf/error.hpp"
#include "lmf/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace lmf {

namespace {

constexpr double kSupportThreshold = 1e-8;
constexpr double kSignificantChange = 1e-5;

class SmoSolver {
public:
    SmoSolver(const GramMatrix& gram, std::vector<int> y, const TrainParams& params)
        : k_(gram), y_(std::move(y)), n_(y_.size()), tol_(0.5 * params.kkt_tolerance),
          report_tol_(params.kkt_tolerance), rng_(params.seed),
          alpha_(n_, 0.0), f_(n_, 0.0), box_(n_) {
        for (std::size_t i = 0; i < n_; ++i) box_[i] = params.c * params.class_weights.for_sign(y_[i]);
    }

    // Platt's outer loop: alternate full sweeps with sweeps over the free
    // multipliers until a full sweep changes nothing.
    void run(int max_passes, std::size_t max_iterations) {
        bool examine_all = true;
        std::size_t changed = 0;
        int stale_passes = 0;
        while (changed > 0 || examine_all) {
            if (examine_all) {
                if (sweeps_ > 0) {
                    stale_passes = pass_max_delta_ > kSignificantChange ? 0 : stale_passes + 1;
                    if (stale_passes >= max_passes) break;
                }
                pass_max_delta_ = 0.0;
                ++sweeps_;
            }
            changed = 0;
            for (std::size_t i = 0; i < n_; ++i) {
                if (examine_all || is_free(i)) changed += examine(i) ? 1 : 0;
                if (iterations_ >= max_iterations) {
                    hit_cap_ = true;
                    return;
                }
            }
            if (examine_all) {
                examine_all = false;
            } else if (changed == 0) {
                examine_all = true;
            }
        }
    }

    TrainResult finish(std::span<const Sample> xs, const KernelParams& kernel) {
        const double b = final_bias();
        TrainResult r;
        r.alphas = alpha_;
        r.machine.kernel = kernel;
        r.machine.bias = b;
        double objective = 0.0;
        double violation = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            objective += alpha_[i] - 0.5 * alpha_[i] * y_[i] * f_[i];
            violation = std::max(violation, kkt_violation(i, b));
            if (alpha_[i] > kSupportThreshold) {
                r.support_indices.push_back(i);
                r.machine.support_vectors.push_back(xs[i]);
                r.machine.dual_coefficients.push_back(alpha_[i] * y_[i]);
            }
        }
        r.dual_objective = objective;
        r.kkt_violation = violation;
        r.iterations = iterations_;
        r.sweeps = sweeps_;
        r.converged = !hit_cap_ && violation <= report_tol_;
        return r;
    }

private:
    bool is_free(std::size_t i) const { return alpha_[i] > 0.0 && alpha_[i] < box_[i]; }

    double error(std::size_t i) const { return f_[i] + b_ - y_[i]; }

    bool examine(std::size_t i2) {
        const double e2 = error(i2);
        const double r2 = e2 * y_[i2];
        if (!((r2 < -tol_ && alpha_[i2] < box_[i2]) || (r2 > tol_ && alpha_[i2] > 0.0))) {
            return false;
        }

        // Second-choice heuristic: the free multiplier maximizing |E1 - E2|.
        std::size_t best = n_;
        double best_gap = -1.0;
        std::size_t n_free = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (!is_free(i)) continue;
            ++n_free;
            const double gap = std::abs(error(i) - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        if (n_free > 1 && best != n_ && take_step(best, i2, e2)) return true;

        std::uniform_int_distribution<std::size_t> start_dist(0, n_ - 1);
        std::size_t start = start_dist(rng_);
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t i1 = (start + k) % n_;
            if (is_free(i1) && take_step(i1, i2, e2)) return true;
        }
        start = start_dist(rng_);
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t i1 = (start + k) % n_;
            if (take_step(i1, i2, e2)) return true;
        }
        return false;
    }

    bool take_step(std::size_t i1, std::size_t i2, double e2) {
        if (i1 == i2) return false;
        const double a1_old = alpha_[i1];
        const double a2_old = alpha_[i2];
        const int y1 = y_[i1];
        const int y2 = y_[i2];
        const double c1 = box_[i1];
        const double c2 = box_[i2];
        const double e1 = error(i1);
        const double s = y1 * y2;

        double lo = 0.0;
        double hi = 0.0;
        if (y1 != y2) {
            lo = std::max(0.0, a2_old - a1_old);
            hi = std::min(c2, c1 + a2_old - a1_old);
        } else {
            lo = std::max(0.0, a1_old + a2_old - c1);
            hi = std::min(c2, a1_old + a2_old);
        }
        if (!(hi > lo)) return false;

        const double k11 = k_(i1, i1);
        const double k12 = k_(i1, i2);
        const double k22 = k_(i2, i2);
        const double eta = k11 + k22 - 2.0 * k12;

        double a2 = 0.0;
        if (eta > 1e-12) {
            a2 = std::clamp(a2_old + y2 * (e1 - e2) / eta, lo, hi);
        } else {
            // Objective is linear along the constraint line; take the better end.
            const double f1 = y1 * (e1 - b_) - a1_old * k11 - s * a2_old * k12;
            const double f2 = y2 * (e2 - b_) - s * a1_old * k12 - a2_old * k22;
            const double l1 = a1_old + s * (a2_old - lo);
            const double h1 = a1_old + s * (a2_old - hi);
            const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12;
            const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12;
            if (obj_lo < obj_hi - 1e-12) {
                a2 = lo;
            } else if (obj_lo > obj_hi + 1e-12) {
                a2 = hi;
            } else {
                return false;
            }
        }
        if (a2 < kSupportThreshold * c2) a2 = 0.0;
        if (a2 > c2 * (1.0 - kSupportThreshold)) a2 = c2;
        if (std::abs(a2 - a2_old) < 1e-12 * (a2 + a2_old + 1e-12)) return false;

        double a1 = a1_old + s * (a2_old - a2);
        a1 = std::clamp(a1, 0.0, c1);

        const double d1 = y1 * (a1 - a1_old);
        const double d2 = y2 * (a2 - a2_old);
        for (std::size_t k = 0; k < n_; ++k) f_[k] += d1 * k_(i1, k) + d2 * k_(i2, k);
        alpha_[i1] = a1;
        alpha_[i2] = a2;

        const bool free1 = a1 > 0.0 && a1 < c1;
        const bool free2 = a2 > 0.0 && a2 < c2;
        const double b1 = y1 - f_[i1];
        const double b2 = y2 - f_[i2];
        if (free1) {
            b_ = b1;
        } else if (free2) {
            b_ = b2;
        } else {
            b_ = 0.5 * (b1 + b2);
        }

        pass_max_delta_ = std::max({pass_max_delta_, std::abs(a1 - a1_old), std::abs(a2 - a2_old)});
        ++iterations_;
        return true;
    }

    // Average over free multipliers; with none, the midpoint of the interval
    // of biases consistent with the bound multipliers.
    double final_bias() const {
        double sum = 0.0;
        std::size_t count = 0;
        double lower = -std::numeric_limits<double>::infinity();
        double upper = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_; ++i) {
            const double target = y_[i] - f_[i];
            if (alpha_[i] > kSupportThreshold * box_[i] && alpha_[i] < box_[i] * (1.0 - kSupportThreshold)) {
                sum += target;
                ++count;
            } else if ((alpha_[i] <= kSupportThreshold * box_[i]) == (y_[i] > 0)) {
                lower = std::max(lower, target);
            } else {
                upper = std::min(upper, target);
            }
        }
        if (count > 0) return sum / static_cast<double>(count);
        if (std::isfinite(lower) && std::isfinite(upper)) return 0.5 * (lower + upper);
        return std::isfinite(lower) ? lower : upper;
    }

    double kkt_violation(std::size_t i, double b) const {
        const double margin = y_[i] * (f_[i] + b);
        if (alpha_[i] <= kSupportThreshold * box_[i]) return std::max(0.0, 1.0 - margin);
        if (alpha_[i] >= box_[i] * (1.0 - kSupportThreshold)) return std::max(0.0, margin - 1.0);
        return std::abs(margin - 1.0);
    }

    const GramMatrix& k_;
    std::vector<int> y_;
    std::size_t n_;
    // Working tolerance is half the requested one: replacing the running bias
    // by the free-vector average moves every margin by at most that much.
    double tol_;
    double report_tol_;
    std::mt19937_64 rng_;
    std::vector<double> alpha_;
    std::vector<double> f_;  // sum_j alpha_j y_j K(j, i), bias excluded
    std::vector<double> box_;
    double b_ = 0.0;
    std::size_t iterations_ = 0;
    int sweeps_ = 0;
    double pass_max_delta_ = 0.0;
    bool hit_cap_ = false;
};

std::vector<int> signs_of(std::span<const Label> labels) {
    std::vector<int> y;
    y.reserve(labels.size());
    bool pos = false;
    bool neg = false;
    for (auto l : labels) {
        y.push_back(label_sign(l));
        (y.back() > 0 ? pos : neg) = true;
    }
    if (!pos || !neg) {
        throw Error(ErrorCode::SingleClass, "single class: training needs both real and fake samples");
    }
    return y;
}

} // namespace

TrainResult train_smo(std::span<const Sample> xs, std::span<const Label> labels, const TrainParams& params) {
    params.validate();
    if (xs.size() != labels.size()) {
        throw Error(ErrorCode::DimensionMismatch, "feature and label counts differ");
    }
    return train_smo(xs, labels, params, GramMatrix(xs, params.kernel));
}

TrainResult train_smo(std::span<const Sample> xs, std::span<const Label> labels, const TrainParams& params,
                      const GramMatrix& gram) {
    params.validate();
    if (xs.size() != labels.size() || gram.size() != xs.size()) {
        throw Error(ErrorCode::DimensionMismatch, "feature, label and kernel matrix sizes differ");
    }
    if (xs.size() < 2) {
        throw Error(ErrorCode::TooFewSamples, "training needs at least two samples");
    }
    for (const auto& x : xs) {
        if (x.size() != xs.front().size()) {
            throw Error(ErrorCode::DimensionMismatch, "training samples differ in dimension");
        }
    }
    auto y = signs_of(labels);
    const std::size_t cap = params.max_iterations > 0 ? params.max_iterations : 1000 * xs.size() + 100000;
    SmoSolver solver(gram, std::move(y), params);
    solver.run(params.max_passes, cap);
    return solver.finish(xs, params.kernel);
}

} // namespace lmf
