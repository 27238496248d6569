#pragma once

// Independent reference computations used to check the library. None of these
// call into lmf numerics; they only share the plain data types.

#include "lmf/align.hpp"
#include "lmf/dataset.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace lmf::testing {

using Matrix = std::vector<std::vector<double>>;

/// Gaussian elimination with partial pivoting. Throws std::runtime_error when
/// the system is singular.
std::vector<double> gauss_solve(Matrix a, std::vector<double> b);

/// [a11, a12, a21, a22, tx, ty] from the explicit 6x6 normal equations.
std::array<double, 6> affine_normal_equations(std::span<const Point2> src, std::span<const Point2> dst);

/// Sum of squared residuals of the affine map given as [a11, a12, a21, a22, tx, ty].
double affine_sse(const std::array<double, 6>& p, std::span<const Point2> src, std::span<const Point2> dst);

// -- SVM dual ---------------------------------------------------------------------

Matrix rbf_gram(const std::vector<std::vector<double>>& xs, double gamma);

/// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
double dual_objective(const Matrix& k, std::span<const int> y, std::span<const double> alpha);

struct QpSolution {
    std::vector<double> alpha;
    double objective = 0.0;
};

/// Accelerated projected gradient ascent on the SVM dual. The projection onto
/// {0 <= alpha <= box, sum alpha_i y_i = 0} is found by bisection on the
/// multiplier of the equality constraint.
QpSolution dual_qp_oracle(const Matrix& k, std::span<const int> y, std::span<const double> box,
                          int iterations = 200000);

/// Coarse-to-fine grid search over the first n-1 multipliers with the last one
/// eliminated through the equality constraint. Intended for n <= 4.
QpSolution dual_grid_oracle(const Matrix& k, std::span<const int> y, std::span<const double> box);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& m);

// -- statistics ---------------------------------------------------------------------

/// Counts positive/negative pairs directly; ties count one half.
double pairwise_auroc(std::span<const double> scores, std::span<const Label> labels);

struct MeanStd {
    std::vector<double> mean;
    std::vector<double> std;  // population
};

MeanStd two_pass_mean_std(const std::vector<std::vector<double>>& rows);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b);

// -- random inputs ---------------------------------------------------------------------

/// 68 points drawn uniformly from [0.1, 0.9]^2.
Shape random_shape(std::mt19937_64& rng);

/// Linear part with singular values in [scale_lo, scale_hi] and random
/// rotations (reflections allowed), plus translation in [-500, 500]^2.
AffineTransform random_affine(std::mt19937_64& rng, double scale_lo = 0.1, double scale_hi = 10.0);

Shape transform(const Shape& s, const AffineTransform& t);

// -- files -------------------------------------------------------------------------------

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& path);

} // namespace lmf::testing
