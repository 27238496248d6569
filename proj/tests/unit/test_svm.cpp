#include "lmf/error.hpp"
#include "lmf/svm.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace lmf {
namespace {

struct Problem {
    std::vector<Sample> xs;
    std::vector<Label> labels;
    std::vector<int> y;
};

Problem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::normal_distribution<double> g(0.0, 1.0);
    Problem p;
    for (std::size_t i = 0; i < n; ++i) {
        Sample x(d);
        for (auto& v : x) v = g(rng);
        p.xs.push_back(x);
        p.labels.push_back(rng() % 2 == 0 ? Label::Real : Label::Fake);
    }
    p.labels[0] = Label::Real;
    p.labels[1] = Label::Fake;
    for (auto l : p.labels) p.y.push_back(label_sign(l));
    return p;
}

TrainParams params_for(const Problem& p, double c, double gamma) {
    TrainParams t;
    t.c = c;
    t.kernel.gamma = gamma;
    t.class_weights = compute_class_weights(p.labels);
    return t;
}

std::vector<double> boxes(const Problem& p, const TrainParams& t) {
    std::vector<double> b;
    for (int yi : p.y) b.push_back(t.c * t.class_weights.for_sign(yi));
    return b;
}

// -- kernel ----------------------------------------------------------------------------

TEST(RbfKernel, Examples) {
    const std::vector<double> x = {0.3, -1.2, 4.0};
    EXPECT_EQ(rbf_kernel(x, x, KernelParams{0.7}), 1.0);
    const std::vector<double> a = {1.0, 0.0};
    const std::vector<double> b = {0.0, 1.0};
    EXPECT_NEAR(rbf_kernel(a, b, KernelParams{0.5}), 0.3678794, 1e-7);
    EXPECT_DOUBLE_EQ(rbf_kernel(a, b, KernelParams{0.5}), std::exp(-1.0));
}

TEST(RbfKernel, SymmetricAndBounded) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 2.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> x(5);
        std::vector<double> z(5);
        for (auto& v : x) v = g(rng);
        for (auto& v : z) v = g(rng);
        const KernelParams k{std::abs(g(rng)) + 0.01};
        const double kxz = rbf_kernel(x, z, k);
        EXPECT_EQ(kxz, rbf_kernel(z, x, k));
        EXPECT_GE(kxz, 0.0);
        EXPECT_LE(kxz, 1.0);
    }
}

TEST(RbfKernel, DimensionMismatch) {
    const std::vector<double> a = {1.0};
    const std::vector<double> b = {1.0, 2.0};
    try {
        rbf_kernel(a, b, KernelParams{1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
    EXPECT_THROW(KernelParams{0.0}.validate(), Error);
    EXPECT_THROW(KernelParams{-1.0}.validate(), Error);
}

TEST(GramMatrix, PositiveSemidefinite) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Sample> xs(10, Sample(3));
        for (auto& x : xs) {
            for (auto& v : x) v = g(rng);
        }
        // Occasional duplicate points make the matrix singular.
        if (trial % 4 == 0) xs[3] = xs[7];
        const double gamma = std::exp(std::uniform_real_distribution<double>(-4.0, 2.0)(rng));
        const GramMatrix k(xs, KernelParams{gamma});
        testing::Matrix m(10, std::vector<double>(10));
        for (std::size_t i = 0; i < 10; ++i) {
            for (std::size_t j = 0; j < 10; ++j) m[i][j] = k(i, j);
        }
        EXPECT_GE(testing::min_eigenvalue(m), -1e-8);
    }
}

TEST(GramMatrix, SubsetMatchesDirectComputation) {
    std::mt19937_64 rng(3);
    auto p = random_problem(rng, 12, 4);
    const KernelParams k{0.3};
    const GramMatrix full(p.xs, k);
    const std::vector<std::size_t> idx = {1, 4, 5, 11};
    const auto sub = full.subset(idx);
    ASSERT_EQ(sub.size(), 4u);
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
            EXPECT_EQ(sub(a, b), rbf_kernel(p.xs[idx[a]], p.xs[idx[b]], k));
        }
    }
}

TEST(DualOracle, TwoPointClosedForm) {
    // alpha_1 = alpha_2 = a maximizes 2a - a^2 (1 - K12), so a = 1 / (1 - K12).
    const std::vector<std::vector<double>> xs = {{1.0}, {-1.0}};
    const auto k = testing::rbf_gram(xs, 1.0);
    const std::vector<int> y = {1, -1};
    const double a = 1.0 / (1.0 - std::exp(-4.0));
    const std::vector<double> roomy(2, 10.0);
    const auto free = testing::dual_qp_oracle(k, y, roomy);
    EXPECT_NEAR(free.alpha[0], a, 1e-9);
    EXPECT_NEAR(free.alpha[1], a, 1e-9);
    EXPECT_NEAR(free.objective, a, 1e-12);
    const std::vector<double> tight(2, 0.5);
    const auto clipped = testing::dual_qp_oracle(k, y, tight);
    EXPECT_NEAR(clipped.alpha[0], 0.5, 1e-12);
    EXPECT_NEAR(testing::dual_grid_oracle(k, y, roomy).objective, a, 1e-9);
}

// -- class weights ---------------------------------------------------------------------

TEST(ClassWeights, Examples) {
    std::vector<Label> labels(75, Label::Real);
    labels.insert(labels.end(), 25, Label::Fake);
    const auto w = compute_class_weights(labels);
    EXPECT_NEAR(w.real, 0.6667, 1e-4);
    EXPECT_DOUBLE_EQ(w.real, 100.0 / 150.0);
    EXPECT_DOUBLE_EQ(w.fake, 2.0);

    std::vector<Label> balanced(50, Label::Real);
    balanced.insert(balanced.end(), 50, Label::Fake);
    const auto b = compute_class_weights(balanced);
    EXPECT_EQ(b.real, 1.0);
    EXPECT_EQ(b.fake, 1.0);
}

TEST(ClassWeights, BalanceIdentity) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t nr = 1 + rng() % 500;
        const std::size_t nf = 1 + rng() % 500;
        std::vector<Label> labels(nr, Label::Real);
        labels.insert(labels.end(), nf, Label::Fake);
        std::shuffle(labels.begin(), labels.end(), rng);
        const auto w = compute_class_weights(labels);
        EXPECT_NEAR(w.real * nr, w.fake * nf, 1e-9 * (nr + nf));
    }
}

TEST(ClassWeights, SingleClass) {
    const std::vector<Label> labels(4, Label::Fake);
    try {
        compute_class_weights(labels);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SingleClass);
    }
}

// -- training ----------------------------------------------------------------------------

TEST(TrainSmo, TwoSymmetricPoints) {
    const std::vector<Sample> xs = {{1.0}, {-1.0}};
    const std::vector<Label> labels = {Label::Fake, Label::Real};
    TrainParams t;
    t.c = 1.0;
    t.kernel.gamma = 1.0;
    t.class_weights = compute_class_weights(labels);
    const auto r = train_smo(xs, labels, t);
    EXPECT_GT(decision(r.machine, xs[0]), 0.0);
    EXPECT_LT(decision(r.machine, xs[1]), 0.0);
    EXPECT_NEAR(r.machine.bias, 0.0, 1e-6);
}

TEST(TrainSmo, XorAgainstGridOracle) {
    const std::vector<Sample> xs = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    const std::vector<Label> labels = {Label::Real, Label::Real, Label::Fake, Label::Fake};
    TrainParams t;
    t.c = 10.0;
    t.kernel.gamma = 1.0;
    t.class_weights = compute_class_weights(labels);
    const auto r = train_smo(xs, labels, t);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        EXPECT_GT(label_sign(labels[i]) * decision(r.machine, xs[i]), 0.0) << "point " << i;
    }
    std::vector<std::vector<double>> raw(xs.begin(), xs.end());
    const auto k = testing::rbf_gram(raw, 1.0);
    const std::vector<int> y = {-1, -1, 1, 1};
    const std::vector<double> box(4, 10.0);
    const auto oracle = testing::dual_grid_oracle(k, y, box);
    EXPECT_NEAR(r.dual_objective, oracle.objective, 1e-4);
    EXPECT_NEAR(testing::dual_objective(k, y, r.alphas), r.dual_objective, 1e-12);
}

TEST(TrainSmo, RandomSixPointsAgainstProjectedGradientOracle) {
    std::mt19937_64 rng(5);
    const auto p = random_problem(rng, 6, 2);
    const auto t = params_for(p, 1.0, 0.5);
    const auto r = train_smo(p.xs, p.labels, t);
    std::vector<std::vector<double>> raw(p.xs.begin(), p.xs.end());
    const auto k = testing::rbf_gram(raw, 0.5);
    const auto oracle = testing::dual_qp_oracle(k, p.y, boxes(p, t));
    EXPECT_NEAR(r.dual_objective, oracle.objective, 1e-4);
    double eq = 0.0;
    for (std::size_t i = 0; i < p.y.size(); ++i) eq += r.alphas[i] * p.y[i];
    EXPECT_LT(std::abs(eq), 1e-8);
}

TEST(TrainSmo, SmallProblemsMatchOracleAndStayFeasible) {
    std::mt19937_64 rng(6);
    const double cs[] = {0.5, 1.0, 10.0};
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng() % 7;
        const std::size_t d = 1 + rng() % 3;
        const auto p = random_problem(rng, n, d);
        const double gamma = std::exp(std::uniform_real_distribution<double>(-2.0, 1.0)(rng));
        auto t = params_for(p, cs[trial % 3], gamma);
        t.seed = rng();
        const auto r = train_smo(p.xs, p.labels, t);
        std::vector<std::vector<double>> raw(p.xs.begin(), p.xs.end());
        const auto k = testing::rbf_gram(raw, gamma);
        const auto box = boxes(p, t);
        const auto oracle = testing::dual_qp_oracle(k, p.y, box);
        EXPECT_NEAR(r.dual_objective, oracle.objective, 1e-4) << "trial " << trial;
        double eq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_GE(r.alphas[i], 0.0);
            EXPECT_LE(r.alphas[i], box[i]);
            eq += r.alphas[i] * p.y[i];
        }
        EXPECT_LT(std::abs(eq), 1e-8);
    }
}

TEST(TrainSmo, KktConditionsHoldOnConvergence) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = random_problem(rng, 60, 3);
        const auto t = params_for(p, trial % 2 == 0 ? 1.0 : 10.0, 0.5);
        const auto r = train_smo(p.xs, p.labels, t);
        ASSERT_TRUE(r.converged) << "trial " << trial;
        EXPECT_LE(r.kkt_violation, t.kkt_tolerance);
        const auto box = boxes(p, t);
        for (std::size_t i = 0; i < p.xs.size(); ++i) {
            const double margin = p.y[i] * decision(r.machine, p.xs[i]);
            const double a = r.alphas[i];
            if (a <= 1e-8 * box[i]) {
                EXPECT_GE(margin, 1.0 - t.kkt_tolerance);
            } else if (a >= box[i] * (1.0 - 1e-8)) {
                EXPECT_LE(margin, 1.0 + t.kkt_tolerance);
            } else {
                EXPECT_NEAR(margin, 1.0, t.kkt_tolerance) << "free vector " << i;
            }
        }
    }
}

TEST(TrainSmo, SupportVectorsAreThePositiveMultipliers) {
    std::mt19937_64 rng(8);
    const auto p = random_problem(rng, 40, 2);
    const auto r = train_smo(p.xs, p.labels, params_for(p, 1.0, 1.0));
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.xs.size(); ++i) {
        if (r.alphas[i] > 1e-8) {
            ASSERT_LT(k, r.support_indices.size());
            EXPECT_EQ(r.support_indices[k], i);
            EXPECT_EQ(r.machine.dual_coefficients[k], r.alphas[i] * p.y[i]);
            EXPECT_EQ(r.machine.support_vectors[k], p.xs[i]);
            ++k;
        }
    }
    EXPECT_EQ(k, r.support_indices.size());
}

TEST(TrainSmo, DeterministicGivenSeed) {
    std::mt19937_64 rng(9);
    const auto p = random_problem(rng, 80, 4);
    auto t = params_for(p, 10.0, 0.2);
    t.seed = 123;
    const auto a = train_smo(p.xs, p.labels, t);
    const auto b = train_smo(p.xs, p.labels, t);
    EXPECT_EQ(a.alphas, b.alphas);
    EXPECT_EQ(a.machine.bias, b.machine.bias);
    EXPECT_EQ(a.iterations, b.iterations);
}

TEST(TrainSmo, PrecomputedGramGivesSameModel) {
    std::mt19937_64 rng(10);
    const auto p = random_problem(rng, 30, 3);
    const auto t = params_for(p, 1.0, 0.4);
    const auto a = train_smo(p.xs, p.labels, t);
    const auto b = train_smo(p.xs, p.labels, t, GramMatrix(p.xs, t.kernel));
    EXPECT_EQ(a.alphas, b.alphas);
    EXPECT_EQ(a.machine.bias, b.machine.bias);
}

TEST(TrainSmo, IterationCapReportsNonConvergence) {
    std::mt19937_64 rng(11);
    const auto p = random_problem(rng, 50, 3);
    auto t = params_for(p, 10.0, 0.5);
    t.max_iterations = 3;
    const auto r = train_smo(p.xs, p.labels, t);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 3u);
    EXPECT_FALSE(r.machine.support_vectors.empty());
}

TEST(TrainSmo, Errors) {
    const std::vector<Sample> xs = {{1.0}, {2.0}};
    const std::vector<Label> same = {Label::Real, Label::Real};
    try {
        train_smo(xs, same, TrainParams{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SingleClass);
    }
    const std::vector<Sample> one = {{1.0}};
    const std::vector<Label> one_label = {Label::Real};
    try {
        train_smo(one, one_label, TrainParams{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewSamples);
    }
    TrainParams bad;
    bad.c = 0.0;
    EXPECT_THROW(bad.validate(), Error);
}

// -- decision ----------------------------------------------------------------------------

TEST(Decision, SingleSupportVectorIsTheKernel) {
    KernelMachine m;
    m.support_vectors = {{0.5, -0.5, 2.0}};
    m.dual_coefficients = {1.0};
    m.bias = 0.0;
    m.kernel.gamma = 0.3;
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> f = {g(rng), g(rng), g(rng)};
        EXPECT_EQ(decision(m, f), rbf_kernel(m.support_vectors[0], f, m.kernel));
    }
    const std::vector<double> wrong = {1.0};
    EXPECT_THROW(decision(m, wrong), Error);
}

TEST(Decision, BatchEqualsScalarExactly) {
    std::mt19937_64 rng(13);
    const auto p = random_problem(rng, 60, 5);
    const auto r = train_smo(p.xs, p.labels, params_for(p, 1.0, 0.3));
    std::vector<Sample> queries;
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Sample q(5);
        for (auto& v : q) v = g(rng);
        queries.push_back(q);
    }
    for (unsigned threads : {1u, 3u, 0u}) {
        const auto batch = decision_batch(r.machine, queries, threads);
        ASSERT_EQ(batch.size(), queries.size());
        for (std::size_t i = 0; i < queries.size(); ++i) EXPECT_EQ(batch[i], decision(r.machine, queries[i]));
    }
}

} // namespace
} // namespace lmf
