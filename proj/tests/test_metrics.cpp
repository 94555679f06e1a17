#include "mmc/metrics.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <random>
#include <utility>

#include "test_support.hpp"

using mmc::build_mapping;
using mmc::LabelVector;
using mmc::MappingState;
using mmc::mapping_inference_accuracy;
using mmc::mean_nmi_protocol;
using mmc::nmi;
using mmc::OrthonormalFactor;

namespace {

// Definition-level NMI oracle: plain double loops over the empirical joint
// distribution, no sorting, no structural shortcuts. Deliberately written
// from the textbook formula so it shares nothing with the library path.
double nmi_oracle(const LabelVector& a, const LabelVector& b) {
    const double n = static_cast<double>(a.size());
    std::map<int, long> ca, cb;
    std::map<std::pair<int, int>, long> cab;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++ca[a[i]];
        ++cb[b[i]];
        ++cab[{a[i], b[i]}];
    }
    double mi = 0.0;
    for (const auto& [key, c] : cab) {
        const double p = c / n;
        mi += p * std::log(p / ((ca[key.first] / n) * (cb[key.second] / n)));
    }
    double ha = 0.0, hb = 0.0;
    for (const auto& [id, c] : ca) ha -= (c / n) * std::log(c / n);
    for (const auto& [id, c] : cb) hb -= (c / n) * std::log(c / n);
    if (ha <= 0.0 || hb <= 0.0) return 0.0;
    return mi / std::sqrt(ha * hb);
}

LabelVector random_labels(std::size_t n, int classes, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, classes - 1);
    LabelVector labels(n);
    for (auto& l : labels) l = pick(rng);
    return labels;
}

}  // namespace

TEST(Nmi, IdenticalLabelingsScoreOne) {
    EXPECT_DOUBLE_EQ(nmi({0, 1, 2, 0, 1, 2}, {0, 1, 2, 0, 1, 2}), 1.0);
}

TEST(Nmi, IndependentLabelingsScoreZero) {
    EXPECT_DOUBLE_EQ(nmi({0, 0, 1, 1}, {0, 1, 0, 1}), 0.0);
}

TEST(Nmi, PermutedLabelsScoreOne) {
    EXPECT_DOUBLE_EQ(nmi({0, 0, 1, 1}, {1, 1, 0, 0}), 1.0);
}

TEST(Nmi, ConstantLabelingScoresZero) {
    EXPECT_DOUBLE_EQ(nmi({0, 0, 0}, {0, 1, 2}), 0.0);
    EXPECT_DOUBLE_EQ(nmi({0, 0, 0}, {0, 0, 0}), 0.0);
}

TEST(Nmi, ExactlySymmetricAndRelabelInvariant) {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        const LabelVector a = random_labels(30, 3, rng);
        const LabelVector b = random_labels(30, 4, rng);
        ASSERT_EQ(nmi(a, b), nmi(b, a));
        LabelVector a_relabeled = a;
        for (auto& l : a_relabeled) l = (l + 1) % 3;  // bijection of class ids
        ASSERT_EQ(nmi(a, b), nmi(a_relabeled, b));
    }
}

TEST(Nmi, WithinUnitIntervalAndMatchesOracle) {
    std::mt19937_64 rng(32);
    std::uniform_int_distribution<int> size_dist(2, 50);
    std::uniform_int_distribution<int> class_dist(1, 5);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = static_cast<std::size_t>(size_dist(rng));
        const LabelVector a = random_labels(n, class_dist(rng), rng);
        const LabelVector b = random_labels(n, class_dist(rng), rng);
        const double mine = nmi(a, b);
        ASSERT_GE(mine, 0.0);
        ASSERT_LE(mine, 1.0 + 1e-12);
        ASSERT_NEAR(mine, nmi_oracle(a, b), 1e-10) << "rep " << rep;
    }
}

TEST(Nmi, RejectsLengthMismatch) {
    EXPECT_THROW(nmi({0, 1}, {0, 1, 2}), mmc::DimensionError);
    EXPECT_THROW(nmi({}, {}), mmc::DimensionError);
}

TEST(MeanNmiProtocol, PerfectFactorScoresOneWithZeroSpread) {
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(9, 3);
    for (Eigen::Index i = 0; i < 9; ++i) u(i, i / 3) = 1.0 / std::sqrt(3.0);
    const LabelVector truth{0, 0, 0, 1, 1, 1, 2, 2, 2};
    const auto [mean, stddev] = mean_nmi_protocol(OrthonormalFactor(u), 3, truth, 20, 5);
    EXPECT_DOUBLE_EQ(mean, 1.0);
    EXPECT_DOUBLE_EQ(stddev, 0.0);
}

TEST(MeanNmiProtocol, SingleRunHasZeroStd) {
    Eigen::MatrixXd u = Eigen::MatrixXd::Identity(4, 2);
    const auto [mean, stddev] = mean_nmi_protocol(OrthonormalFactor(u), 2, {0, 1, 0, 1}, 1, 9);
    EXPECT_DOUBLE_EQ(stddev, 0.0);
}

TEST(MeanNmiProtocol, StableAcrossSeedsOnToyProblem) {
    // noisy 3-cluster embedding: protocol means from two seeds stay close
    std::mt19937_64 rng(33);
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(30, 3);
    LabelVector truth(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
        truth[static_cast<std::size_t>(i)] = static_cast<int>(i / 10);
        u(i, i / 10) = 1.0;
    }
    u += 0.3 * testsupport::random_gaussian(30, 3, rng);
    const Eigen::MatrixXd q = mmc::polar_orthogonalize(u);
    const auto first = mean_nmi_protocol(OrthonormalFactor(q), 3, truth, 20, 101);
    const auto second = mean_nmi_protocol(OrthonormalFactor(q), 3, truth, 20, 202);
    EXPECT_LT(std::abs(first.mean - second.mean), 0.05);
}

TEST(MappingInferenceAccuracy, FullyMappedIsVacuouslyPerfect) {
    const MappingState s = build_mapping(3, 3, {{0, 0}, {1, 1}, {2, 2}});
    const auto result = mapping_inference_accuracy(s, {0, 1, 2}, {0, 1, 2});
    EXPECT_EQ(result.unmapped, 0u);
    EXPECT_EQ(result.matches, 0u);
    EXPECT_DOUBLE_EQ(result.accuracy, 1.0);
}

TEST(MappingInferenceAccuracy, ClassAlignedBlocksScorePerfect) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    m.block(0, 0, 2, 2).setConstant(0.8);
    m.block(2, 2, 2, 2).setConstant(0.9);
    const MappingState s(0, 1, m, Eigen::MatrixXd::Zero(4, 4));
    const auto result = mapping_inference_accuracy(s, {0, 0, 1, 1}, {0, 0, 1, 1});
    EXPECT_EQ(result.unmapped, 4u);
    EXPECT_EQ(result.matches, 4u);
    EXPECT_DOUBLE_EQ(result.accuracy, 1.0);
}

TEST(MappingInferenceAccuracy, HandBuiltMixedCase) {
    // rows 0,1 and columns 0,1 are known-mapped; rows 2,3 are judged on the
    // unmapped columns 2,3 only. Row 2 picks its own class, row 3 crosses.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    m(2, 2) = 0.7;
    m(2, 3) = 0.2;
    m(3, 2) = 0.6;  // class-1 row attracted to class-0 column
    m(3, 3) = 0.4;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
    w(0, 0) = 1.0;
    w(1, 1) = 1.0;
    const MappingState s(0, 1, m, w);
    const auto result = mapping_inference_accuracy(s, {0, 0, 0, 1}, {0, 0, 0, 1});
    EXPECT_EQ(result.unmapped, 2u);
    EXPECT_EQ(result.matches, 1u);
    EXPECT_DOUBLE_EQ(result.accuracy, 0.5);
}

TEST(MappingInferenceAccuracy, ArgmaxTieTakesLowestColumn) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(2, 3, 0.5);  // all ties
    const MappingState s(0, 1, m, Eigen::MatrixXd::Zero(2, 3));
    const auto result = mapping_inference_accuracy(s, {1, 1}, {1, 0, 1});
    // both rows pick column 0 (class 1): both match
    EXPECT_EQ(result.matches, 2u);
}

TEST(MappingInferenceAccuracy, RandomMappingScoresNearChance) {
    std::mt19937_64 rng(34);
    const int classes = 3;
    std::size_t matches = 0, unmapped = 0;
    for (int seed = 0; seed < 10; ++seed) {
        const Eigen::Index n = 300;
        Eigen::MatrixXd m = testsupport::random_gaussian(n, n, rng).cwiseAbs();
        const MappingState s(0, 1, m, Eigen::MatrixXd::Zero(n, n));
        LabelVector li(static_cast<std::size_t>(n)), lj(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            li[static_cast<std::size_t>(i)] = static_cast<int>(i) % classes;
            lj[static_cast<std::size_t>(i)] = static_cast<int>(i / 100);
        }
        const auto result = mapping_inference_accuracy(s, li, lj);
        matches += result.matches;
        unmapped += result.unmapped;
    }
    const double accuracy = static_cast<double>(matches) / static_cast<double>(unmapped);
    // 3 sigma of a binomial with p = 1/3 over 3000 trials is ~0.026
    EXPECT_NEAR(accuracy, 1.0 / 3.0, 0.03);
}
