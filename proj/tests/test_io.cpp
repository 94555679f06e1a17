#include "mmc/io.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "mmc/clustering.hpp"
#include "mmc/metrics.hpp"
#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::path(::testing::TempDir()) / ("mmc_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& content) {
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

TEST(LoadMatrix, ParsesCommaAndWhitespaceDelimiters) {
    const fs::path dir = temp_dir("delims");
    Eigen::MatrixXd expected(2, 2);
    expected << 1, 2, 3, 4;
    ASSERT_TRUE(mmc::load_matrix(write_file(dir, "comma.csv", "1,2\n3,4\n")) == expected);
    ASSERT_TRUE(mmc::load_matrix(write_file(dir, "space.csv", "1 2\n3\t4\n")) == expected);
    ASSERT_TRUE(mmc::load_matrix(write_file(dir, "mixed.csv", "1, 2\n3,\t4\n")) == expected);
}

TEST(LoadMatrix, SkipsSingleLeadingComment) {
    const fs::path dir = temp_dir("comment");
    const Eigen::MatrixXd m =
        mmc::load_matrix(write_file(dir, "c.csv", "# generated for a test\n5,6\n7,8\n"));
    Eigen::MatrixXd expected(2, 2);
    expected << 5, 6, 7, 8;
    ASSERT_TRUE(m == expected);
}

TEST(LoadMatrix, RaggedRowsReportTheLineNumber) {
    const fs::path dir = temp_dir("ragged");
    const fs::path path = write_file(dir, "r.csv", "1,2\n3\n");
    try {
        mmc::load_matrix(path);
        FAIL() << "expected a parse error";
    } catch (const mmc::ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
}

TEST(LoadMatrix, NonNumericTokensReportTheLineNumber) {
    const fs::path dir = temp_dir("token");
    const fs::path path = write_file(dir, "t.csv", "1,2\n3,oops\n");
    try {
        mmc::load_matrix(path);
        FAIL() << "expected a parse error";
    } catch (const mmc::ParseError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("line 2"), std::string::npos) << what;
        EXPECT_NE(what.find("oops"), std::string::npos) << what;
    }
}

TEST(LoadMatrix, ValidatesExpectedRowCount) {
    const fs::path dir = temp_dir("rows");
    const fs::path path = write_file(dir, "m.csv", "1,2\n3,4\n");
    EXPECT_NO_THROW(mmc::load_matrix(path, 2));
    EXPECT_THROW(mmc::load_matrix(path, 3), mmc::ParseError);
}

TEST(LoadMatrix, MissingFileNamesThePath) {
    try {
        mmc::load_matrix("/nonexistent/nowhere.csv");
        FAIL() << "expected a parse error";
    } catch (const mmc::ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/nowhere.csv"), std::string::npos);
    }
}

TEST(LoadMatrix, WriteThenLoadIsBitwiseIdentity) {
    const fs::path dir = temp_dir("roundtrip");
    std::mt19937_64 rng(7);
    Eigen::MatrixXd m = testsupport::random_gaussian(7, 4, rng);
    m(0, 0) = 1e-17;
    m(1, 1) = -3.0;
    m(2, 2) = 12345678.987654321;
    m(3, 3) = 0.0;
    const fs::path path = dir / "m.csv";
    mmc::write_matrix(path, m);
    ASSERT_TRUE(mmc::load_matrix(path) == m);
}

TEST(LoadLabels, ReadsAndValidates) {
    const fs::path dir = temp_dir("labels");
    const fs::path path = write_file(dir, "l.labels", "0\n2\n1\n");
    const mmc::LabelVector labels = mmc::load_labels(path, 3);
    EXPECT_EQ(labels, (mmc::LabelVector{0, 2, 1}));
    EXPECT_THROW(mmc::load_labels(path, 4), mmc::ParseError);
    EXPECT_THROW(mmc::load_labels(write_file(dir, "neg.labels", "0\n-1\n")), mmc::ParseError);
    EXPECT_THROW(mmc::load_labels(write_file(dir, "two.labels", "0 1\n")), mmc::ParseError);
}

TEST(LoadPairs, ReadsTabSeparatedIndexPairs) {
    const fs::path dir = temp_dir("pairs");
    const auto pairs = mmc::load_pairs(write_file(dir, "p.pairs", "0\t3\n2\t1\n"));
    ASSERT_EQ(pairs.size(), 2u);
    const std::pair<Eigen::Index, Eigen::Index> first{0, 3};
    const std::pair<Eigen::Index, Eigen::Index> second{2, 1};
    EXPECT_EQ(pairs[0], first);
    EXPECT_EQ(pairs[1], second);
    EXPECT_TRUE(mmc::load_pairs(write_file(dir, "empty.pairs", "")).empty());
    try {
        mmc::load_pairs(write_file(dir, "bad.pairs", "0\t1\n2\n"));
        FAIL() << "expected a parse error";
    } catch (const mmc::ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

// A tiny but complete on-disk dataset: two sources, one feature view each,
// labels for the first source, and one pairs file.
struct DiskDataset {
    fs::path dir;
    fs::path json;
};

DiskDataset tiny_dataset(const std::string& name) {
    DiskDataset d;
    d.dir = temp_dir(name);
    std::mt19937_64 rng(99);
    mmc::write_matrix(d.dir / "a.csv", testsupport::random_gaussian(6, 3, rng));
    mmc::write_matrix(d.dir / "b.csv", testsupport::random_gaussian(5, 2, rng));
    write_file(d.dir, "a.labels", "0\n0\n0\n1\n1\n1\n");
    write_file(d.dir, "ab.pairs", "0\t0\n1\t1\n4\t3\n");
    d.json = write_file(d.dir, "dataset.json", R"({
      "sources": [
        {"name": "alpha", "n": 6, "clusters": 2, "labels_path": "a.labels",
         "views": [{"path": "a.csv", "kind": "features"}]},
        {"name": "bravo", "n": 5, "clusters": 2,
         "views": [{"path": "b.csv", "kind": "features"}]}
      ],
      "mappings": [
        {"source_a": 0, "source_b": 1, "pairs_path": "ab.pairs"}
      ]
    })");
    return d;
}

TEST(LoadDataset, MinimalSingleSourceDataset) {
    const fs::path dir = temp_dir("minimal");
    std::mt19937_64 rng(5);
    mmc::write_matrix(dir / "x.csv", testsupport::random_gaussian(5, 2, rng));
    const fs::path json = write_file(dir, "d.json", R"({
      "sources": [{"n": 5, "clusters": 2, "views": [{"path": "x.csv"}]}]
    })");
    const mmc::LoadedDataset loaded =
        mmc::load_dataset(mmc::DatasetSpec::load(json), mmc::MmcConfig{});
    EXPECT_EQ(loaded.problem.sources.size(), 1u);
    EXPECT_TRUE(loaded.problem.pairs.empty());
    EXPECT_EQ(loaded.problem.sources[0].laplacians.size(), 1u);
    EXPECT_EQ(loaded.problem.sources[0].instances(), 5);
    EXPECT_EQ(loaded.problem.sources[0].name, "source0");
    EXPECT_DOUBLE_EQ(loaded.problem.sources[0].view_weights[0], 0.1);
    EXPECT_FALSE(loaded.truth[0].has_value());
    EXPECT_TRUE(loaded.warnings.empty());
}

TEST(LoadDataset, PairsFileRowsBecomeKnownEntries) {
    const DiskDataset d = tiny_dataset("pairs_count");
    const mmc::LoadedDataset loaded =
        mmc::load_dataset(mmc::DatasetSpec::load(d.json), mmc::MmcConfig{});
    ASSERT_EQ(loaded.problem.pairs.size(), 1u);
    const mmc::MappingState& mapping = loaded.problem.pairs[0].mapping;
    EXPECT_EQ(mapping.known().sum(), 3.0);
    EXPECT_EQ(mapping.known()(0, 0), 1.0);
    EXPECT_EQ(mapping.known()(1, 1), 1.0);
    EXPECT_EQ(mapping.known()(4, 3), 1.0);
    ASSERT_TRUE(loaded.truth[0].has_value());
    EXPECT_EQ(loaded.truth[0]->size(), 6u);
    EXPECT_FALSE(loaded.truth[1].has_value());
    ASSERT_EQ(loaded.pairs.size(), 1u);
    EXPECT_EQ(loaded.pairs[0].known_pairs.size(), 3u);
    EXPECT_DOUBLE_EQ(loaded.pairs[0].beta, 1.0);
}

TEST(LoadDataset, SimilarityViewsClampWithWarning) {
    const fs::path dir = temp_dir("clamp");
    write_file(dir, "s.csv", "1,0.5,0\n0.5,1,-0.25\n0,-0.25,1\n");
    const fs::path json = write_file(dir, "d.json", R"({
      "sources": [{"n": 3, "clusters": 2,
                   "views": [{"path": "s.csv", "kind": "similarity"}]}]
    })");
    const mmc::LoadedDataset loaded =
        mmc::load_dataset(mmc::DatasetSpec::load(json), mmc::MmcConfig{});
    ASSERT_EQ(loaded.warnings.size(), 1u);
    EXPECT_NE(loaded.warnings[0].find("s.csv"), std::string::npos);
    EXPECT_NE(loaded.warnings[0].find("2"), std::string::npos);
}

TEST(LoadDataset, ErrorsCarryTheFilePath) {
    const fs::path dir = temp_dir("badshape");
    std::mt19937_64 rng(6);
    mmc::write_matrix(dir / "x.csv", testsupport::random_gaussian(4, 2, rng));
    const fs::path json = write_file(dir, "d.json", R"({
      "sources": [{"n": 5, "clusters": 2, "views": [{"path": "x.csv"}]}]
    })");
    try {
        mmc::load_dataset(mmc::DatasetSpec::load(json), mmc::MmcConfig{});
        FAIL() << "expected a row-count error";
    } catch (const mmc::ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("x.csv"), std::string::npos) << e.what();
    }

    const DiskDataset d = tiny_dataset("badpairs");
    write_file(d.dir, "ab.pairs", "0\t0\n9\t1\n");
    try {
        mmc::load_dataset(mmc::DatasetSpec::load(d.json), mmc::MmcConfig{});
        FAIL() << "expected an out-of-range error";
    } catch (const mmc::DimensionError& e) {
        EXPECT_NE(std::string(e.what()).find("ab.pairs"), std::string::npos) << e.what();
    }
}

TEST(LoadDataset, ReversedSourcePairIsCanonicalized) {
    const DiskDataset d = tiny_dataset("reversed");
    write_file(d.dir, "dataset.json", R"({
      "sources": [
        {"name": "alpha", "n": 6, "clusters": 2,
         "views": [{"path": "a.csv", "kind": "features"}]},
        {"name": "bravo", "n": 5, "clusters": 2,
         "views": [{"path": "b.csv", "kind": "features"}]}
      ],
      "mappings": [
        {"source_a": 1, "source_b": 0, "pairs_path": "ba.pairs", "beta": 0.5}
      ]
    })");
    write_file(d.dir, "ba.pairs", "3\t4\n0\t0\n");
    const mmc::LoadedDataset loaded =
        mmc::load_dataset(mmc::DatasetSpec::load(d.json), mmc::MmcConfig{});
    ASSERT_EQ(loaded.problem.pairs.size(), 1u);
    const mmc::MappingState& mapping = loaded.problem.pairs[0].mapping;
    EXPECT_EQ(mapping.source_i(), 0);
    EXPECT_EQ(mapping.source_j(), 1);
    EXPECT_EQ(mapping.rows(), 6);
    EXPECT_EQ(mapping.cols(), 5);
    EXPECT_EQ(mapping.known()(4, 3), 1.0);
    EXPECT_EQ(mapping.known()(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(loaded.problem.pairs[0].weight, 0.5);
}

TEST(GenerateSynthetic, SameSeedIsBitwiseIdentical) {
    mmc::SynthSpec spec;
    spec.sources = 2;
    spec.views = 2;
    spec.n = 12;
    spec.clusters = 3;
    spec.dim = 4;
    spec.seed = 42;
    const mmc::SynthDataset a = mmc::generate_synthetic(spec);
    const mmc::SynthDataset b = mmc::generate_synthetic(spec);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_EQ(a.truth[k], b.truth[k]);
        for (std::size_t i = 0; i < 2; ++i)
            ASSERT_TRUE(a.features[k][i] == b.features[k][i]);
    }
    ASSERT_EQ(a.pairs.size(), 1u);
    EXPECT_EQ(a.pairs[0].true_pairs, b.pairs[0].true_pairs);
    EXPECT_EQ(a.pairs[0].known_pairs, b.pairs[0].known_pairs);
}

TEST(GenerateSynthetic, KnownPairCountIsFloorOfFractionTimesShared) {
    mmc::SynthSpec spec;
    spec.n = 10;
    spec.overlap_fraction = 0.5;
    spec.known_fraction = 0.6;
    spec.clusters = 2;
    const mmc::SynthDataset data = mmc::generate_synthetic(spec);
    ASSERT_EQ(data.pairs.size(), 1u);
    EXPECT_EQ(data.pairs[0].true_pairs.size(), 5u);
    EXPECT_EQ(data.pairs[0].known_pairs.size(), 3u);
}

TEST(GenerateSynthetic, FullOverlapFullFractionGivesPermutation) {
    mmc::SynthSpec spec;
    spec.n = 9;
    spec.clusters = 3;
    spec.overlap_fraction = 1.0;
    spec.known_fraction = 1.0;
    const mmc::SynthDataset data = mmc::generate_synthetic(spec);
    ASSERT_EQ(data.pairs[0].known_pairs.size(), 9u);
    const mmc::MappingState mapping =
        mmc::build_mapping(9, 9, data.pairs[0].known_pairs, 0, 1);
    for (Eigen::Index r = 0; r < 9; ++r) EXPECT_EQ(mapping.known().row(r).sum(), 1.0);
    for (Eigen::Index c = 0; c < 9; ++c) EXPECT_EQ(mapping.known().col(c).sum(), 1.0);
    // Correspondences connect instances of the same planted cluster.
    for (const auto& [a, b] : data.pairs[0].known_pairs)
        EXPECT_EQ(data.truth[0][static_cast<std::size_t>(a)],
                  data.truth[1][static_cast<std::size_t>(b)]);
}

TEST(GenerateSynthetic, NoiselessViewsClusterPerfectly) {
    mmc::SynthSpec spec;
    spec.sources = 1;
    spec.views = 1;
    spec.n = 12;
    spec.clusters = 3;
    spec.dim = 3;
    spec.separation = 3.0;
    spec.noise = 0.0;
    spec.seed = 3;
    const mmc::SynthDataset data = mmc::generate_synthetic(spec);
    const mmc::SymmetricMatrix laplacian =
        mmc::normalized_laplacian(mmc::gaussian_kernel(data.features[0][0]));
    const mmc::OrthonormalFactor factor = mmc::top_eigvecs(laplacian, 3).factor;
    const mmc::LabelVector labels = mmc::assign_clusters(factor, 3, mmc::ClusterParams{});
    EXPECT_DOUBLE_EQ(mmc::nmi(labels, data.truth[0]), 1.0);
}

TEST(GenerateSynthetic, RejectsMoreClustersThanInstances) {
    mmc::SynthSpec spec;
    spec.n = 3;
    spec.clusters = 5;
    EXPECT_THROW(mmc::generate_synthetic(spec), mmc::ValidationError);
}

TEST(WriteDataset, EmitsTheFullManifestAndReloadsCleanly) {
    mmc::SynthSpec spec;
    spec.sources = 2;
    spec.views = 2;
    spec.n = 8;
    spec.clusters = 2;
    spec.dim = 3;
    spec.known_fraction = 0.5;
    spec.seed = 11;
    const mmc::SynthDataset data = mmc::generate_synthetic(spec);
    const fs::path dir = temp_dir("manifest");
    const fs::path json = mmc::write_dataset(spec, data, dir);
    for (const std::string name :
         {"source0_view0.csv", "source0_view1.csv", "source1_view0.csv", "source1_view1.csv",
          "source0.labels", "source1.labels", "pair_0_1.pairs", "dataset.json"})
        EXPECT_TRUE(fs::exists(dir / name)) << name;

    const mmc::LoadedDataset loaded =
        mmc::load_dataset(mmc::DatasetSpec::load(json), mmc::MmcConfig{});
    EXPECT_EQ(loaded.problem.sources.size(), 2u);
    EXPECT_EQ(loaded.problem.sources[0].laplacians.size(), 2u);
    EXPECT_EQ(loaded.problem.sources[0].instances(), 8);
    ASSERT_EQ(loaded.problem.pairs.size(), 1u);
    EXPECT_EQ(loaded.problem.pairs[0].mapping.known().sum(),
              static_cast<double>(data.pairs[0].known_pairs.size()));
    ASSERT_TRUE(loaded.truth[0].has_value());
    EXPECT_EQ(*loaded.truth[0], data.truth[0]);
    // Feature values survive the round trip bit-for-bit.
    ASSERT_TRUE(mmc::load_matrix(dir / "source1_view0.csv") == data.features[1][0]);
}

TEST(WriteDataset, RepeatedSeedWritesByteIdenticalFiles) {
    mmc::SynthSpec spec;
    spec.n = 6;
    spec.clusters = 2;
    spec.dim = 2;
    spec.seed = 21;
    const fs::path dir_a = temp_dir("bytes_a");
    const fs::path dir_b = temp_dir("bytes_b");
    mmc::write_dataset(spec, mmc::generate_synthetic(spec), dir_a);
    mmc::write_dataset(spec, mmc::generate_synthetic(spec), dir_b);
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        const std::string name = entry.path().filename().string();
        EXPECT_EQ(slurp(entry.path()), slurp(dir_b / name)) << name;
    }
}

TEST(WriteDataset, PartialOverlapPairsFileRowCount) {
    mmc::SynthSpec spec;
    spec.n = 20;
    spec.clusters = 2;
    spec.dim = 2;
    spec.overlap_fraction = 0.5;
    spec.known_fraction = 0.6;
    const fs::path dir = temp_dir("rowcount");
    mmc::write_dataset(spec, mmc::generate_synthetic(spec), dir);
    const auto pairs = mmc::load_pairs(dir / "pair_0_1.pairs");
    EXPECT_EQ(pairs.size(), 6u);  // floor(0.6 * floor(0.5 * 20))
}

TEST(ProblemFromSynthetic, BuildsAValidProblem) {
    mmc::SynthSpec spec;
    spec.sources = 2;
    spec.views = 2;
    spec.n = 10;
    spec.clusters = 2;
    spec.dim = 3;
    spec.seed = 31;
    const mmc::SynthDataset data = mmc::generate_synthetic(spec);
    const mmc::MmcProblem problem = mmc::problem_from_synthetic(data, 0.2, 0.7);
    EXPECT_NO_THROW(problem.validate());
    EXPECT_EQ(problem.sources.size(), 2u);
    EXPECT_EQ(problem.sources[1].laplacians.size(), 2u);
    EXPECT_DOUBLE_EQ(problem.sources[0].view_weights[1], 0.2);
    ASSERT_EQ(problem.pairs.size(), 1u);
    EXPECT_DOUBLE_EQ(problem.pairs[0].weight, 0.7);
    EXPECT_EQ(problem.sources[0].cluster_count, 2);
}

}  // namespace
