#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include <sdar/sdar.hpp>

#include "test_support.hpp"

using namespace sdar;

namespace {

Dataset parse(const std::string& text, std::optional<Index> p = std::nullopt) {
    std::istringstream in(text);
    return read_libsvm(in, p);
}

long parse_error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return -1;
}

} // namespace

TEST(Libsvm, SingleFeatureWithGivenP) {
    const Dataset d = parse("1 3:0.5\n", 4);
    ASSERT_EQ(d.n(), 1);
    ASSERT_EQ(d.p(), 4);
    EXPECT_EQ(d.y[0], 1.0);
    EXPECT_EQ(d.X.row(0).transpose(), (VectorXd(4) << 0, 0, 0.5, 0).finished());
}

TEST(Libsvm, InfersPFromLargestIndexAndKeepsLabels) {
    const Dataset d = parse("-1 1:2 2:-3\n+1 5:1e-3  # trailing comment\n\n# full comment line\n");
    ASSERT_EQ(d.n(), 2);
    ASSERT_EQ(d.p(), 5);
    EXPECT_EQ(d.y[0], -1.0);
    EXPECT_EQ(d.y[1], 1.0);
    EXPECT_EQ(d.X(0, 0), 2.0);
    EXPECT_EQ(d.X(0, 1), -3.0);
    EXPECT_EQ(d.X(1, 4), 1e-3);
    EXPECT_EQ(d.feature_names[4], "f5");
}

TEST(Libsvm, ErrorsCarryLineNumbers) {
    EXPECT_EQ(parse_error_line("1 1:2\n1 3:1 2:4\n"), 2);
    EXPECT_EQ(parse_error_line("1 1:2\n\n1 2:2 2:3\n"), 3);
    EXPECT_EQ(parse_error_line("abc 1:2\n"), 1);
    EXPECT_EQ(parse_error_line("1 1:2\n1 0:3\n"), 2);
    EXPECT_EQ(parse_error_line("1 1:x\n"), 1);
    EXPECT_EQ(parse_error_line("1 12\n"), 1);
    EXPECT_EQ(parse_error_line("# nothing\n"), 1);
    EXPECT_THROW(parse("1 5:1\n", 3), ParseError);
    EXPECT_THROW(read_libsvm(std::string("/nonexistent/file.libsvm")), Error);
}

TEST(Libsvm, RoundTripIsExact) {
    Dataset d = fixtures::random_dataset(GlmFamily::gaussian(), 15, 9, 2);
    for (Index i = 0; i < 15; ++i)
        for (Index j = 0; j < 9; ++j)
            if ((i + j) % 3 == 0) d.X(i, j) = 0.0;
    d.X(3, 2) = 1e-300;
    d.X(4, 2) = -0.1;
    std::ostringstream out;
    write_libsvm(out, d);
    const Dataset back = parse(out.str(), 9);
    EXPECT_EQ(back.X, d.X);
    EXPECT_EQ(back.y, d.y);
}

TEST(Labels, MinusOneBecomesZero) {
    EXPECT_EQ(map_labels_to_binary((VectorXd(3) << -1, 1, -1).finished()), (VectorXd(3) << 0, 1, 0).finished());
    EXPECT_EQ(map_labels_to_binary((VectorXd(2) << 0, 1).finished()), (VectorXd(2) << 0, 1).finished());
}

TEST(Labels, OffendersAreListed) {
    try {
        map_labels_to_binary((VectorXd(2) << 2, 1).finished());
        FAIL() << "expected InvalidLabel";
    } catch (const InvalidLabel& e) {
        EXPECT_NE(std::string(e.what()).find("0(2)"), std::string::npos) << e.what();
    }
    EXPECT_THROW(map_labels_to_binary((VectorXd(3) << -1, 0, 1).finished()), InvalidLabel);
}

TEST(Standardize, SampleVarianceExample) {
    MatrixXd X(3, 1);
    X << 1, 2, 3;
    const MatrixXd Z = standardize_columns(X, Standardization::MeanZeroVarOne);
    EXPECT_NEAR(Z(0, 0), -1.0, 1e-15);
    EXPECT_NEAR(Z(1, 0), 0.0, 1e-15);
    EXPECT_NEAR(Z(2, 0), 1.0, 1e-15);
}

TEST(Standardize, IsIdempotentAndMeetsMomentTolerances) {
    const MatrixXd X = fixtures::random_dataset(GlmFamily::gaussian(), 40, 6, 3).X * 3.0 + MatrixXd::Constant(40, 6, 5.0);
    const MatrixXd Z = standardize_columns(X, Standardization::MeanZeroVarOne);
    for (Index j = 0; j < 6; ++j) {
        EXPECT_LE(std::abs(Z.col(j).mean()), 1e-12);
        EXPECT_NEAR(Z.col(j).squaredNorm() / 39.0, 1.0, 1e-10);
    }
    EXPECT_LE((standardize_columns(Z, Standardization::MeanZeroVarOne) - Z).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Standardize, LengthSqrtN) {
    MatrixXd X(2, 2);
    X << 3, 0, 4, 0;
    const MatrixXd Z = standardize_columns(X, Standardization::LengthSqrtN);
    EXPECT_NEAR(Z(0, 0), 3.0 * std::sqrt(2.0) / 5.0, 1e-15);
    EXPECT_NEAR(Z(1, 0), 4.0 * std::sqrt(2.0) / 5.0, 1e-15);
    EXPECT_EQ(Z.col(1), VectorXd::Zero(2));
}

TEST(Standardize, ConstantColumnIsNamed) {
    MatrixXd X(3, 3);
    X << 1, 7, 0, 2, 7, 1, 3, 7, 0;
    try {
        standardize_columns(X, Standardization::MeanZeroVarOne);
        FAIL() << "expected ZeroVariance";
    } catch (const ZeroVariance& e) {
        EXPECT_EQ(e.column(), 1);
    }
    EXPECT_EQ(constant_columns(X), (std::vector<Index>{1}));
    Dataset d;
    d.X = X;
    d.y = VectorXd::Zero(3);
    d.feature_names = {"a", "b", "c"};
    const Dataset kept = drop_columns(d, constant_columns(X));
    EXPECT_EQ(kept.p(), 2);
    EXPECT_EQ(kept.feature_names, (std::vector<std::string>{"a", "c"}));
    EXPECT_NO_THROW(standardize_columns(kept.X, Standardization::MeanZeroVarOne));
}

TEST(Standardize, TrainingStatisticsApplyToNewRows) {
    const MatrixXd X = fixtures::random_dataset(GlmFamily::gaussian(), 30, 4, 8).X * 2.0;
    const ColumnScaling s = fit_column_scaling(X);
    EXPECT_LE((apply_column_scaling(X, s) - standardize_columns(X, Standardization::MeanZeroVarOne)).lpNorm<Eigen::Infinity>(),
              1e-13);
    EXPECT_THROW(apply_column_scaling(MatrixXd::Zero(3, 5), s), InvalidArgument);
}

TEST(Split, FractionPartitionsTheRows) {
    const Dataset d = fixtures::random_dataset(GlmFamily::gaussian(), 10, 2, 1);
    const Split s = train_test_split(d, 0.8, 5);
    EXPECT_EQ(s.train.n(), 8);
    EXPECT_EQ(s.test.n(), 2);
    std::set<Index> all(s.train_rows.begin(), s.train_rows.end());
    for (Index r : s.test_rows) EXPECT_TRUE(all.insert(r).second);
    EXPECT_EQ(all.size(), 10u);
    for (std::size_t i = 0; i < s.train_rows.size(); ++i)
        EXPECT_EQ(s.train.X.row(static_cast<Index>(i)), d.X.row(s.train_rows[i]));
}

TEST(Split, FullFractionLeavesNoTestSet) {
    const Dataset d = fixtures::random_dataset(GlmFamily::gaussian(), 10, 2, 1);
    const Split s = train_test_split(d, 1.0, 5);
    EXPECT_EQ(s.train.n(), 10);
    EXPECT_EQ(s.test.n(), 0);
}

TEST(Split, SeedDeterminismAndValidation) {
    const Dataset d = fixtures::random_dataset(GlmFamily::gaussian(), 50, 2, 1);
    EXPECT_EQ(train_test_split(d, 0.6, 9).train_rows, train_test_split(d, 0.6, 9).train_rows);
    EXPECT_NE(train_test_split(d, 0.6, 9).train_rows, train_test_split(d, 0.6, 10).train_rows);
    EXPECT_THROW(train_test_split(d, 0.0, 1), InvalidArgument);
    EXPECT_THROW(train_test_split(d, 0.001, 1), InvalidArgument);
    EXPECT_THROW(train_test_split(d, 1.2, 1), InvalidArgument);
    const Split c = train_test_split_counts(d, 30, 15, 2);
    EXPECT_EQ(c.train.n(), 30);
    EXPECT_EQ(c.test.n(), 15);
    EXPECT_THROW(train_test_split_counts(d, 40, 20, 2), InvalidArgument);
}

TEST(Split, PartitionInvariantOverManySeeds) {
    const Dataset d = fixtures::random_dataset(GlmFamily::gaussian(), 23, 1, 1);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const Split s = train_test_split(d, 0.7, seed);
        std::vector<char> seen(23, 0);
        for (Index r : s.train_rows) seen[static_cast<std::size_t>(r)]++;
        for (Index r : s.test_rows) seen[static_cast<std::size_t>(r)]++;
        for (char c : seen) ASSERT_EQ(c, 1);
    }
}
