#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "shapeboost/basis.hpp"
#include "shapeboost/error.hpp"

using namespace shapeboost;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Periodized uniform B-spline: column j sums the ordinary basis functions
// whose index is congruent to j modulo the number of intervals.
double periodic_oracle(double lo, double hi, int n_inner, int degree, int j, double x) {
    const int n = n_inner + 1;
    const double h = (hi - lo) / n;
    double s = 0.0;
    for (int m = -3; m <= 3; ++m) {
        const int i = j + m * n;
        std::vector<double> local;
        for (int r = 0; r <= degree + 1; ++r) local.push_back(lo + (i - degree + r) * h);
        s += oracle::cox_de_boor(local, 0, degree, x);
    }
    return s;
}

} // namespace

TEST(Knots, EquidistantSplit) {
    const KnotGrid g = make_knots(0.0, 1.0, 1, 0, false);
    EXPECT_EQ(g.lower, 0.0);
    EXPECT_EQ(g.upper, 1.0);
    ASSERT_EQ(g.inner.size(), 1u);
    EXPECT_DOUBLE_EQ(g.inner[0], 0.5);
}

TEST(Knots, CyclicGridHasNoExpansion) {
    const KnotGrid g = make_knots(0.0, kTwoPi, 11, 3, true);
    EXPECT_EQ(g.inner.size(), 11u);
    EXPECT_EQ(g.lower, 0.0);
    EXPECT_DOUBLE_EQ(g.upper, kTwoPi);
    const BasisSpec spec(g);
    EXPECT_EQ(spec.n_basis(), 12u);
}

TEST(Knots, RejectsBadInput) {
    EXPECT_THROW(make_knots(1.0, 0.0, 5, 3, false), InputError);
    EXPECT_THROW(make_knots(0.0, 1.0, 0, 0, false), InputError);
    EXPECT_THROW(make_knots(0.0, 1.0, 2, 3, false), InputError);
    EXPECT_THROW(make_knots(0.0, 1.0, 5, 4, false), InputError);
}

TEST(Basis, NonCyclicCount) {
    EXPECT_EQ(BasisSpec(make_knots(0, 1, 20, 3, false)).n_basis(), 24u);
    EXPECT_EQ(BasisSpec(make_knots(0, 1, 20, 3, true)).n_basis(), 21u);
}

TEST(Basis, HatFunctionsAtMidpoint) {
    const BasisSpec spec(make_knots(0.0, 1.0, 1, 1, false));
    const Vector b = eval_basis(spec, 0.25);
    ASSERT_EQ(b.size(), 3);
    EXPECT_NEAR(b[0], 0.5, 1e-15);
    EXPECT_NEAR(b[1], 0.5, 1e-15);
    EXPECT_NEAR(b[2], 0.0, 1e-15);
}

TEST(Basis, MatchesRecursiveCoxDeBoor) {
    std::mt19937_64 rng(11);
    for (int degree = 0; degree <= 3; ++degree) {
        const int n_inner = 7;
        const BasisSpec spec(make_knots(-1.0, 2.0, n_inner, degree, false));
        const auto t = oracle::full_knots(-1.0, 2.0, n_inner, degree);
        for (double x : oracle::uniform(rng, 50, -1.0, 2.0 - 1e-9)) {
            const Vector b = eval_basis(spec, x);
            for (Eigen::Index j = 0; j < b.size(); ++j)
                EXPECT_NEAR(b[j], oracle::cox_de_boor(t, static_cast<int>(j), degree, x), 1e-13)
                    << "degree " << degree << " x " << x << " j " << j;
        }
    }
}

TEST(Basis, CyclicMatchesPeriodizedSpline) {
    std::mt19937_64 rng(12);
    for (int degree = 1; degree <= 3; ++degree) {
        const BasisSpec spec(make_knots(0.0, kTwoPi, 11, degree, true));
        for (double x : oracle::uniform(rng, 40, 0.0, kTwoPi)) {
            const Vector b = eval_basis(spec, x);
            for (Eigen::Index j = 0; j < b.size(); ++j)
                EXPECT_NEAR(b[j], periodic_oracle(0.0, kTwoPi, 11, degree, static_cast<int>(j), x), 1e-13);
        }
    }
}

TEST(Basis, PartitionOfUnityAndLocalSupport) {
    std::mt19937_64 rng(13);
    for (bool cyclic : {false, true})
        for (int degree = 0; degree <= 3; ++degree) {
            const BasisSpec spec(make_knots(0.0, 5.0, 9, degree, cyclic));
            auto xs = oracle::uniform(rng, 200, 0.0, 5.0);
            xs.push_back(0.0);
            xs.push_back(5.0);
            for (double x : xs) {
                const Vector b = eval_basis(spec, x);
                EXPECT_NEAR(b.sum(), 1.0, 1e-12);
                EXPECT_GE(b.minCoeff(), 0.0);
                if (!cyclic) EXPECT_LE((b.array() != 0.0).count(), degree + 1);
            }
        }
}

TEST(Basis, CyclicWrapsAtPeriod) {
    const BasisSpec spec(make_knots(0.0, kTwoPi, 11, 3, true));
    EXPECT_TRUE(eval_basis(spec, 0.0).isApprox(eval_basis(spec, kTwoPi), 0.0));
    std::mt19937_64 rng(14);
    for (double x : oracle::uniform(rng, 50, 0.0, kTwoPi))
        EXPECT_LE((eval_basis(spec, x) - eval_basis(spec, x + kTwoPi)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Basis, DayOfYearRowsAgree) {
    const BasisSpec spec(make_knots(0.0, 365.0, 20, 3, true));
    const std::vector<double> xs{0.0, 365.0};
    const DesignMatrix d = design(spec, xs);
    EXPECT_EQ(d.values.row(0), d.values.row(1));
}

TEST(Basis, NonCyclicRejectsOutOfRange) {
    const BasisSpec spec(make_knots(0.0, 1.0, 5, 3, false));
    EXPECT_THROW(eval_basis(spec, 1.0001), InputError);
    EXPECT_THROW(eval_basis(spec, -0.1), InputError);
    EXPECT_THROW(eval_basis(spec, std::nan("")), InputError);
    EXPECT_NO_THROW(eval_basis(spec, 1.0));
}

TEST(Basis, DerivativeMatchesFiniteDifference) {
    std::mt19937_64 rng(15);
    for (bool cyclic : {false, true}) {
        const BasisSpec spec(make_knots(0.0, 3.0, 8, 3, cyclic));
        for (double x : oracle::uniform(rng, 30, 0.01, 2.99)) {
            const double h = 1e-6;
            const Vector fd = (eval_basis(spec, x + h) - eval_basis(spec, x - h)) / (2 * h);
            EXPECT_LE((eval_basis_derivative(spec, x) - fd).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
}

TEST(Design, RowsEqualEvaluations) {
    const BasisSpec spec(make_knots(0.0, 1.0, 10, 3, false));
    std::mt19937_64 rng(16);
    const auto xs = oracle::uniform(rng, 40, 0.0, 1.0);
    const DesignMatrix d = design(spec, xs);
    ASSERT_EQ(d.rows(), 40);
    ASSERT_EQ(d.cols(), 14);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        EXPECT_EQ(d.values.row(static_cast<Eigen::Index>(i)).transpose(), eval_basis(spec, xs[i]));
        EXPECT_NEAR(d.values.row(static_cast<Eigen::Index>(i)).sum(), 1.0, 1e-12);
    }
}

TEST(Design, EmptyInput) {
    const BasisSpec spec(make_knots(0.0, 1.0, 4, 2, false));
    const DesignMatrix d = design(spec, std::vector<double>{});
    EXPECT_EQ(d.rows(), 0);
    EXPECT_EQ(d.cols(), 7);
}

TEST(Design, DegreeZeroIndicators) {
    const BasisSpec spec(make_knots(0.0, 4.0, 3, 0, false));
    const std::vector<double> xs{0.0, 1.0, 2.0, 3.0};
    const DesignMatrix d = design(spec, xs);
    EXPECT_TRUE(d.values.isApprox(Matrix::Identity(4, 4)));
}

TEST(Design, ErrorNamesRow) {
    const BasisSpec spec(make_knots(0.0, 1.0, 4, 2, false));
    try {
        (void)design(spec, std::vector<double>{0.5, 0.2, 7.0});
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
    }
}

TEST(Tensor, RowDefinition) {
    DesignMatrix b1{Matrix(1, 2), {}};
    DesignMatrix b2{Matrix(1, 2), {}};
    b1.values << 2.0, 3.0;
    b2.values << 5.0, 7.0;
    const DesignMatrix t = tensor_design(b1, b2);
    Matrix expect(1, 4);
    expect << 10.0, 14.0, 15.0, 21.0;
    EXPECT_EQ(t.values, expect);
}

TEST(Tensor, FactorizationAndUnity) {
    std::mt19937_64 rng(17);
    const auto x1 = oracle::uniform(rng, 30, 0.0, 1.0);
    const auto x2 = oracle::uniform(rng, 30, 0.0, 1.0);
    const DesignMatrix b1 = design(BasisSpec(make_knots(0, 1, 4, 3, false)), x1);
    const DesignMatrix b2 = design(BasisSpec(make_knots(0, 1, 5, 2, true)), x2);
    const DesignMatrix t = tensor_design(b1, b2);
    const auto k = b2.cols();
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        EXPECT_NEAR(t.values.row(i).sum(), 1.0, 1e-12);
        for (Eigen::Index j = 0; j < b1.cols(); ++j)
            for (Eigen::Index c = 0; c < k; ++c) EXPECT_EQ(t.values(i, j * k + c), b1.values(i, j) * b2.values(i, c));
    }
}

TEST(Tensor, OnesFactorIsIdentity) {
    std::mt19937_64 rng(18);
    const DesignMatrix b1 = design(BasisSpec(make_knots(0, 1, 4, 3, false)), oracle::uniform(rng, 10, 0, 1));
    const DesignMatrix ones{Matrix::Ones(10, 1), {}};
    EXPECT_EQ(tensor_design(b1, ones).values, b1.values);
    EXPECT_THROW(tensor_design(b1, DesignMatrix{Matrix::Ones(3, 1), {}}), InputError);
}

TEST(Varying, RowScaling) {
    DesignMatrix bz{Matrix(2, 2), {}};
    bz.values << 0.5, 0.5, 1.0, 0.0;
    const std::vector<double> x{2.0, -1.0};
    Matrix expect(2, 2);
    expect << 1.0, 1.0, -1.0, 0.0;
    EXPECT_EQ(varying_design(x, bz).values, expect);
    EXPECT_EQ(varying_design(std::vector<double>{1.0, 1.0}, bz).values, bz.values);
    EXPECT_TRUE(varying_design(std::vector<double>{0.0, 0.0}, bz).values.isZero());
    EXPECT_THROW(varying_design(std::vector<double>{1.0}, bz), InputError);
}

TEST(Categorical, Indicators) {
    const std::vector<int> ids{1, 2, 1};
    Matrix expect(3, 2);
    expect << 1, 0, 0, 1, 1, 0;
    EXPECT_EQ(categorical_design(ids, 2).values, expect);
    EXPECT_EQ(categorical_design(std::vector<int>{1, 1}, 1).values, Matrix::Ones(2, 1));
    EXPECT_THROW(categorical_design(std::vector<int>{3}, 2), InputError);
    EXPECT_THROW(categorical_design(std::vector<int>{0}, 2), InputError);
}

TEST(Linear, Columns) {
    const std::vector<std::vector<double>> cols{{1.0, 2.0}, {3.0, 4.0}};
    Matrix expect(2, 3);
    expect << 1, 1, 3, 1, 2, 4;
    EXPECT_EQ(linear_design(cols, 2, true).values, expect);
    EXPECT_EQ(linear_design(cols, 2, false).values, expect.rightCols(2));
}
