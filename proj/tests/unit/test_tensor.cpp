#include "vpflow/tensor.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

namespace {

using vpflow::SymLinMap;
using vpflow::SymTensor2;

using Full2 = std::array<std::array<double, 2>, 2>;
using Full4 = std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2>;

Full2 full(const SymTensor2& t) { return {{{t.xx, t.xy}, {t.xy, t.yy}}}; }

double full_contract(const Full2& a, const Full2& b)
{
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) s += a[i][j] * b[i][j];
    return s;
}

// Rank-one fourth-order tensor a (x) b and its action C : t, all indices spelled out.
Full4 full_outer(const Full2& a, const Full2& b)
{
    Full4 c{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) c[i][j][k][l] = a[i][j] * b[k][l];
    return c;
}

Full2 act(const Full4& c, const Full2& t)
{
    Full2 out{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) out[i][j] += c[i][j][k][l] * t[k][l];
    return out;
}

SymTensor2 random_tensor(std::mt19937& rng)
{
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    return {u(rng), u(rng), u(rng)};
}

TEST(Tensor, NormOfIdentityIsSqrtTwo) { EXPECT_DOUBLE_EQ(vpflow::norm(SymTensor2::identity()), std::sqrt(2.0)); }

TEST(Tensor, OffDiagonalCountsTwice) { EXPECT_DOUBLE_EQ(vpflow::norm(SymTensor2{0.0, 0.0, 1.0}), std::sqrt(2.0)); }

TEST(Tensor, NormOfZeroIsZero) { EXPECT_EQ(vpflow::norm(SymTensor2{}), 0.0); }

TEST(Tensor, ContractionMatchesFullMatrices)
{
    std::mt19937 rng(7);
    for (int n = 0; n < 100; ++n) {
        const auto a = random_tensor(rng);
        const auto b = random_tensor(rng);
        EXPECT_NEAR(vpflow::contract(a, b), full_contract(full(a), full(b)), 1e-13);
        EXPECT_DOUBLE_EQ(vpflow::contract(a, b), vpflow::contract(b, a));
    }
}

TEST(Tensor, OuterOfDiagonalTensors)
{
    const SymLinMap m = vpflow::outer({1.0, 0.0, 0.0}, {1.0, 0.0, 0.0});
    EXPECT_EQ(m(SymTensor2{2.0, 0.0, 0.0}), (SymTensor2{2.0, 0.0, 0.0}));
}

TEST(Tensor, OuterWithZeroIsZeroMap)
{
    std::mt19937 rng(3);
    const SymLinMap m = vpflow::outer(random_tensor(rng), SymTensor2{});
    EXPECT_TRUE(m.matrix().isZero(0.0));
}

TEST(Tensor, OuterMatchesFourthOrderContraction)
{
    std::mt19937 rng(11);
    for (int n = 0; n < 100; ++n) {
        const auto s = random_tensor(rng);
        const auto phi = random_tensor(rng);
        const auto t = random_tensor(rng);
        const SymTensor2 got = vpflow::outer(s, phi)(t);
        const Full2 want = act(full_outer(full(s), full(phi)), full(t));
        EXPECT_NEAR(got.xx, want[0][0], 1e-13);
        EXPECT_NEAR(got.yy, want[1][1], 1e-13);
        EXPECT_NEAR(got.xy, want[0][1], 1e-13);
        EXPECT_NEAR(got.xy, want[1][0], 1e-13);
    }
}

TEST(Tensor, IdentityMapAndComposition)
{
    std::mt19937 rng(5);
    const auto a = vpflow::outer(random_tensor(rng), random_tensor(rng));
    const auto b = vpflow::outer(random_tensor(rng), random_tensor(rng)) + 2.0 * SymLinMap::identity();
    for (int n = 0; n < 20; ++n) {
        const auto t = random_tensor(rng);
        EXPECT_EQ(SymLinMap::identity()(t), t);
        const SymTensor2 lhs = (a * b)(t);
        const SymTensor2 rhs = a(b(t));
        EXPECT_NEAR(lhs.xx, rhs.xx, 1e-12);
        EXPECT_NEAR(lhs.yy, rhs.yy, 1e-12);
        EXPECT_NEAR(lhs.xy, rhs.xy, 1e-12);
    }
}

TEST(Tensor, LinearMapAlgebra)
{
    const SymTensor2 t{1.0, -2.0, 0.5};
    const SymLinMap i = SymLinMap::identity();
    EXPECT_EQ((i + i)(t), 2.0 * t);
    EXPECT_EQ((i - i)(t), SymTensor2{});
    EXPECT_EQ((-i)(t), -t);
}

} // namespace
