#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mmtensor/errors.hpp"
#include "mmtensor/tensor.hpp"
#include "oracles.hpp"

namespace {

using mmt::DenseTensor;
using mmt::InputError;
using mmt::UnitRankTensor;

TEST(DenseTensor, RejectsInvalidConstruction) {
  EXPECT_THROW(DenseTensor({}, {}), InputError);
  EXPECT_THROW(DenseTensor({2, 0}, {}), InputError);
  EXPECT_THROW(DenseTensor({2, 2}, {1, 2, 3}), InputError);
  EXPECT_THROW(DenseTensor({1}, {std::numeric_limits<double>::quiet_NaN()}), InputError);
  EXPECT_THROW(DenseTensor({1}, {std::numeric_limits<double>::infinity()}), InputError);
}

TEST(DenseTensor, RowMajorLayout) {
  const DenseTensor x({2, 3, 2}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  EXPECT_EQ(x.at({0, 0, 1}), 1.0);
  EXPECT_EQ(x.at({0, 1, 0}), 2.0);
  EXPECT_EQ(x.at({1, 0, 0}), 6.0);
  EXPECT_EQ(x.at({1, 2, 1}), 11.0);
  EXPECT_THROW(x.at({2, 0, 0}), InputError);
  EXPECT_THROW(x.at({0, 0}), InputError);
}

TEST(UnitRankTensor, RejectsInvalidFactors) {
  EXPECT_THROW(UnitRankTensor({}), InputError);
  EXPECT_THROW(UnitRankTensor({{1.0}, {}}), InputError);
  EXPECT_THROW(UnitRankTensor(std::vector<std::vector<double>>{{std::numeric_limits<double>::infinity()}}), InputError);
}

TEST(UnitRankTensor, ZeroComponentIsRepresentable) {
  const auto z = UnitRankTensor::zeros({3, 4});
  EXPECT_TRUE(z.is_zero());
  EXPECT_EQ(z.shape(), (mmt::Shape{3, 4}));
  EXPECT_TRUE(UnitRankTensor({{1, 2}, {0, 0}}).is_zero());
  EXPECT_FALSE(UnitRankTensor({{1, 2}, {0, 1}}).is_zero());
}

TEST(Materialize, HandExamples) {
  EXPECT_EQ(mmt::materialize(UnitRankTensor({{1, 0}, {0, 1}})), DenseTensor({2, 2}, {0, 1, 0, 0}));
  EXPECT_EQ(mmt::materialize(UnitRankTensor({{0, 0}, {5, 7}})), DenseTensor::zeros({2, 2}));
  EXPECT_EQ(mmt::materialize(UnitRankTensor({{1, -2}, {3, 1}})), DenseTensor({2, 2}, {3, 1, -6, -2}));
}

TEST(Materialize, MatchesEntrywiseProducts) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto shape = oracle::random_shape(rng, 1, 4, 6);
    const auto w = oracle::random_unit_rank(rng, shape);
    const auto m = mmt::materialize(w);
    const auto ref = oracle::outer(w.factors());
    ASSERT_EQ(m.shape(), shape);
    for (std::size_t n = 0; n < ref.size(); ++n) EXPECT_DOUBLE_EQ(m.values()[n], ref[n]);
  }
}

TEST(InnerProduct, HandExamples) {
  const DenseTensor x({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(mmt::inner_product(x, UnitRankTensor({{1, 0}, {0, 1}})), 2.0);
  EXPECT_EQ(mmt::inner_product(x, UnitRankTensor({{0, 0}, {1, 1}})), 0.0);
  EXPECT_EQ(mmt::inner_product_dense(x, DenseTensor({2, 2}, {1, 1, 1, 1})), 10.0);
  EXPECT_EQ(mmt::inner_product_dense(DenseTensor::zeros({2, 2}), x), 0.0);
}

TEST(InnerProduct, RejectsShapeMismatch) {
  const DenseTensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_THROW(mmt::inner_product(x, UnitRankTensor({{1, 0}, {0, 1}})), InputError);
  EXPECT_THROW(mmt::inner_product_dense(x, DenseTensor::zeros({3, 2})), InputError);
  EXPECT_THROW(mmt::contract_except(x, UnitRankTensor({{1, 0}, {0, 1}}), 0), InputError);
}

TEST(InnerProduct, MatchesBruteForceOn4x3x2) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto x = oracle::random_dense(rng, {4, 3, 2});
    const auto w = oracle::random_unit_rank(rng, {4, 3, 2});
    EXPECT_TRUE(oracle::close_rel(mmt::inner_product(x, w), oracle::brute_inner(x, w), 1e-12));
  }
}

TEST(InnerProduct, DenseSumIsLinearInComponents) {
  std::mt19937_64 rng(5);
  const mmt::Shape shape{5, 4, 3};
  const auto x = oracle::random_dense(rng, shape);
  const auto a = oracle::random_unit_rank(rng, shape);
  const auto b = oracle::random_unit_rank(rng, shape);
  const auto sum = mmt::add(mmt::materialize(a), mmt::materialize(b));
  EXPECT_TRUE(oracle::close_rel(mmt::inner_product_dense(x, sum),
                                mmt::inner_product(x, a) + mmt::inner_product(x, b), 1e-10));
}

TEST(L1Norm, HandExamples) {
  EXPECT_EQ(mmt::l1_norm(UnitRankTensor({{1, -2}, {3}})), 9.0);
  EXPECT_EQ(mmt::l1_norm(UnitRankTensor({{1, -2}, {0, 0}})), 0.0);
  EXPECT_EQ(mmt::l1_norm(DenseTensor({2, 1}, {3, -6})), 9.0);
}

TEST(L1Norm, ProductFormMatchesMaterializedSum) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    const auto w = oracle::random_unit_rank(rng, oracle::random_shape(rng, 1, 3, 20));
    EXPECT_TRUE(oracle::close_rel(mmt::l1_norm(w), oracle::elementwise_l1(oracle::outer(w.factors())), 1e-10));
  }
}

TEST(ContractExcept, HandExamples) {
  const DenseTensor eye({2, 2}, {1, 0, 0, 1});
  const UnitRankTensor w({{0.3, -0.7}, {1, 0}});
  const auto z = mmt::contract_except(eye, w, 0);
  EXPECT_EQ(z, (std::vector<double>{1, 0}));
  const UnitRankTensor zero_other({{0.3, -0.7}, {0, 0}});
  EXPECT_EQ(mmt::contract_except(DenseTensor({2, 2}, {1, 2, 3, 4}), zero_other, 0),
            (std::vector<double>{0, 0}));
}

TEST(ContractExcept, ConsistentWithInnerProductOn3x4x2) {
  std::mt19937_64 rng(23);
  const auto x = oracle::random_dense(rng, {3, 4, 2});
  const auto w = oracle::random_unit_rank(rng, {3, 4, 2});
  const double ip = mmt::inner_product(x, w);
  for (std::size_t j = 0; j < 3; ++j) {
    const auto z = mmt::contract_except(x, w, j);
    const auto ref = oracle::brute_contract(x, w, j);
    ASSERT_EQ(z.size(), ref.size());
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_TRUE(oracle::close_rel(z[i], ref[i], 1e-12));
    EXPECT_TRUE(oracle::close_rel(mmt::dot(w.factor(j), z), ip, 1e-10));
  }
}

TEST(ContractExcept, RawBufferOverloadAgrees) {
  std::mt19937_64 rng(29);
  const auto x = oracle::random_dense(rng, {6, 5, 3});
  const auto w = oracle::random_unit_rank(rng, {6, 5, 3});
  for (std::size_t j = 0; j < 3; ++j)
    EXPECT_EQ(mmt::contract_except(x, w, j), mmt::contract_except(x.values(), x.shape(), w.factors(), j));
}

// Property sweeps over random shapes.

TEST(TensorProperties, InnerProductAgreesWithMaterialization) {
  std::mt19937_64 rng(101);
  for (int t = 0; t < 200; ++t) {
    const auto shape = oracle::random_shape(rng, 1, 3, 9);
    const auto x = oracle::random_dense(rng, shape);
    const auto w = oracle::random_unit_rank(rng, shape);
    ASSERT_TRUE(oracle::close_rel(mmt::inner_product(x, w),
                                  mmt::inner_product_dense(x, mmt::materialize(w)), 1e-10))
        << "shape " << mmt::shape_to_string(shape);
  }
}

TEST(TensorProperties, ContractionAgreesForEveryMode) {
  std::mt19937_64 rng(103);
  for (int t = 0; t < 200; ++t) {
    const auto shape = oracle::random_shape(rng, 1, 3, 9);
    const auto x = oracle::random_dense(rng, shape);
    const auto w = oracle::random_unit_rank(rng, shape);
    const double ip = oracle::brute_inner(x, w);
    for (std::size_t j = 0; j < shape.size(); ++j)
      ASSERT_TRUE(oracle::close_rel(mmt::dot(w.factor(j), mmt::contract_except(x, w, j)), ip, 1e-10));
  }
}

TEST(TensorProperties, CounterScalingFactorsLeavesTensorUnchanged) {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int t = 0; t < 100; ++t) {
    const auto shape = oracle::random_shape(rng, 2, 3, 8);
    const auto w = oracle::random_unit_rank(rng, shape);
    auto f = w.factors();
    const double c = scale(rng) * (t % 2 ? -1.0 : 1.0);
    for (double& v : f[0]) v *= c;
    for (double& v : f[1]) v /= c;
    const auto a = mmt::materialize(w), b = mmt::materialize(UnitRankTensor(f));
    for (std::size_t n = 0; n < a.size(); ++n)
      ASSERT_TRUE(oracle::close_rel(a.values()[n], b.values()[n], 1e-10));
  }
}

}  // namespace
