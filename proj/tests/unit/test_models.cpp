#include <gtest/gtest.h>

#include <cmath>

#include "core/models.hpp"
#include "oracles.hpp"

using namespace quasix;
using models::Region;

TEST(Region, PeriodicDistanceAndDiameter) {
  EXPECT_EQ(models::periodic_distance(0, 7, 8), 1);
  EXPECT_EQ(models::periodic_distance(2, 6, 8), 4);
  const Region a = Region::arc(7, 2, 8);  // sites 7, 0
  EXPECT_EQ(a.sites(), (std::vector<int>{7, 0}));
  EXPECT_EQ(a.diameter(), 1);
  EXPECT_TRUE(a.contiguous());
  EXPECT_EQ(distance(a, Region::arc(3, 1, 8)), 3);
  EXPECT_EQ(distance(a, Region::arc(1, 1, 8)), 1);
}

TEST(Region, BallGrowsByOneOnEachSide) {
  const Region x = Region::arc(0, 1, 10);
  const Region b = x.ball(2);
  EXPECT_EQ(b.size(), 5);
  EXPECT_TRUE(b.contains(8));
  EXPECT_TRUE(b.contains(2));
  EXPECT_FALSE(b.contains(3));
  EXPECT_EQ(x.ball(7).size(), 10);
}

TEST(SiteOperators, SpinAlgebra) {
  for (int d : {2, 3}) {
    const MatrixXcd x = models::site_operator("sx", d), y = models::site_operator("sy", d),
                    z = models::site_operator("sz", d);
    // Pauli matrices for d = 2 carry an extra factor 2.
    const double scale = d == 2 ? 2.0 : 1.0;
    EXPECT_LT((x * y - y * x - scale * kI * z).norm(), 1e-14) << d;
  }
  EXPECT_THROW(models::site_operator("sq", 2), Error);
}

TEST(AkltProjector, IsRankFiveProjector) {
  const MatrixXcd p = models::aklt_bond_projector();
  EXPECT_LT((p * p - p).norm(), 1e-13);
  EXPECT_NEAR(p.trace().real(), 5.0, 1e-13);
  EXPECT_LT((p - p.adjoint()).norm(), 1e-14);
}

TEST(BuildModel, ClassicalIsingGroundEnergy) {
  const auto h = models::build_model(models::ModelKind::Tfim, {{"g", 0.0}}, 4);
  const MatrixXcd dense = oracle::dense_hamiltonian(h);
  EXPECT_TRUE(dense.isApprox(MatrixXcd(dense.diagonal().asDiagonal()), 1e-15));
  EXPECT_NEAR(dense.diagonal().real().minCoeff(), -4.0, 1e-14);
}

TEST(BuildModel, RejectsBadInput) {
  EXPECT_THROW(models::build_model(models::ModelKind::Tfim, {{"g", -1.0}}, 6), Error);
  EXPECT_THROW(models::build_model(models::ModelKind::Tfim, {{"h", 1.0}}, 6), Error);
  EXPECT_THROW(models::build_model(models::ModelKind::Aklt, {}, 2), Error);
  EXPECT_THROW(models::parse_model_kind("hubbard"), Error);
  EXPECT_THROW(models::parse_params("g=abc"), Error);
  EXPECT_EQ(models::parse_params("g=2.5, J=1").at("g"), 2.5);
}

TEST(BuildModel, TermsAreHermitianAndTranslated) {
  const auto h = models::build_model(models::ModelKind::Heisenberg, {}, 5);
  EXPECT_EQ(h.terms().size(), 5u * h.generators().size());
  for (const auto& g : h.generators()) EXPECT_LT((g.matrix - g.matrix.adjoint()).norm(), 1e-14);
  const MatrixXcd dense = oracle::dense_hamiltonian(h);
  const MatrixXcd t = oracle::dense_translation(5, 3);
  EXPECT_LT((t * dense - dense * t).norm(), 1e-11);
}

TEST(LiebRobinsonConstants, HandEvaluatedSums) {
  const auto tfim = models::build_model(models::ModelKind::Tfim, {{"g", 2.0}}, 8);
  EXPECT_NEAR(models::lr_constant_s(tfim, 1.0), 4.0 * std::exp(1.0) + 2.0, 1e-12);
  const auto aklt = models::build_model(models::ModelKind::Aklt, {}, 8);
  EXPECT_NEAR(models::lr_constant_s(aklt, 1.0), 4.0 * std::exp(1.0), 1e-12);
  EXPECT_NEAR(models::lr_velocity(2.0, 3.0, 0.5), (1.0 + 6.0) / 0.5, 1e-14);
  const auto lr = models::lr_constants(tfim, 1.0, 2.0);
  EXPECT_NEAR(lr.v_lr, 1.0 + 2.0 * lr.s, 1e-12);
}
