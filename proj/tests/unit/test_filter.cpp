#include <gtest/gtest.h>

#include <cmath>

#include "core/ed.hpp"
#include "core/filter.hpp"
#include "core/models.hpp"
#include "oracles.hpp"

using namespace quasix;
using models::Region;

namespace {

struct Chain {
  models::LocalHamiltonian h;
  ed::ChainSpectrum spectrum;
  ed::RealEigenbasis basis;
};

const Chain& tfim8() {
  static const Chain chain = [] {
    auto h = models::build_model(models::ModelKind::Tfim, {{"g", 2.0}}, 8);
    auto spectrum = ed::solve_chain(h, ed::SolveMode::Full);
    auto basis = ed::real_eigenbasis(spectrum);
    return Chain{std::move(h), std::move(spectrum), std::move(basis)};
  }();
  return chain;
}

VectorXcd amplitudes(const VectorXcd& phi, const ed::EigenSector& es) { return es.vectors.adjoint() * phi; }

}  // namespace

TEST(Schedule, FollowsDefinitions) {
  const auto s = filter::make_schedule(3, 2.0, 1.0, 5.0);
  EXPECT_NEAR(s.v_lr, (1.0 + 10.0) / 1.0, 1e-14);
  EXPECT_NEAR(s.time, 3.0 / 11.0, 1e-14);
  EXPECT_NEAR(s.q, s.time / 2.0, 1e-14);
  EXPECT_DOUBLE_EQ(filter::gaussian_factor(0.0, 3.0), 1.0);
  EXPECT_NEAR(filter::gaussian_factor(2.0, 0.5), std::exp(-1.0), 1e-15);
}

TEST(TruncatedKernel, MatchesAdaptiveQuadrature) {
  for (double q : {0.02, 0.3, 1.7})
    for (double time : {0.1, 0.8, 3.0}) {
      const auto kernel = filter::make_truncated_kernel(q, time, 20.0, 25.0);
      for (double w : {0.0, 0.7, 3.3, -9.0, 24.0})
        EXPECT_NEAR(kernel(w), oracle::filter_kernel_quadrature(w, q, time), 1e-10) << q << " " << time << " " << w;
    }
}

TEST(TruncatedKernel, ZeroFrequencyIsErf) {
  for (double q : {0.1, 1.0})
    for (double time : {0.2, 1.0, 4.0}) {
      const auto kernel = filter::make_truncated_kernel(q, time, 5.0, 5.0);
      EXPECT_NEAR(kernel(0.0), std::erf(time / std::sqrt(2.0 * q)), 1e-12);
    }
}

TEST(TruncatedKernel, ApproachesGaussianForLongTimes) {
  const double q = 0.4;
  const auto kernel = filter::make_truncated_kernel(q, 10.0 * std::sqrt(q), 30.0, 30.0);
  for (double w = -30.0; w <= 30.0; w += 0.37) EXPECT_NEAR(kernel(w), filter::gaussian_factor(w, q), 1e-12);
}

TEST(FilterAlgebra, TargetPreservation) {
  const auto& c = tfim8();
  const auto op = ed::named_operator("sz", 2, 8, 0);
  const filter::FilterLab lab(c.spectrum, c.basis, op);
  const int k = 4;
  const auto& es = c.spectrum.eigen[k];
  const VectorXcd raw = amplitudes(lab.momentum_state(op, c.spectrum.sectors[k]), es);
  for (int alpha : {0, 1, 5})
    for (double q : {0.05, 0.5, 3.0}) {
      const MatrixXd o1 = lab.gaussian_filter(es.energies(alpha), q);
      const VectorXcd filtered = amplitudes(lab.momentum_state(o1, c.spectrum.sectors[k]), es);
      EXPECT_LT(std::abs(filtered(alpha) - raw(alpha)), 1e-12) << alpha << " " << q;
    }
}

TEST(FilterAlgebra, OffTargetSuppression) {
  const auto& c = tfim8();
  const auto op = ed::named_operator("sz,sz", 2, 8, 2);
  const filter::FilterLab lab(c.spectrum, c.basis, op);
  for (int k : {0, 3, 4}) {
    const auto& es = c.spectrum.eigen[k];
    const int alpha = k == 0 ? 1 : 0;
    const double delta = ed::isolation_gap(es, alpha);
    const VectorXcd raw = amplitudes(lab.momentum_state(lab.op_eigen(), c.spectrum.sectors[k]), es);
    for (double q : {0.1, 1.0}) {
      const MatrixXd o1 = lab.gaussian_filter(es.energies(alpha), q);
      const VectorXcd filtered = amplitudes(lab.momentum_state(o1, c.spectrum.sectors[k]), es);
      const double factor = std::exp(-q * delta * delta / 2.0);
      for (Eigen::Index b = 0; b < es.energies.size(); ++b) {
        if (b == alpha) continue;
        EXPECT_LE(std::abs(filtered(b)), factor * std::abs(raw(b)) + 1e-14) << k << " " << b;
      }
    }
  }
}

TEST(FilterAlgebra, EigenbasisElementsScaleByGaussian) {
  const auto& c = tfim8();
  const filter::FilterLab lab(c.spectrum, c.basis, ed::named_operator("sx", 2, 8, 1));
  const double et = 3.1, q = 0.7;
  const MatrixXd o1 = lab.gaussian_filter(et, q);
  const VectorXd& e = c.basis.energies;
  for (Eigen::Index r = 0; r < o1.rows(); r += 17)
    for (Eigen::Index col = 0; col < o1.cols(); col += 13)
      EXPECT_NEAR(o1(r, col), lab.op_eigen()(r, col) * std::exp(-q * std::pow(et - e(r) + e(col), 2) / 2.0), 1e-15);
}

TEST(FilterAlgebra, TruncatedFilterConvergesToGaussianFilter) {
  const auto& c = tfim8();
  const filter::FilterLab lab(c.spectrum, c.basis, ed::named_operator("sz", 2, 8, 0));
  const double et = c.spectrum.eigen[4].energies(0);
  for (double q : {0.05, 0.4}) {
    const double time = 10.0 * std::sqrt(q);
    const MatrixXd o1 = lab.gaussian_filter(et, q);
    const MatrixXd o2 = lab.truncated_filter(et, lab.kernel_for(et, q, time));
    EXPECT_LT((o2 - o1).cwiseAbs().maxCoeff(), 1e-12 * lab.op_norm()) << q;
    // Halving T leaves a visible Gaussian tail.
    const MatrixXd short_o2 = lab.truncated_filter(et, lab.kernel_for(et, q, time / 4.0));
    EXPECT_GT((short_o2 - o1).cwiseAbs().maxCoeff(), 1e-6) << q;
  }
}

TEST(FilterAlgebra, ParsevalAndSeminormDecomposition) {
  const auto& c = tfim8();
  const auto op = ed::named_operator("random2", 2, 8, 0, 3);
  ed::RegionOperator real_op{op.region, op.matrix.real().cast<cplx>(), "real"};
  const filter::FilterLab lab(c.spectrum, c.basis, real_op);
  for (int k = 0; k < 8; ++k) {
    const auto& es = c.spectrum.eigen[k];
    const VectorXcd phi = lab.momentum_state(lab.gaussian_filter(es.energies(0), 0.3), c.spectrum.sectors[k]);
    EXPECT_NEAR(amplitudes(phi, es).squaredNorm(), phi.squaredNorm(), 1e-10);
    for (int alpha : {0, 2}) {
      const double overlap = std::abs(es.vectors.col(alpha).dot(phi));
      const double semi = filter::seminorm_prime(phi, alpha, es);
      EXPECT_NEAR(overlap * overlap + semi * semi, phi.squaredNorm(), 1e-10);
      EXPECT_LE(semi, phi.norm() + 1e-14);
    }
  }
}

TEST(Seminorm, TrivialStates) {
  const auto& es = tfim8().spectrum.eigen[2];
  const VectorXcd a = es.vectors.col(0), b = es.vectors.col(1);
  EXPECT_NEAR(filter::seminorm_prime(a, 0, es), 0.0, 1e-12);
  EXPECT_NEAR(filter::seminorm_prime(b, 0, es), 1.0, 1e-12);
  EXPECT_NEAR(filter::seminorm_prime((a + b) / std::sqrt(2.0), 0, es), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_EQ(filter::spectral_weight(a, 0, es, 0.0), 0.0);
}

TEST(SpectralWeight, SingleMagnonIsVisibleToSz) {
  const auto& c = tfim8();
  const auto op = ed::named_operator("sz", 2, 8, 0);
  for (int k = 0; k < 8; ++k) {
    const int alpha = k == 0 ? 1 : 0;
    const VectorXcd phi = ed::momentum_state(op, c.spectrum.sectors[k], c.spectrum.ground_state);
    EXPECT_GT(filter::spectral_weight(phi, alpha, c.spectrum.eigen[k], 1.0), 0.1) << k;
  }
}

TEST(TheoremBound, DefinedOnlyWhenFactorBelowOne) {
  const auto undefined = filter::theorem_bound(1, 0.5, 1.0, 10.0, 3.0, 1.0);
  EXPECT_FALSE(undefined.defined);
  EXPECT_EQ(undefined.value, 0.0);
  const int ell = 400;
  const double f = 0.8, de = 2.0, v = 20.0, dx = 0.3, c = 1.0;
  const double decay = std::exp(-de * ell / (2.0 * v));
  const double factor = (c + dx / f) * decay;
  const auto b = filter::theorem_bound(ell, f, de, v, dx, c);
  EXPECT_TRUE(b.defined);
  EXPECT_TRUE(b.beyond_ell0);
  EXPECT_NEAR(b.factor, factor, 1e-15);
  EXPECT_NEAR(b.value, 1.0 - (1.0 + c + dx) / (1.0 - factor) * decay / f, 1e-15);
  EXPECT_EQ(filter::theorem_bound(3, 0.0, de, v, dx, c).value, 0.0);
}

TEST(Constants, ClusterAndLocalizationPrefactor) {
  const Region x = Region::arc(0, 2, 20);
  EXPECT_NEAR(filter::cluster_constant(x, 0.5), std::sqrt(1.0 + 4.0), 1e-15);
  const auto sched = filter::make_schedule(2, 1.5, 1.0, 4.0);
  // B_3 of two sites has 8 sites and diameter 7.
  const double expected = 2.0 * std::sqrt(7.0 + 8.0 / 0.5) / (4.0 * 1.0 * std::sqrt(2.0 * kPi * sched.q));
  EXPECT_NEAR(filter::localization_prefactor(x, 2, 0.5, sched), expected, 1e-14);
  EXPECT_THROW(filter::cluster_constant(x, 0.0), Error);
}

TEST(Pipeline, FidelityImprovesAndLocalizationIsBounded) {
  const auto& c = tfim8();
  filter::PipelineOptions opt;
  opt.momentum_index = 4;
  opt.ell_max = 3;
  const auto res = filter::run_filter_pipeline(c.h, c.spectrum, c.basis, ed::named_operator("sz", 2, 8, 0), opt);
  ASSERT_EQ(res.rows.size(), 3u);
  EXPECT_TRUE(res.fidelity_nondecreasing);
  const oracle::FreeFermionTfim ff{8, 2.0};
  EXPECT_NEAR(res.target_energy, ff.single_magnon(4), 1e-9);
  for (const auto& r : res.rows) {
    EXPECT_LE(r.localization_error, r.localization_bound);
    EXPECT_NEAR(r.overlap * r.overlap + r.seminorm * r.seminorm, r.norm * r.norm, 1e-10);
    EXPECT_GE(r.fidelity, 0.0);
    EXPECT_LE(r.fidelity, 1.0 + 1e-12);
  }
  auto scaled = opt;
  scaled.delta_e_scale = 10.0;
  const auto res10 = filter::run_filter_pipeline(c.h, c.spectrum, c.basis, ed::named_operator("sz", 2, 8, 0), scaled);
  EXPECT_NEAR(res10.delta_e, 10.0 * res.delta_e, 1e-12);
}

TEST(Pipeline, RejectsBadTargets) {
  const auto& c = tfim8();
  filter::PipelineOptions opt;
  opt.momentum_index = 9;
  const auto op = ed::named_operator("sz", 2, 8, 0);
  EXPECT_THROW(filter::run_filter_pipeline(c.h, c.spectrum, c.basis, op, opt), Error);
  opt.momentum_index = 1;
  opt.alpha = 100000;
  EXPECT_THROW(filter::run_filter_pipeline(c.h, c.spectrum, c.basis, op, opt), Error);
  EXPECT_THROW(filter::FilterLab(c.spectrum, c.basis, ed::named_operator("sy", 2, 8, 0)), Error);
}
