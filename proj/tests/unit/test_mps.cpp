#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "core/models.hpp"
#include "core/mps.hpp"
#include "oracles.hpp"

using namespace quasix;

namespace {

MatrixXcd unvec(const VectorXcd& v, int d) { return Eigen::Map<const MatrixXcd>(v.data(), d, d); }
VectorXcd vec(const MatrixXcd& m) { return Eigen::Map<const VectorXcd>(m.data(), m.size()); }

MatrixXcd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937& rng) {
  std::normal_distribution<double> gauss;
  MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = cplx(gauss(rng), gauss(rng));
  return m;
}

// Fixed points by plain power iteration of the two transfer actions.
struct Boundary {
  MatrixXcd l, r;
};

Boundary power_fixed_points(const mps::MpsTensor& t) {
  const int d = t.bond_dim;
  MatrixXcd l = MatrixXcd::Identity(d, d), r = MatrixXcd::Identity(d, d);
  for (int it = 0; it < 400; ++it) {
    MatrixXcd nl = MatrixXcd::Zero(d, d), nr = MatrixXcd::Zero(d, d);
    for (const auto& a : t.a) {
      nl += a.adjoint() * l * a;
      nr += a * r * a.adjoint();
    }
    l = nl / nl.norm();
    r = nr / nr.norm();
  }
  r /= (l * r).trace();
  return {l, r};
}

MatrixXcd heisenberg_bond() {
  MatrixXcd h = MatrixXcd::Zero(9, 9);
  for (const char* s : {"sx", "sy", "sz"}) h += models::kron(models::site_operator(s, 3), models::site_operator(s, 3));
  return h;
}

double sma(double p) { return 5.0 / 27.0 * (5.0 + 3.0 * std::cos(p)); }

}  // namespace

TEST(Transfer, MatchesDirectSums) {
  const auto t = mps::aklt_tensor();
  std::mt19937 rng(4);
  const MatrixXcd x = random_matrix(2, 2, rng);
  const MatrixXcd op = random_matrix(3, 3, rng);
  MatrixXcd right = MatrixXcd::Zero(2, 2), left = MatrixXcd::Zero(2, 2);
  MatrixXcd right_op = MatrixXcd::Zero(2, 2), left_op = MatrixXcd::Zero(2, 2);
  for (int s = 0; s < 3; ++s) {
    right += t.a[s] * x * t.a[s].adjoint();
    left += t.a[s].adjoint() * x * t.a[s];
    for (int sp = 0; sp < 3; ++sp) {
      right_op += op(sp, s) * t.a[s] * x * t.a[sp].adjoint();
      left_op += op(sp, s) * t.a[sp].adjoint() * x * t.a[s];
    }
  }
  EXPECT_LT((unvec(mps::transfer_right(t) * vec(x), 2) - right).norm(), 1e-14);
  EXPECT_LT((unvec(mps::transfer_left(t) * vec(x), 2) - left).norm(), 1e-14);
  EXPECT_LT((unvec(mps::transfer_right(t, op) * vec(x), 2) - right_op).norm(), 1e-13);
  EXPECT_LT((unvec(mps::transfer_left(t, op) * vec(x), 2) - left_op).norm(), 1e-13);
  EXPECT_LT((mps::apply_right(t, x, op) - right_op).norm(), 1e-13);
  EXPECT_LT((mps::apply_left(t, x, op) - left_op).norm(), 1e-13);
}

TEST(Transfer, AkltSpectrumAndFixedPoints) {
  const auto t = mps::aklt_tensor();
  const VectorXcd spec = mps::transfer_spectrum(t);
  ASSERT_EQ(spec.size(), 4);
  EXPECT_NEAR(std::abs(spec(0) - 1.0), 0.0, 1e-12);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(std::abs(spec(i) + 1.0 / 3.0), 0.0, 1e-12);
  const auto fp = mps::transfer_fixed_points(t);
  EXPECT_LT((mps::apply_right(t, fp.r) - fp.r).norm(), 1e-13);
  EXPECT_LT((mps::apply_left(t, fp.l) - fp.l).norm(), 1e-13);
  EXPECT_NEAR(std::abs((fp.l * fp.r).trace() - 1.0), 0.0, 1e-13);
  EXPECT_NEAR(fp.second, 1.0 / 3.0, 1e-12);
  const auto pw = power_fixed_points(t);
  EXPECT_LT((pw.l * (fp.l.trace() / pw.l.trace()) - fp.l).norm(), 1e-12);
}

TEST(Resolvent, MatchesTruncatedPowerSeries) {
  const auto t = mps::aklt_tensor();
  const auto fp = mps::transfer_fixed_points(t);
  std::mt19937 rng(9);
  for (double p : {0.0, 0.3, 2.0, kPi}) {
    const MatrixXcd b = random_matrix(2, 2, rng);
    const MatrixXcd x = mps::regularized_resolvent_apply(t, fp, p, b);
    const MatrixXcd ref = oracle::power_series_resolvent(t, fp.l, fp.r, p, b);
    EXPECT_LE((x - ref).cwiseAbs().maxCoeff(), 1e-10) << p;
  }
}

TEST(Resolvent, UnprojectedSolveAwayFromZeroMomentum) {
  const auto t = mps::aklt_tensor();
  const auto fp = mps::transfer_fixed_points(t);
  std::mt19937 rng(10);
  const MatrixXcd b = random_matrix(2, 2, rng);
  const double p = 1.1;
  const MatrixXcd x = mps::regularized_resolvent_apply(t, fp, p, b, false);
  EXPECT_LT((x - std::polar(1.0, p) * mps::apply_right(t, x) - b).norm(), 1e-12);
}

TEST(BondTerms, EnergyDensityAndOperatorSchmidtForm) {
  const auto t = mps::aklt_tensor();
  const auto fp = mps::transfer_fixed_points(t);
  EXPECT_NEAR(mps::bond_energy(t, fp, models::aklt_bond_projector()), 0.0, 1e-14);
  const MatrixXcd h = heisenberg_bond();
  EXPECT_NEAR(mps::bond_energy(t, fp, h), -4.0 / 3.0, 1e-12);
  const auto mpo = mps::bond_mpo(t, fp, h);
  EXPECT_NEAR(mpo.energy_density, -4.0 / 3.0, 1e-12);
  MatrixXcd sum = MatrixXcd::Zero(9, 9);
  for (std::size_t k = 0; k < mpo.left.size(); ++k) sum += models::kron(mpo.left[k], mpo.right[k]);
  EXPECT_LT((sum - (h + 4.0 / 3.0 * MatrixXcd::Identity(9, 9))).norm(), 1e-12);
}

TEST(GeneralizedEigenproblem, DropsNullDirections) {
  // N = diag(2, 1, 0); H = diag(4, 3, 7) -> retained energies 2 and 3.
  MatrixXcd n = VectorXcd((VectorXcd(3) << 2.0, 1.0, 0.0).finished()).asDiagonal();
  MatrixXcd h = VectorXcd((VectorXcd(3) << 4.0, 3.0, 7.0).finished()).asDiagonal();
  const MatrixXcd u = Eigen::HouseholderQR<MatrixXcd>(MatrixXcd::Random(3, 3)).householderQ();
  const auto lv = mps::excitation_energies(u * n * u.adjoint(), u * h * u.adjoint());
  ASSERT_EQ(lv.rank, 2);
  EXPECT_NEAR(lv.energies(0), 2.0, 1e-12);
  EXPECT_NEAR(lv.energies(1), 3.0, 1e-12);
}

// Assembled matrix elements against finite-window contraction.
class WindowAssembly : public ::testing::TestWithParam<std::tuple<int, double, bool>> {};

TEST_P(WindowAssembly, MatchesBruteForce) {
  const auto [ell, p, heisenberg] = GetParam();
  const auto t = mps::aklt_tensor();
  const MatrixXcd h = heisenberg ? heisenberg_bond() : models::aklt_bond_projector();
  const mps::ExcitationProblem prob(t, h, ell);
  const auto bnd = power_fixed_points(t);
  std::mt19937 rng(static_cast<unsigned>(17 + ell));
  const MatrixXcd pi = prob.projector();
  const VectorXcd b1 = random_matrix(prob.dim(), 1, rng), b2 = random_matrix(prob.dim(), 1, rng);
  const VectorXcd x1 = pi * b1, x2 = pi * b2;
  EXPECT_LT(std::abs(prob.constraint().cwiseProduct(x1).sum()), 1e-12);

  const auto ref = oracle::window_elements(t, bnd.l, bnd.r, h, ell, x1, x2, p);
  const cplx raw_n = x1.dot(prob.raw_norm_matrix(p) * x2);
  const cplx raw_h = x1.dot(prob.raw_hamiltonian_matrix(p) * x2);
  EXPECT_LE(std::abs(raw_n - ref.norm), 1e-10);
  EXPECT_LE(std::abs(raw_h - ref.energy), 1e-10);
  const cplx full_n = b1.dot(prob.norm_matrix(p) * b2);
  const cplx full_h = b1.dot(prob.hamiltonian_matrix(p) * b2);
  EXPECT_LE(std::abs(full_n - ref.norm), 1e-10);
  EXPECT_LE(std::abs(full_h - ref.energy), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(SmallBlocks, WindowAssembly,
                         ::testing::Combine(::testing::Values(1, 2), ::testing::Values(0.0, 0.7, 2.2, kPi),
                                            ::testing::Values(false, true)));

TEST(ExcitationProblem, GaugeModesSpanTheNullSpace) {
  const auto t = mps::aklt_tensor();
  for (int ell : {1, 2}) {
    const mps::ExcitationProblem prob(t, models::aklt_bond_projector(), ell);
    const VectorXcd a = prob.ground_block();
    const Eigen::Index blk = a.size() / 4;
    for (double p : {0.9, kPi}) {
      const cplx phase = std::polar(1.0, p * ell);
      // X A - e^{i p ell} A X for the four elementary X.
      MatrixXcd gauge(prob.dim(), 4);
      for (int g = 0; g < 4; ++g) {
        const int i = g / 2, j = g % 2;
        VectorXcd v = VectorXcd::Zero(prob.dim());
        for (Eigen::Index sigma = 0; sigma < blk; ++sigma)
          for (int beta = 0; beta < 2; ++beta) {
            // (X A)[i, beta] = A[j, beta]; (A X)[alpha, j] = A[alpha, i].
            v((i * blk + sigma) * 2 + beta) += a((j * blk + sigma) * 2 + beta);
            for (int alpha = 0; alpha < 2; ++alpha)
              if (beta == j) v((alpha * blk + sigma) * 2 + beta) -= phase * a((alpha * blk + sigma) * 2 + i);
          }
        gauge.col(g) = v;
      }
      const MatrixXcd n = prob.norm_matrix(p);
      EXPECT_LT((n * gauge).norm(), 1e-10) << ell << " " << p;
      const auto lv = prob.solve(p);
      EXPECT_LE(lv.rank, prob.dim() - 4) << ell << " " << p;
      // The ground block itself lies in the gauge span.
      const VectorXcd coeff = gauge.colPivHouseholderQr().solve(a);
      EXPECT_LT((gauge * coeff - a).norm(), 1e-10);
    }
  }
}

TEST(ExcitationProblem, SingleSiteReproducesSingleModeApproximation) {
  const mps::ExcitationProblem prob(mps::aklt_tensor(), models::aklt_bond_projector(), 1);
  const auto at_pi = prob.solve(kPi);
  EXPECT_EQ(at_pi.rank, 8);
  EXPECT_NEAR(at_pi.energies(0), 10.0 / 27.0, 1e-9);
  EXPECT_EQ(at_pi.lowest_degeneracy, 3);
  EXPECT_LT(at_pi.hermiticity_residual, 1e-10);
  for (double p = 0.1; p < 2.0 * kPi; p += 0.37) EXPECT_LE(prob.solve(p).energies(0), sma(p) + 1e-9) << p;
}

TEST(ExcitationProblem, VariationalMonotonicityAndTriplet) {
  const auto t = mps::aklt_tensor();
  std::vector<mps::ExcitationProblem> probs;
  for (int ell = 1; ell <= 4; ++ell) probs.emplace_back(t, models::aklt_bond_projector(), ell);
  for (double p : {0.0, 0.5, 1.3, 2.4, kPi}) {
    double previous = 1e9;
    for (const auto& prob : probs) {
      const auto lv = prob.solve(p);
      EXPECT_LE(lv.energies(0), previous + 1e-10) << p << " " << prob.ell();
      EXPECT_LT(lv.hermiticity_residual, 1e-10);
      previous = lv.energies(0);
      if (p > 1.0) EXPECT_EQ(lv.lowest_degeneracy, 3) << p << " " << prob.ell();
    }
  }
}

TEST(ExcitationProblem, ZeroMomentumExcludesGroundState) {
  const mps::ExcitationProblem prob(mps::aklt_tensor(), models::aklt_bond_projector(), 2);
  const auto lv = prob.solve(0.0, 1e-10, true);
  EXPECT_GT(lv.energies(0), 0.35);
  const VectorXcd w = prob.constraint();
  for (Eigen::Index j = 0; j < lv.vectors.cols(); ++j) EXPECT_LT(std::abs(w.cwiseProduct(lv.vectors.col(j)).sum()), 1e-10);
}

TEST(ExcitationProblem, ChargeBlocksCoverIndexSpace) {
  const mps::ExcitationProblem prob(mps::aklt_tensor(), models::aklt_bond_projector(), 2);
  Eigen::Index total = 0;
  for (std::size_t b = 0; b < prob.blocks().size(); ++b) {
    for (auto i : prob.blocks()[b]) EXPECT_EQ(prob.index_charge(i), prob.block_charges()[b]);
    total += static_cast<Eigen::Index>(prob.blocks()[b].size());
  }
  EXPECT_EQ(total, prob.dim());
  EXPECT_THROW(mps::ExcitationProblem(mps::aklt_tensor(), MatrixXcd::Identity(4, 4), 1), Error);
}

TEST(Continuum, CosineBandHasClosedFormEdges) {
  const int grid = 64;
  const double a = 1.2, b = 0.4;
  std::vector<double> band(grid);
  for (int j = 0; j < grid; ++j) band[j] = a - b * std::cos(2.0 * kPi * j / grid);
  const auto edges = mps::continuum_edges(band);
  ASSERT_EQ(edges.momentum.size(), static_cast<std::size_t>(grid));
  for (int j = 0; j < grid; ++j) {
    const double p = edges.momentum[j];
    EXPECT_NEAR(edges.two_magnon[j], 2.0 * a - 2.0 * b * std::abs(std::cos(p / 2.0)), 1e-8) << p;
    double best = -3.0;
    for (int m = 0; m < 3; ++m) best = std::max(best, 3.0 * std::cos((p + 2.0 * kPi * m) / 3.0));
    EXPECT_NEAR(edges.three_magnon[j], 3.0 * a - b * best, 1e-4) << p;
    EXPECT_NEAR(edges.two_magnon[j], edges.two_magnon[(grid - j) % grid], 1e-10);
  }
}

TEST(Continuum, ConvolutionAgreesWithExhaustiveScan) {
  const int grid = 32;
  auto f = [](double k) { return 0.8 + 0.3 * std::cos(k) - 0.1 * std::cos(2.0 * k) + 0.05 * std::sin(3.0 * k); };
  auto g = [](double k) { return 0.5 - 0.2 * std::cos(k - 0.3); };
  std::vector<double> fs(grid), gs(grid);
  for (int j = 0; j < grid; ++j) {
    fs[j] = f(2.0 * kPi * j / grid);
    gs[j] = g(2.0 * kPi * j / grid);
  }
  for (double p : {0.0, 0.6, 2.0, kPi}) {
    double best = 1e9;
    for (int i = 0; i < 200000; ++i) {
      const double k = 2.0 * kPi * i / 200000;
      best = std::min(best, f(k) + g(p - k));
    }
    EXPECT_NEAR(mps::min_convolution(fs, gs, p), best, 1e-8) << p;
  }
}
