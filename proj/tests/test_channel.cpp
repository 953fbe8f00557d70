#include <gtest/gtest.h>

#include <array>

#include "parasim/channel.hpp"

using namespace parasim;

namespace {

ArrayGeometry geom(std::size_t na, std::size_t np, double dx = 0.4, double dy = 0.5) {
  return ArrayGeometry::from_wavelengths(na, np, dx, dy, DipoleSpec::half_wave(7e9));
}

}  // namespace

TEST(Steering, BroadsideXIsAllOnes) {
  const CVector a = steering_x(0.0, geom(1, 4));
  EXPECT_LT((a - CVector::Ones(4)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Steering, EndfireXTwoParasitics) {
  const CVector a = steering_x(kPi / 2, geom(1, 2));
  EXPECT_LT(std::abs(a(0) - std::polar(1.0, -0.8 * kPi)), 1e-12);
  EXPECT_LT(std::abs(a(1) - std::polar(1.0, 0.8 * kPi)), 1e-12);
}

TEST(Steering, YAtEndfireIsAllOnes) {
  const CVector a = steering_y(kPi / 2, geom(5, 0));
  EXPECT_LT((a - CVector::Ones(5)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Steering, YBroadsideTwoActives) {
  const CVector a = steering_y(0.0, geom(2, 0));
  EXPECT_EQ(a(0), cplx(1.0, 0.0));
  EXPECT_LT(std::abs(a(1) - std::polar(1.0, -kPi)), 1e-12);
}

TEST(Steering, UnitModulusFirstEntryAndConjugateSymmetry) {
  Rng rng(3);
  const auto g = geom(4, 5);
  for (int k = 0; k < 100; ++k) {
    const double th = rng.uniform(-kPi, kPi);
    const CVector ax = steering_x(th, g), ay = steering_y(th, g);
    EXPECT_LT((ax.cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-14);
    EXPECT_LT((ay.cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-14);
    EXPECT_EQ(ay(0), cplx(1.0, 0.0));
    EXPECT_LT((steering_x(-th, g) - ax.conjugate()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((steering_y(-th, g) - ay).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Channel, SinglePathRecoversLos) {
  const auto g = geom(1, 3);
  const double th = 0.7;
  const auto ch = multipath_channel({CVector::Constant(1, 1.0), RVector::Constant(1, th)}, g);
  EXPECT_EQ(ch.h_a(0), cplx(1.0, 0.0));
  EXPECT_LT((ch.h_p - steering_x(th, g)).cwiseAbs().maxCoeff(), 1e-15);
  const CVector h = ch.h();
  EXPECT_EQ(h.size(), 4);
  EXPECT_EQ(h.head(1), ch.h_a);
  EXPECT_EQ(h.tail(3), ch.h_p);
}

TEST(Channel, DestructivePairCancels) {
  const auto g = geom(3, 2);
  PathSet p{CVector(2), RVector::Constant(2, 0.3)};
  p.alphas << 1.0, -1.0;
  const auto ch = multipath_channel(p, g);
  EXPECT_LT(ch.h().cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Channel, UnitPathNorm) {
  const auto g = geom(3, 4);
  const auto ch = los_channel(1.1, g);
  EXPECT_NEAR(ch.h().squaredNorm(), 15.0, 1e-12);
}

TEST(Channel, KroneckerOrderingMatchesNaiveLoop) {
  const auto g = geom(2, 2);
  const auto paths = sample_paths(3, 11);
  const auto ch = multipath_channel(paths, g);
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t i = 0; i < 2; ++i) {
      cplx acc = 0.0;
      for (std::size_t l = 0; l < 3; ++l) {
        const auto li = static_cast<Eigen::Index>(l);
        acc += paths.alphas(li) * steering_y(paths.thetas(li), g)(static_cast<Eigen::Index>(j)) *
               steering_x(paths.thetas(li), g)(static_cast<Eigen::Index>(i));
      }
      acc /= std::sqrt(3.0);
      EXPECT_LT(std::abs(ch.h_p(static_cast<Eigen::Index>(j * 2 + i)) - acc), 1e-14);
    }
  }
}

TEST(Channel, LinearInPathGains) {
  const auto g = geom(2, 3);
  auto p = sample_paths(4, 5);
  const auto base = multipath_channel(p, g);
  p.alphas(2) *= cplx(2.0, -1.0);
  const auto scaled = multipath_channel(p, g);
  auto only = p;
  only.alphas.setZero();
  only.alphas(2) = p.alphas(2) - p.alphas(2) / cplx(2.0, -1.0);
  const auto delta = multipath_channel(only, g);
  EXPECT_LT((scaled.h() - base.h() - delta.h()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Channel, ActiveEnergyAveragesToArraySize) {
  const auto g = geom(4, 0);
  const int n = 100000;
  double acc = 0.0;
  for (int t = 0; t < n; ++t) acc += multipath_channel(sample_paths(4, derive_seed(99, t)), g).h_a.squaredNorm();
  EXPECT_NEAR(acc / n, 4.0, 0.02 * 4.0);
}

TEST(Sampler, Deterministic) {
  const auto a = sample_paths(6, 1234), b = sample_paths(6, 1234);
  EXPECT_EQ(a.alphas, b.alphas);
  EXPECT_EQ(a.thetas, b.thetas);
  EXPECT_THROW(sample_paths(0, 1), Error);
}

TEST(Sampler, GainMeanNearZero) {
  const auto p = sample_paths(100000, 42);
  EXPECT_LT(std::abs(p.alphas.mean()), 0.02);
  EXPECT_NEAR(p.alphas.cwiseAbs2().mean(), 1.0, 0.02);
}

TEST(Sampler, AnglesPassChiSquare) {
  const auto p = sample_paths(100000, 43);
  constexpr int bins = 20;
  std::array<double, bins> counts{};
  for (Eigen::Index l = 0; l < p.thetas.size(); ++l) {
    ASSERT_GE(p.thetas(l), -kPi);
    ASSERT_LT(p.thetas(l), kPi);
    counts[static_cast<std::size_t>((p.thetas(l) + kPi) / (2 * kPi) * bins)] += 1;
  }
  const double expected = 100000.0 / bins;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 36.19);  // 99th percentile, 19 degrees of freedom
}

TEST(Sampler, SeedDerivationSeparatesStreams) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 7), derive_seed(5, 7));
}

TEST(LinkConstant, ReferenceConstants) {
  const double c = link_constant(LinkBudget{}, DipoleSpec::half_wave(7e9));
  EXPECT_NEAR(c, 5.36e4, 0.01 * 5.36e4);
}

TEST(LinkConstant, ScalingLaws) {
  const auto d = DipoleSpec::half_wave(7e9);
  LinkBudget b;
  const double base = link_constant(b, d);
  b.range *= 2;
  EXPECT_NEAR(link_constant(b, d), base / 4, 1e-12 * base);
  b = LinkBudget{};
  b.bandwidth *= 2;
  EXPECT_NEAR(link_constant(b, d), base / 2, 1e-12 * base);
}
