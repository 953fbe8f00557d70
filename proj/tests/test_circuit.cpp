#include <gtest/gtest.h>

#include "parasim/circuit.hpp"

using namespace parasim;

namespace {

const DipoleSpec kDipole = DipoleSpec::half_wave(7e9);

ArrayGeometry geom(std::size_t na, std::size_t np, double dx = 0.4) {
  return ArrayGeometry::from_wavelengths(na, np, dx, 0.5, kDipole);
}

CVector random_vector(Rng& rng, Eigen::Index n) {
  CVector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = rng.complex_normal();
  return v;
}

LoadConfig random_loads(Rng& rng, std::size_t np, std::size_t na) {
  RVector x(static_cast<Eigen::Index>(np * na));
  for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = rng.uniform(-300.0, 300.0);
  return LoadConfig::from_canonical(x, np, na);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(ParasiticCurrents, OpenCircuitBlocksCurrent) {
  const auto z = assemble_impedance(geom(3, 2));
  const CVector i_a = CVector::Ones(3);
  const CVector i_p = parasitic_currents(z, LoadConfig::open_circuit(2, 3), i_a);
  EXPECT_LT(i_p.norm(), 1e-6 * i_a.norm());
}

TEST(ParasiticCurrents, ScalarCase) {
  const auto z = assemble_impedance(geom(1, 1));
  LoadConfig loads = LoadConfig::open_circuit(1, 1);
  loads.reactances(0, 0) = -37.0;
  const cplx i0(0.3, -0.2);
  const CVector i_p = parasitic_currents(z, loads, CVector::Constant(1, i0));
  const cplx expect = -z.z_m(0, 0) * i0 / (z.z_p(0, 0) + cplx(0.05, -37.0));
  EXPECT_LT(std::abs(i_p(0) - expect), 1e-14);
}

TEST(ParasiticCurrents, Linear) {
  Rng rng(1);
  const auto z = assemble_impedance(geom(2, 3));
  const auto loads = random_loads(rng, 3, 2);
  const CVector i_a = random_vector(rng, 2);
  const CVector a = parasitic_currents(z, loads, i_a), b = parasitic_currents(z, loads, CVector(2.0 * i_a));
  EXPECT_LT((b - 2.0 * a).norm(), 1e-12 * a.norm());
}

TEST(ParasiticCurrents, ResonanceReported) {
  const auto z = assemble_impedance(geom(1, 1));
  LoadConfig loads{0.0, RMatrix::Constant(1, 1, -z.z_p(0, 0).imag())};
  // Lossless load cancelling the self reactance; Re Z_P alone keeps it solvable.
  EXPECT_NO_THROW(ParasiticNetwork(z, loads));
  PartitionedImpedance lossless = z;
  lossless.z_p(0, 0) = cplx(0.0, lossless.z_p(0, 0).imag());
  try {
    ParasiticNetwork net(lossless, loads);
    FAIL() << "expected ResonanceError";
  } catch (const ResonanceError& e) {
    EXPECT_GE(e.condition_number, kResonanceConditionLimit);
    EXPECT_NE(std::string(e.what()).find("condition number"), std::string::npos);
  }
}

TEST(BeamPattern, OpenCircuitIsFlat) {
  const auto g = geom(1, 4);
  const auto z = assemble_impedance(g);
  const ParasiticNetwork net(z, LoadConfig::open_circuit(4, 1));
  for (double th = -kPi; th <= kPi; th += 0.1) EXPECT_NEAR(beam_pattern(th, net, g), 1.0, 1e-6);
}

TEST(BeamPattern, TwoRouteEvaluation) {
  Rng rng(2);
  const auto g = geom(1, 3);
  const auto z = assemble_impedance(g);
  const auto loads = random_loads(rng, 3, 1);
  const ParasiticNetwork net(z, loads);
  const cplx i0(1.3, 0.4);
  const CVector i_p = parasitic_currents(net, CVector::Constant(1, i0));
  for (double th = -1.5; th <= 1.5; th += 0.25) {
    CVector i_tx(4);
    i_tx << i0, i_p;
    const double direct = std::norm((i_tx.transpose() * los_channel(th, g).h()).value()) / std::norm(i0);
    EXPECT_LT(rel(beam_pattern(th, net, g), direct), 1e-12);
  }
}

TEST(BeamPattern, NeedsSingleActive) {
  const auto g = geom(2, 1);
  EXPECT_THROW(beam_pattern(0.0, assemble_impedance(g), LoadConfig::open_circuit(1, 2), g), GeometryError);
}

TEST(EffectiveChannel, NoParasitics) {
  const auto g = geom(4, 0);
  const auto z = assemble_impedance(g);
  const auto ch = multipath_channel(sample_paths(3, 4), g);
  EXPECT_EQ(effective_channel(z, LoadConfig::open_circuit(0, 4), ch), ch.h_a);
  const CMatrix ze = effective_impedance(z, LoadConfig::open_circuit(0, 4));
  EXPECT_TRUE((ze.array() == z.z_a.real().cast<cplx>().array()).all());
}

TEST(EffectiveChannel, OpenCircuitLimit) {
  const auto g = geom(3, 2);
  const auto z = assemble_impedance(g);
  const auto ch = multipath_channel(sample_paths(4, 8), g);
  const auto open = LoadConfig::open_circuit(2, 3);
  EXPECT_LT((effective_channel(z, open, ch) - ch.h_a).norm(), 1e-6 * ch.h_a.norm());
  const CMatrix re_a = z.z_a.real().cast<cplx>();
  EXPECT_LT((effective_impedance(z, open) - re_a).norm(), 1e-6 * re_a.norm());
}

TEST(EffectiveChannel, SnrMatchesBeamPatternForLos) {
  Rng rng(5);
  const auto g = geom(1, 2);
  const auto z = assemble_impedance(g);
  const auto loads = random_loads(rng, 2, 1);
  const double link = 5.36e4;
  const cplx i0(0.02, 0.01);
  for (double th : {-1.2, 0.0, 0.4, 1.5}) {
    const auto ch = los_channel(th, g);
    const double s = snr(z, loads, CVector::Constant(1, i0), ch, link);
    EXPECT_LT(rel(s, link * std::norm(i0) * beam_pattern(th, z, loads, g)), 1e-12);
  }
}

TEST(EffectiveImpedance, QuadraticFormEqualsArrayPower) {
  Rng rng(6);
  const auto g = geom(2, 2);
  const auto z = assemble_impedance(g);
  for (int c = 0; c < 10; ++c) {
    const auto loads = random_loads(rng, 2, 2);
    const ParasiticNetwork net(z, loads);
    const CMatrix ze = effective_impedance(net);
    for (int k = 0; k < 10; ++k) {
      const CVector i_a = random_vector(rng, 2);
      const cplx q = (i_a.adjoint() * ze * i_a).value();
      EXPECT_LT(std::abs(q.imag()), 1e-12 * std::abs(q));
      EXPECT_LT(rel(q.real(), radiated_power(net, i_a)), 1e-10);
    }
  }
}

TEST(RadiatedPower, IsolatedDipole) {
  const auto z = assemble_impedance(geom(1, 0));
  const double p = radiated_power(z, LoadConfig::open_circuit(0, 1), CVector::Ones(1));
  EXPECT_NEAR(p, 73.1, 0.01 * 73.1);
  EXPECT_EQ(p, z.z_a(0, 0).real());
}

TEST(RadiatedPower, PhaseInvariantAndHomogeneous) {
  Rng rng(7);
  const auto z = assemble_impedance(geom(3, 2));
  const auto loads = random_loads(rng, 2, 3);
  const CVector i_a = random_vector(rng, 3);
  const double p = radiated_power(z, loads, i_a);
  EXPECT_GE(p, 0.0);
  EXPECT_LT(rel(radiated_power(z, loads, CVector(std::polar(1.0, 0.9) * i_a)), p), 1e-12);
  EXPECT_LT(rel(radiated_power(z, loads, CVector(cplx(0.0, 3.0) * i_a)), 9.0 * p), 1e-12);
}

TEST(Snr, FullCurrentRouteMatchesEffectiveChannel) {
  Rng rng(8);
  const auto g = geom(3, 4);
  const auto z = assemble_impedance(g);
  for (int c = 0; c < 20; ++c) {
    const auto loads = random_loads(rng, 4, 3);
    const auto ch = multipath_channel(sample_paths(4, derive_seed(8, c)), g);
    const ParasiticNetwork net(z, loads);
    const CVector i_a = random_vector(rng, 3);
    CVector i_tx(15);
    i_tx << i_a, parasitic_currents(net, i_a);
    const double full = 2.0 * std::norm((i_tx.transpose() * ch.h()).value());
    EXPECT_LT(rel(snr(net, i_a, ch, 2.0), full), 1e-10);
  }
}

TEST(Snr, OrthogonalCurrentGivesZero) {
  const auto g = geom(2, 0);
  const auto z = assemble_impedance(g);
  const auto ch = multipath_channel(sample_paths(2, 3), g);
  const CVector h = ch.h_a;
  CVector i_a(2);
  i_a << h(1), -h(0);  // i^T h = 0
  EXPECT_LT(snr(z, LoadConfig::open_circuit(0, 2), i_a, ch, 1.0), 1e-28);
}

TEST(Snr, PhaseInvariantAndLinearInLink) {
  Rng rng(9);
  const auto g = geom(2, 2);
  const auto z = assemble_impedance(g);
  const auto loads = random_loads(rng, 2, 2);
  const auto ch = multipath_channel(sample_paths(3, 9), g);
  const CVector i_a = random_vector(rng, 2);
  const double s = snr(z, loads, i_a, ch, 1.0);
  EXPECT_LT(rel(snr(z, loads, CVector(std::polar(1.0, -2.0) * i_a), ch, 1.0), s), 1e-12);
  EXPECT_LT(rel(snr(z, loads, i_a, ch, 2.0), 2.0 * s), 1e-15);
}

TEST(CurrentsFromVoltages, NoParasitics) {
  const auto z = assemble_impedance(geom(3, 0));
  const CVector v = CVector::Ones(3);
  const CVector i = currents_from_voltages(z, LoadConfig::open_circuit(0, 3), v);
  EXPECT_LT((z.z_a * i - v).norm(), 1e-12);
}

TEST(CurrentsFromVoltages, KirchhoffResidual) {
  Rng rng(10);
  const auto z = assemble_impedance(geom(6, 2));
  const auto loads = random_loads(rng, 2, 6);
  const CVector v = random_vector(rng, 6);
  const ParasiticNetwork net(z, loads);
  const CVector i_a = currents_from_voltages(net, v);
  const CVector i_p = parasitic_currents(net, i_a);
  CVector i_tx(18);
  i_tx << i_a, i_p;
  const CVector port_v = z.full() * i_tx;
  EXPECT_LT((port_v.head(6) - v).norm(), 1e-9 * v.norm());
  // Parasitic ports: Z_TX i + Z_R i_P = 0.
  const CVector loaded = port_v.tail(12) + loads.diagonal().cwiseProduct(i_p);
  EXPECT_LT(loaded.norm(), 1e-9 * v.norm());
}
