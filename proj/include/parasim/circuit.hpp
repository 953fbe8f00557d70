#pragma once

#include <cmath>
#include <limits>
#include <sstream>

#include "parasim/channel.hpp"
#include "parasim/em_model.hpp"

namespace parasim {

/// Parasitic port terminations: a common fixed resistance plus one tunable
/// reactance per parasitic. reactances(i, j) loads parasitic i of row j, so the
/// column-major storage is the canonical parasitic ordering.
struct LoadConfig {
  double fixed_resistance = kDefaultLoadResistance;
  RMatrix reactances;  // N_P x N_A, ohms

  static LoadConfig open_circuit(std::size_t n_parasitic, std::size_t n_active,
                                 double fixed_resistance = kDefaultLoadResistance) {
    return {fixed_resistance, RMatrix::Constant(static_cast<Eigen::Index>(n_parasitic),
                                                static_cast<Eigen::Index>(n_active), kOpenCircuitReactance)};
  }

  static LoadConfig from_canonical(const RVector& x, std::size_t n_parasitic, std::size_t n_active,
                                   double fixed_resistance = kDefaultLoadResistance) {
    if (static_cast<std::size_t>(x.size()) != n_parasitic * n_active)
      throw Error("reactance list has " + std::to_string(x.size()) + " entries, expected " +
                  std::to_string(n_parasitic * n_active));
    LoadConfig out{fixed_resistance, RMatrix(static_cast<Eigen::Index>(n_parasitic),
                                             static_cast<Eigen::Index>(n_active))};
    out.reactances.reshaped() = x;
    return out;
  }

  RVector canonical() const { return reactances.reshaped(); }

  /// diag(Z_R) in canonical order.
  CVector diagonal() const {
    CVector d(reactances.size());
    for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = cplx(fixed_resistance, reactances.reshaped()(k));
    return d;
  }
};

struct EffectiveSystem {
  CVector h_eff;
  CMatrix z_eff;
};

struct BeamformingSolution {
  CVector i_a;
  LoadConfig loads;
  double snr = 0.0;
  double radiated_power = 0.0;
};

/// Factorization of (Z_P + Z_R) for one load configuration. Immutable after
/// construction.
class ParasiticNetwork {
 public:
  ParasiticNetwork(const PartitionedImpedance& z, const LoadConfig& loads) : z_(&z) {
    const auto np = z.z_p.rows();
    if (loads.reactances.size() != np)
      throw Error("load configuration has " + std::to_string(loads.reactances.size()) +
                  " reactances for " + std::to_string(np) + " parasitic ports");
    if (np == 0) return;
    CMatrix a = z.z_p;
    a.diagonal() += loads.diagonal();
    lu_.compute(a);
    const double rc = lu_.rcond();
    condition_ = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    if (!(condition_ < kResonanceConditionLimit)) {
      std::ostringstream msg;
      msg << "parasitic network (Z_P + Z_R) is resonant: condition number " << condition_;
      throw ResonanceError(msg.str(), condition_);
    }
  }

  const PartitionedImpedance& impedance() const { return *z_; }
  double condition_number() const { return condition_; }
  Eigen::Index size() const { return z_->z_p.rows(); }

  /// (Z_P + Z_R)^-1 rhs
  template <typename Rhs>
  CMatrix solve(const Eigen::MatrixBase<Rhs>& rhs) const {
    if (size() == 0) return CMatrix(0, rhs.cols());
    return lu_.solve(rhs);
  }

  /// T = (Z_P + Z_R)^-1 Z_m, so that i_P = -T i_A.
  CMatrix transfer() const { return solve(z_->z_m); }

 private:
  const PartitionedImpedance* z_;
  Eigen::PartialPivLU<CMatrix> lu_;
  double condition_ = 1.0;
};

inline CVector parasitic_currents(const ParasiticNetwork& net, const CVector& i_a) {
  if (net.size() == 0) return CVector(0);
  return -net.solve(net.impedance().z_m * i_a);
}

inline CVector parasitic_currents(const PartitionedImpedance& z, const LoadConfig& loads, const CVector& i_a) {
  return parasitic_currents(ParasiticNetwork(z, loads), i_a);
}

/// G(theta) = |1 - a_P^T (Z_P + Z_R)^-1 z_m|^2 for a single active element.
inline double beam_pattern(double theta, const ParasiticNetwork& net, const ArrayGeometry& geom) {
  if (geom.n_active != 1) throw GeometryError("beam pattern is defined for a single active element");
  if (net.size() == 0) return 1.0;
  const CVector t = net.solve(net.impedance().z_m);
  const cplx v = 1.0 - (steering_x(theta, geom).transpose() * t).value();
  return std::norm(v);
}

inline double beam_pattern(double theta, const PartitionedImpedance& z, const LoadConfig& loads,
                           const ArrayGeometry& geom) {
  return beam_pattern(theta, ParasiticNetwork(z, loads), geom);
}

/// h_eff = h_A - Z_m^T (Z_P + Z_R)^-1 h_P
inline CVector effective_channel(const ParasiticNetwork& net, const ChannelRealization& ch) {
  if (net.size() == 0) return ch.h_a;
  return ch.h_a - net.impedance().z_m.transpose() * net.solve(ch.h_p);
}

inline CVector effective_channel(const PartitionedImpedance& z, const LoadConfig& loads,
                                 const ChannelRealization& ch) {
  return effective_channel(ParasiticNetwork(z, loads), ch);
}

/// Z_eff such that i_A^* Z_eff i_A equals the radiated power of the whole array.
inline CMatrix effective_impedance(const ParasiticNetwork& net) {
  const auto& z = net.impedance();
  const CMatrix re_a = z.z_a.real().cast<cplx>();
  if (net.size() == 0) return re_a;
  const CMatrix t = net.transfer();
  const CMatrix re_p = z.z_p.real().cast<cplx>();
  const CMatrix re_m = z.z_m.real().cast<cplx>();
  return re_a + t.adjoint() * re_p * t - re_m.transpose() * t - t.adjoint() * re_m;
}

inline CMatrix effective_impedance(const PartitionedImpedance& z, const LoadConfig& loads) {
  return effective_impedance(ParasiticNetwork(z, loads));
}

inline EffectiveSystem effective_system(const ParasiticNetwork& net, const ChannelRealization& ch) {
  return {effective_channel(net, ch), effective_impedance(net)};
}

/// Radiated power from the block quadratic form over [i_A; i_P].
inline double radiated_power(const ParasiticNetwork& net, const CVector& i_a) {
  const auto& z = net.impedance();
  const CVector i_p = parasitic_currents(net, i_a);
  CVector i_tx(i_a.size() + i_p.size());
  i_tx << i_a, i_p;
  const RMatrix re = z.full().real();
  const cplx p = (i_tx.adjoint() * (re.cast<cplx>() * i_tx)).value();
  const double scale = i_tx.squaredNorm() * re.norm();
  if (p.real() < -1e-9 * scale) throw SolverError("radiated power is negative: array model is not passive");
  return std::max(p.real(), 0.0);
}

inline double radiated_power(const PartitionedImpedance& z, const LoadConfig& loads, const CVector& i_a) {
  return radiated_power(ParasiticNetwork(z, loads), i_a);
}

/// SNR = link * |i_A^T h_eff|^2 with link = gamma^2 / sigma^2.
inline double snr(const ParasiticNetwork& net, const CVector& i_a, const ChannelRealization& ch, double link) {
  const cplx v = (i_a.transpose() * effective_channel(net, ch)).value();
  return link * std::norm(v);
}

inline double snr(const PartitionedImpedance& z, const LoadConfig& loads, const CVector& i_a,
                  const ChannelRealization& ch, double link) {
  return snr(ParasiticNetwork(z, loads), i_a, ch, link);
}

/// Active currents for voltage sources v_A:
///   i_A = (Z_A - Z_m^T (Z_P + Z_R)^-1 Z_m)^-1 v_A.
inline CVector currents_from_voltages(const ParasiticNetwork& net, const CVector& v_a) {
  const auto& z = net.impedance();
  CMatrix input = z.z_a;
  if (net.size() > 0) input -= z.z_m.transpose() * net.transfer();
  Eigen::PartialPivLU<CMatrix> lu(input);
  const double rc = lu.rcond();
  if (!(rc > 1.0 / kResonanceConditionLimit))
    throw ResonanceError("active input impedance matrix is singular", rc > 0.0 ? 1.0 / rc : INFINITY);
  return lu.solve(v_a);
}

inline CVector currents_from_voltages(const PartitionedImpedance& z, const LoadConfig& loads, const CVector& v_a) {
  return currents_from_voltages(ParasiticNetwork(z, loads), v_a);
}

}  // namespace parasim
