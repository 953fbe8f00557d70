#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "parasim/channel.hpp"
#include "parasim/circuit.hpp"

namespace parasim {

/// Parasitic weight w = 1 / (Z_self + Z_R) in polar form. Confined to the
/// circle |w/zeta - 1/2| = 1/2 (Lorentzian constraint); phi = 2 * varphi is
/// the equivalent unit-modulus phase after the shift of origin
/// w / zeta = (1 + e^{j phi}) / 2.
struct LorentzianWeight {
  double zeta = 0.0;    // 1 / (Re Z_self + Re Z_R), 1/ohm
  double varphi = 0.0;  // arg(w), [-pi/2, pi/2]
  double phi = 0.0;     // 2 * varphi, (-pi, pi]

  cplx value() const { return zeta * std::cos(varphi) * std::polar(1.0, varphi); }

  static LorentzianWeight from_phi(double zeta, double phi) { return {zeta, phi / 2.0, phi}; }
};

/// Diagonal-plus-perturbation view of (Z_P + Z_R)^-1: Z_P = D_P + E_P and
/// W^-1 = D_P + Z_R.
struct ApproxObjective {
  CVector d_p;
  CMatrix e_p;
  CVector w;
};

inline ApproxObjective make_approx_objective(const PartitionedImpedance& z, const LoadConfig& loads) {
  ApproxObjective out;
  out.d_p = z.z_p.diagonal();
  out.e_p = z.z_p;
  out.e_p.diagonal().setZero();
  out.w = (out.d_p + loads.diagonal()).cwiseInverse();
  return out;
}

/// Wraps an angle into (-pi, pi].
inline double wrap_phase(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

/// G_hat(theta) = |1 - a_P^T W z_m|^2 with W diagonal.
inline double approx_beam_pattern(double theta, const CVector& w_diag, const PartitionedImpedance& z,
                                  const ArrayGeometry& geom) {
  if (geom.n_active != 1) throw GeometryError("approximate beam pattern needs a single active element");
  if (w_diag.size() == 0) return 1.0;
  const CVector a = steering_x(theta, geom);
  const cplx v = 1.0 - (a.array() * w_diag.array() * z.z_m.col(0).array()).sum();
  return std::norm(v);
}

inline std::vector<LorentzianWeight> reactance_to_weight(const LoadConfig& loads, const PartitionedImpedance& z) {
  const CVector zr = loads.diagonal();
  if (zr.size() != z.z_p.rows()) throw Error("load configuration does not match the parasitic count");
  std::vector<LorentzianWeight> out;
  out.reserve(static_cast<std::size_t>(zr.size()));
  for (Eigen::Index k = 0; k < zr.size(); ++k) {
    const cplx total = z.z_p(k, k) + zr(k);
    const double zeta = 1.0 / total.real();
    const double varphi = std::atan(-total.imag() / total.real());
    out.push_back({zeta, varphi, 2.0 * varphi});
  }
  return out;
}

struct ReactanceValue {
  double reactance = 0.0;
  bool open_circuit = false;
};

/// X_R = -X_self - tan(varphi) / zeta. |varphi| = pi/2 maps to the
/// open-circuit sentinel and is flagged.
inline ReactanceValue weight_to_reactance(const LorentzianWeight& w, double self_reactance) {
  const double c = std::cos(w.varphi);
  if (std::abs(w.varphi) >= kPi / 2.0 || std::abs(c) < 1e-15)
    return {-std::copysign(kOpenCircuitReactance, w.varphi), true};
  const double x = -self_reactance - std::tan(w.varphi) / w.zeta;
  if (std::abs(x) >= kOpenCircuitReactance) return {std::copysign(kOpenCircuitReactance, x), true};
  return {x, false};
}

/// Closed-form unit-modulus phases for one group of parasitics sharing the
/// objective |1 - (zeta/2) sum_i b_i (1 + e^{j phi_i})|^2.
struct PhaseSolution {
  RVector phi;                       // (-pi, pi]
  std::vector<std::size_t> flagged;  // elements with b_i == 0 (phase irrelevant)
  cplx chi1;                         // 1 - (zeta/2) sum_i b_i
  double zeta = 0.0;
};

namespace detail {

inline PhaseSolution aligned_phases(const CVector& b, double zeta) {
  PhaseSolution out{RVector::Zero(b.size()), {}, 1.0 - 0.5 * zeta * b.sum(), zeta};
  const double arg_chi1 = std::arg(out.chi1);
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    if (b(i) == cplx(0.0, 0.0)) {
      out.flagged.push_back(static_cast<std::size_t>(i));
      continue;
    }
    // Aligns arg(-zeta/2 e^{j phi_i} b_i) with arg(chi1); m picks the (-pi, pi] branch.
    out.phi(i) = wrap_phase(arg_chi1 - std::arg(b(i)) + kPi);
  }
  return out;
}

// X_i = -X_self - cot((arg b_i - arg chi1) / 2) / zeta
inline ReactanceValue cot_reactance(cplx b, cplx chi1, double zeta, double self_reactance) {
  const double half = 0.5 * (std::arg(b) - std::arg(chi1));
  const double s = std::sin(half);
  if (std::abs(s) < 1e-12 || b == cplx(0.0, 0.0)) return {kOpenCircuitReactance, true};
  const double x = -self_reactance - (std::cos(half) / s) / zeta;
  if (std::abs(x) >= kOpenCircuitReactance) return {std::copysign(kOpenCircuitReactance, x), true};
  return {x, false};
}

inline double common_zeta(const PartitionedImpedance& z, double fixed_resistance) {
  return 1.0 / (z.parasitic_self_impedance().real() + fixed_resistance);
}

}  // namespace detail

/// Phases maximizing G_hat toward theta1 for a single active element.
inline PhaseSolution closed_form_phase(double theta1, const PartitionedImpedance& z, const ArrayGeometry& geom,
                                       double fixed_resistance = kDefaultLoadResistance) {
  if (geom.n_active != 1 || z.n_active != 1) throw GeometryError("closed-form phase needs a single active element");
  const CVector b = steering_x(theta1, geom).cwiseProduct(z.z_m.col(0));
  return detail::aligned_phases(b, detail::common_zeta(z, fixed_resistance));
}

struct LosLoads {
  LoadConfig loads;
  std::vector<std::size_t> flagged;
  double approx_gain = 0.0;  // G_hat at the returned loads
  double true_gain = 0.0;    // G at the returned loads
};

/// Closed-form reactances for a single active element steering to theta1.
inline LosLoads closed_form_reactance_los(double theta1, const PartitionedImpedance& z, const ArrayGeometry& geom,
                                          double fixed_resistance = kDefaultLoadResistance) {
  if (geom.n_active != 1 || z.n_active != 1) throw GeometryError("closed-form reactance needs a single active element");
  const auto np = static_cast<Eigen::Index>(geom.n_parasitic_per_active);
  LosLoads out{LoadConfig{fixed_resistance, RMatrix(np, 1)}, {}, 1.0, 1.0};
  if (np == 0) return out;
  const double zeta = detail::common_zeta(z, fixed_resistance);
  const double self_x = z.parasitic_self_impedance().imag();
  const CVector b = steering_x(theta1, geom).cwiseProduct(z.z_m.col(0));
  const cplx chi1 = 1.0 - 0.5 * zeta * b.sum();
  for (Eigen::Index i = 0; i < np; ++i) {
    const auto r = detail::cot_reactance(b(i), chi1, zeta, self_x);
    out.loads.reactances(i, 0) = r.reactance;
    if (r.open_circuit) out.flagged.push_back(static_cast<std::size_t>(i));
  }
  out.approx_gain = approx_beam_pattern(theta1, make_approx_objective(z, out.loads).w, z, geom);
  out.true_gain = beam_pattern(theta1, z, out.loads, geom);
  return out;
}

struct HybridLoads {
  LoadConfig loads;
  std::vector<std::size_t> flagged;       // canonical parasitic indices
  std::vector<std::size_t> degenerate_rows;  // rows with |h_A,j| ~ 0, left open
};

/// Per-row closed-form reactances for the multi-active array in a multipath
/// channel. Row j only sees h_P,j, z_m,j,j and h_A,j.
inline HybridLoads closed_form_reactance_hybrid(const ChannelRealization& ch, const PartitionedImpedance& z,
                                                double fixed_resistance = kDefaultLoadResistance) {
  const auto na = static_cast<Eigen::Index>(z.n_active);
  const auto np = static_cast<Eigen::Index>(z.n_parasitic);
  if (ch.h_a.size() != na || ch.h_p.size() != na * np) throw Error("channel does not match the impedance layout");
  HybridLoads out{LoadConfig{fixed_resistance, RMatrix(np, na)}, {}, {}};
  if (np == 0) return out;
  const double zeta = detail::common_zeta(z, fixed_resistance);
  const double self_x = z.parasitic_self_impedance().imag();
  for (Eigen::Index j = 0; j < na; ++j) {
    const cplx ha = ch.h_a(j);
    if (std::abs(ha) < 1e-12) {
      out.loads.reactances.col(j).setConstant(kOpenCircuitReactance);
      out.degenerate_rows.push_back(static_cast<std::size_t>(j));
      for (Eigen::Index i = 0; i < np; ++i) out.flagged.push_back(static_cast<std::size_t>(j * np + i));
      continue;
    }
    const CVector b = ch.h_p.segment(j * np, np).cwiseProduct(z.coupling(static_cast<std::size_t>(j),
                                                                          static_cast<std::size_t>(j))) / ha;
    const cplx chi1 = 1.0 - 0.5 * zeta * b.sum();
    for (Eigen::Index i = 0; i < np; ++i) {
      const auto r = detail::cot_reactance(b(i), chi1, zeta, self_x);
      out.loads.reactances(i, j) = r.reactance;
      if (r.open_circuit) out.flagged.push_back(static_cast<std::size_t>(j * np + i));
    }
  }
  return out;
}

/// Maximizer of |i^T h_eff|^2 subject to i^* Z_eff i <= p_max:
///   i = sqrt(p_max) Z_eff^-1 conj(h_eff) / || Z_eff^-1/2 conj(h_eff) ||.
inline CVector optimal_active_current(const EffectiveSystem& eff, double p_max) {
  const CMatrix herm = 0.5 * (eff.z_eff + eff.z_eff.adjoint());
  const auto n = herm.rows();
  if (n == 0 || eff.h_eff.size() != n) throw SolverError("effective system dimensions do not match");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(es.eigenvalues().minCoeff() > 1e-9 * scale))
    throw SolverError("effective impedance is not positive definite");
  Eigen::LLT<CMatrix> llt(herm);
  if (llt.info() != Eigen::Success) throw SolverError("effective impedance is not positive definite");
  const CVector x = eff.h_eff.conjugate();
  const CVector y = llt.solve(x);
  const double q = x.dot(y).real();  // x^* Z^-1 x
  if (!(q > 0.0)) return CVector::Zero(n);
  return std::sqrt(p_max / q) * y;
}

struct OracleConfig {
  std::size_t starts = 64;
  double box = 1000.0;  // reactances searched in [-box, box] ohm
  double tol = 1e-3;    // golden-section bracket width, ohm
  std::uint64_t seed = 0;
  double fixed_resistance = kDefaultLoadResistance;
  std::size_t max_sweeps = 50;
  std::size_t scan_points = 41;  // coarse scan that seeds each golden-section bracket
};

struct OracleResult {
  LoadConfig loads;
  double gain = 0.0;
};

namespace detail {

// G as a function of a single reactance with the others held fixed. With
// B the network matrix with that reactance zeroed,
//   a^T (B + jX e e^T)^-1 z = p - jX u v / (1 + jX q)
// by Sherman-Morrison, so each probe is O(1) after one factorization.
struct CoordinateSlice {
  cplx p, uv, q;
  double operator()(double x) const {
    const cplx jx(0.0, x);
    return std::norm(1.0 - p + jx * uv / (1.0 + jx * q));
  }
};

inline CoordinateSlice make_slice(const CMatrix& zp, const RVector& x, double r, const CVector& a,
                                  const CVector& zm, Eigen::Index i) {
  CMatrix b = zp;
  for (Eigen::Index k = 0; k < x.size(); ++k) b(k, k) += cplx(r, k == i ? 0.0 : x(k));
  Eigen::PartialPivLU<CMatrix> lu(b);
  const CVector bz = lu.solve(zm);
  const CVector ba = lu.solve(a);  // B is symmetric, so B^-T a = B^-1 a
  const CVector bi = lu.solve(CVector::Unit(x.size(), i));
  return {(a.transpose() * bz).value(), ba(i) * bz(i), bi(i)};
}

template <typename F>
double golden_max(const F& f, double lo, double hi, double tol, double& best_x) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c), fd = f(d);
  while (hi - lo > tol) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  best_x = fc > fd ? c : d;
  return std::max(fc, fd);
}

}  // namespace detail

/// Multistart coordinate-wise golden-section search for max_X G(theta1, X).
inline OracleResult numerical_oracle_los(double theta1, const PartitionedImpedance& z, const ArrayGeometry& geom,
                                         const OracleConfig& cfg = {}) {
  if (geom.n_active != 1 || z.n_active != 1) throw GeometryError("numerical oracle needs a single active element");
  const auto np = static_cast<Eigen::Index>(geom.n_parasitic_per_active);
  if (np > 6) throw GeometryError("numerical oracle supports at most 6 parasitic elements");
  OracleResult best{LoadConfig::open_circuit(static_cast<std::size_t>(np), 1, cfg.fixed_resistance),
                    -std::numeric_limits<double>::infinity()};
  if (np == 0) {
    best.gain = 1.0;
    return best;
  }
  const CVector a = steering_x(theta1, geom);
  const CVector zm = z.z_m.col(0);
  auto gain_at = [&](const RVector& x) {
    CMatrix m = z.z_p;
    for (Eigen::Index k = 0; k < np; ++k) m(k, k) += cplx(cfg.fixed_resistance, x(k));
    const cplx v = 1.0 - (a.transpose() * Eigen::PartialPivLU<CMatrix>(m).solve(zm)).value();
    return std::norm(v);
  };

  const double step = 2.0 * cfg.box / static_cast<double>(std::max<std::size_t>(cfg.scan_points, 2) - 1);
  for (std::size_t s = 0; s < cfg.starts; ++s) {
    Rng rng(derive_seed(cfg.seed, s));
    RVector x(np);
    for (Eigen::Index k = 0; k < np; ++k) x(k) = rng.uniform(-cfg.box, cfg.box);
    double g = gain_at(x);
    for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      const double before = g;
      for (Eigen::Index i = 0; i < np; ++i) {
        const auto slice = detail::make_slice(z.z_p, x, cfg.fixed_resistance, a, zm, i);
        double xi = x(i), gi = slice(xi);
        for (std::size_t k = 0; k < cfg.scan_points; ++k) {
          const double xs = -cfg.box + step * static_cast<double>(k);
          const double gs = slice(xs);
          if (gs > gi) {
            gi = gs;
            xi = xs;
          }
        }
        double xr = xi;
        const double gr = detail::golden_max(slice, std::max(-cfg.box, xi - step), std::min(cfg.box, xi + step),
                                             cfg.tol, xr);
        if (gr > gi) {
          gi = gr;
          xi = xr;
        }
        if (gi > g) {
          x(i) = xi;
          g = gi;
        }
      }
      g = gain_at(x);
      if (g - before <= 1e-12 * std::max(1.0, before)) break;
    }
    if (g > best.gain) {
      best.gain = g;
      best.loads.reactances.col(0) = x;
    }
  }
  return best;
}

/// Best of `budget` random load draws, each with its optimal active current.
/// Draws are uniform on the Lorentzian circle: phi ~ U(-pi, pi) per element,
/// mapped to a reactance; draw b uses Rng(derive_seed(seed, b)).
inline BeamformingSolution random_search_baseline(const ChannelRealization& ch, const PartitionedImpedance& z,
                                                  std::size_t budget, std::uint64_t seed, double p_max, double link,
                                                  double fixed_resistance = kDefaultLoadResistance) {
  if (budget < 1) throw Error("random search budget must be at least 1");
  const auto np = z.n_parasitic;
  const auto na = z.n_active;
  const double zeta = detail::common_zeta(z, fixed_resistance);
  const double self_x = z.parasitic_self_impedance().imag();
  BeamformingSolution best;
  best.snr = -1.0;
  for (std::size_t b = 0; b < budget; ++b) {
    Rng rng(derive_seed(seed, b));
    RVector x(static_cast<Eigen::Index>(np * na));
    for (Eigen::Index k = 0; k < x.size(); ++k)
      x(k) = weight_to_reactance(LorentzianWeight::from_phi(zeta, rng.uniform(-kPi, kPi)), self_x).reactance;
    LoadConfig loads = LoadConfig::from_canonical(x, np, na, fixed_resistance);
    try {
      const ParasiticNetwork net(z, loads);
      const auto eff = effective_system(net, ch);
      const CVector i_a = optimal_active_current(eff, p_max);
      const double s = snr(net, i_a, ch, link);
      if (s > best.snr) best = {i_a, loads, s, radiated_power(net, i_a)};
    } catch (const ResonanceError&) {
    } catch (const SolverError&) {
    }
  }
  if (best.snr < 0.0) throw SolverError("random search found no feasible load configuration");
  return best;
}

}  // namespace parasim
