#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "parasim/types.hpp"

namespace parasim {

/// Center-fed, z-oriented thin-wire dipole.
struct DipoleSpec {
  double length = 0.0;             // m
  double radius = 0.0;             // m
  double carrier_frequency = 0.0;  // Hz

  double wavelength() const { return kSpeedOfLight / carrier_frequency; }
  double wavenumber() const { return 2.0 * kPi / wavelength(); }

  void validate() const {
    if (!(carrier_frequency > 0.0) || !std::isfinite(carrier_frequency))
      throw ModelDomainError("dipole carrier frequency must be positive");
    if (!(length > 0.0) || !std::isfinite(length))
      throw ModelDomainError("dipole length must be positive");
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw ModelDomainError("dipole radius must be positive");
    if (!(radius < length / 10.0))
      throw ModelDomainError("dipole radius must be below length/10 for the thin-wire model");
  }

  /// Half-wave dipole of radius lambda/500 at the given carrier.
  static DipoleSpec half_wave(double carrier_frequency) {
    const double lambda = kSpeedOfLight / carrier_frequency;
    return {lambda / 2.0, lambda / 500.0, carrier_frequency};
  }
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Hybrid planar array: active elements on the y axis at pitch dy, each row
/// carrying n_parasitic_per_active elements along x at pitch dx.
struct ArrayGeometry {
  std::size_t n_active = 1;
  std::size_t n_parasitic_per_active = 0;
  double dx = 0.0;  // m, parasitic pitch
  double dy = 0.0;  // m, active pitch
  DipoleSpec dipole;

  std::size_t n_parasitic_total() const { return n_active * n_parasitic_per_active; }
  std::size_t n_elements() const { return n_active + n_parasitic_total(); }
  double wavelength() const { return dipole.wavelength(); }

  void validate() const {
    dipole.validate();
    if (n_active < 1) throw GeometryError("array needs at least one active element");
    if (n_parasitic_per_active > 0 && !(dx > 0.0))
      throw GeometryError("parasitic pitch dx must be positive when parasitics are present");
    if (n_active > 1 && !(dy > 0.0))
      throw GeometryError("active pitch dy must be positive when n_active > 1");
  }

  /// Geometry in units of the carrier wavelength of `dipole`.
  static ArrayGeometry from_wavelengths(std::size_t n_active, std::size_t n_parasitic,
                                        double dx_over_lambda, double dy_over_lambda,
                                        const DipoleSpec& dipole) {
    const double lambda = dipole.wavelength();
    return {n_active, n_parasitic, dx_over_lambda * lambda, dy_over_lambda * lambda, dipole};
  }
};

/// Signed x-position indices of the parasitics in one row, ascending:
/// floor(n/2) on the negative side, ceil(n/2) on the positive side, none at 0.
inline std::vector<int> parasitic_offsets(std::size_t n_parasitic) {
  const int neg = static_cast<int>(n_parasitic / 2);
  const int pos = static_cast<int>(n_parasitic - n_parasitic / 2);
  std::vector<int> out;
  out.reserve(n_parasitic);
  for (int m = -neg; m <= -1; ++m) out.push_back(m);
  for (int m = 1; m <= pos; ++m) out.push_back(m);
  return out;
}

/// Element centers in canonical order: actives by row, then parasitics grouped
/// per row with x ascending inside a row.
inline std::vector<Point2> element_positions(const ArrayGeometry& geom) {
  std::vector<Point2> pts;
  pts.reserve(geom.n_elements());
  for (std::size_t j = 0; j < geom.n_active; ++j)
    pts.push_back({0.0, static_cast<double>(j) * geom.dy});
  const auto offsets = parasitic_offsets(geom.n_parasitic_per_active);
  for (std::size_t j = 0; j < geom.n_active; ++j)
    for (int m : offsets)
      pts.push_back({static_cast<double>(m) * geom.dx, static_cast<double>(j) * geom.dy});
  return pts;
}

namespace detail {

// Induced-EMF integral for two equal side-by-side dipoles of length l at
// separation d, referred to the input terminals. Separate kernels for the
// resistive and reactive parts so the self term can evaluate them at
// different distances.
inline double induced_emf_part(const DipoleSpec& spec, double d, bool reactive) {
  const double k = spec.wavenumber();
  const double h = spec.length / 2.0;
  const double s = std::sin(k * h);
  if (std::abs(s) < 1e-6)
    throw ModelDomainError("dipole length is a multiple of the wavelength; input impedance unbounded");
  const double c = std::cos(k * h);

  auto kernel = [k, reactive](double r) {
    if (reactive) return std::cos(k * r) / r;
    return r > 1e-300 ? std::sin(k * r) / r : k;
  };
  auto integrand = [&](double z) {
    const double r1 = std::hypot(d, z - h);
    const double r2 = std::hypot(d, z + h);
    const double r0 = std::hypot(d, z);
    return std::sin(k * (h - z)) * (kernel(r1) + kernel(r2) - 2.0 * c * kernel(r0));
  };

  // Symmetric in z; integrate one half. Breakpoints isolate the narrow
  // features at the feed and the tips when d is a wire radius.
  std::vector<double> cuts{0.0};
  const double narrow = 20.0 * d;
  if (narrow < h / 4.0) {
    cuts.push_back(narrow);
    cuts.push_back(h - narrow);
  }
  cuts.push_back(h);

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, cuts[i], cuts[i + 1], 15, 1e-12, &err);
  }
  const double value = 2.0 * total * kFreeSpaceImpedance / (4.0 * kPi * s * s);
  if (!std::isfinite(value)) throw ModelDomainError("induced-EMF integral did not converge");
  return value;
}

}  // namespace detail

/// Self impedance z_00 of a center-fed dipole with sinusoidal current.
/// Resistance from the filament kernel, reactance with the kernel evaluated on
/// the wire surface (equivalent-radius correction).
inline cplx dipole_self_impedance(const DipoleSpec& spec) {
  spec.validate();
  const double r = detail::induced_emf_part(spec, 0.0, false);
  const double x = detail::induced_emf_part(spec, spec.radius, true);
  if (!(r > 0.0)) throw ModelDomainError("self resistance is not positive");
  return {r, x};
}

/// Mutual impedance of two parallel side-by-side dipoles (filament kernel).
inline cplx dipole_mutual_impedance(const DipoleSpec& spec, double separation) {
  spec.validate();
  if (!(separation > 0.0) || !std::isfinite(separation))
    throw ModelDomainError("mutual impedance requires a positive separation");
  return {detail::induced_emf_part(spec, separation, false),
          detail::induced_emf_part(spec, separation, true)};
}

/// Full impedance matrix for dipoles centered at `positions`.
inline CMatrix assemble_impedance(std::span<const Point2> positions, const DipoleSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(positions.size());
  CMatrix z(n, n);
  const cplx self = dipole_self_impedance(spec);
  std::map<double, cplx> by_distance;
  for (Eigen::Index i = 0; i < n; ++i) {
    z(i, i) = self;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = std::hypot(positions[i].x - positions[j].x, positions[i].y - positions[j].y);
      if (!(d > 0.0))
        throw GeometryError("elements " + std::to_string(i) + " and " + std::to_string(j) +
                            " share a position");
      auto it = by_distance.find(d);
      if (it == by_distance.end()) it = by_distance.emplace(d, dipole_mutual_impedance(spec, d)).first;
      z(i, j) = it->second;
      z(j, i) = it->second;
    }
  }
  return z;
}

/// Z_TX split into active, active-parasitic and parasitic blocks:
///   Z_TX = [[z_a, z_m^T], [z_m, z_p]].
struct PartitionedImpedance {
  std::size_t n_active = 0;
  std::size_t n_parasitic = 0;  // per active element
  CMatrix z_a;
  CMatrix z_m;
  CMatrix z_p;

  std::size_t n_parasitic_total() const { return n_active * n_parasitic; }

  CMatrix full() const {
    const auto na = static_cast<Eigen::Index>(n_active);
    const auto np = static_cast<Eigen::Index>(n_parasitic_total());
    CMatrix z(na + np, na + np);
    z.topLeftCorner(na, na) = z_a;
    if (np > 0) {
      z.topRightCorner(na, np) = z_m.transpose();
      z.bottomLeftCorner(np, na) = z_m;
      z.bottomRightCorner(np, np) = z_p;
    }
    return z;
  }

  static PartitionedImpedance from_full(const CMatrix& z, std::size_t n_active, std::size_t n_parasitic) {
    const auto na = static_cast<Eigen::Index>(n_active);
    const auto np = static_cast<Eigen::Index>(n_active * n_parasitic);
    if (z.rows() != z.cols() || z.rows() != na + np)
      throw FormatError("impedance matrix is " + std::to_string(z.rows()) + "x" +
                        std::to_string(z.cols()) + " but n_active=" + std::to_string(n_active) +
                        ", n_parasitic=" + std::to_string(n_parasitic) + " needs " +
                        std::to_string(na + np));
    return {n_active, n_parasitic, z.topLeftCorner(na, na), z.bottomLeftCorner(np, na),
            z.bottomRightCorner(np, np)};
  }

  /// Mutual coupling between active j and the parasitics of row i.
  CVector coupling(std::size_t row, std::size_t active) const {
    const auto np = static_cast<Eigen::Index>(n_parasitic);
    return z_m.block(static_cast<Eigen::Index>(row) * np, static_cast<Eigen::Index>(active), np, 1);
  }

  /// Common parasitic self impedance (mean of diag Z_P).
  cplx parasitic_self_impedance() const {
    if (z_p.rows() == 0) return {};
    return z_p.diagonal().mean();
  }
};

inline PartitionedImpedance assemble_impedance(const ArrayGeometry& geom) {
  geom.validate();
  const auto pts = element_positions(geom);
  return PartitionedImpedance::from_full(assemble_impedance(pts, geom.dipole), geom.n_active,
                                         geom.n_parasitic_per_active);
}

/// Smallest eigenvalue of the Hermitian part of Re{Z}.
inline double min_resistive_eigenvalue(const CMatrix& z) {
  if (z.rows() == 0) return 0.0;
  const RMatrix re = z.real();
  const RMatrix sym = 0.5 * (re + re.transpose());
  Eigen::SelfAdjointEigenSolver<RMatrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Passivity test: min eig of sym(Re Z) >= -1e-8 * ||Re Z||_2.
inline bool is_passive(const CMatrix& z, double rel_tol = 1e-8) {
  if (z.rows() == 0) return true;
  const RMatrix re = z.real();
  const RMatrix sym = 0.5 * (re + re.transpose());
  Eigen::SelfAdjointEigenSolver<RMatrix> es(sym, Eigen::EigenvaluesOnly);
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  return es.eigenvalues().minCoeff() >= -rel_tol * scale;
}

/// Z = z0 (I - S)^-1 (I + S).
inline CMatrix scattering_to_impedance(const CMatrix& s, double z0) {
  if (s.rows() != s.cols()) throw ConversionError("scattering matrix must be square");
  const auto n = s.rows();
  const CMatrix id = CMatrix::Identity(n, n);
  Eigen::PartialPivLU<CMatrix> lu(id - s);
  if (n > 0 && !(lu.rcond() > 1e-14)) throw ConversionError("(I - S) is singular");
  return z0 * lu.solve(id + s);
}

/// S = (Z + z0 I)^-1 (Z - z0 I).
inline CMatrix impedance_to_scattering(const CMatrix& z, double z0) {
  if (z.rows() != z.cols()) throw ConversionError("impedance matrix must be square");
  const auto n = z.rows();
  const CMatrix id = CMatrix::Identity(n, n);
  Eigen::PartialPivLU<CMatrix> lu(z + z0 * id);
  if (n > 0 && !(lu.rcond() > 1e-14)) throw ConversionError("(Z + z0 I) is singular");
  return lu.solve(z - z0 * id);
}

}  // namespace parasim
