#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "parasim/em_model.hpp"

namespace parasim {

struct PathSet {
  CVector alphas;  // complex path gains
  RVector thetas;  // departure angles, radians from the y axis in the xy plane

  std::size_t size() const { return static_cast<std::size_t>(alphas.size()); }
};

/// Channel toward one receive antenna, normalized by the large-scale factor.
struct ChannelRealization {
  CVector h_a;  // active elements
  CVector h_p;  // parasitics, grouped per active row

  CVector h() const {
    CVector out(h_a.size() + h_p.size());
    out << h_a, h_p;
    return out;
  }
};

struct LinkBudget {
  double range = 250.0;                // m
  double bandwidth = 20e6;             // Hz
  double antenna_temperature = 300.0;  // K
  double radiation_resistance = 95.5;  // ohm
  double boltzmann = 1.38e-23;         // J/K
};

/// x-axis steering vector over the parasitics of one row, phases
/// +2*pi*m*(dx/lambda)*sin(theta) for the signed offsets m.
inline CVector steering_x(double theta, const ArrayGeometry& geom) {
  const auto offsets = parasitic_offsets(geom.n_parasitic_per_active);
  const double base = 2.0 * kPi * geom.dx / geom.wavelength() * std::sin(theta);
  CVector a(static_cast<Eigen::Index>(offsets.size()));
  for (std::size_t i = 0; i < offsets.size(); ++i)
    a(static_cast<Eigen::Index>(i)) = std::polar(1.0, base * offsets[i]);
  return a;
}

/// y-axis steering vector over the active elements, phases
/// -2*pi*k*(dy/lambda)*cos(theta), k = 0..N_A-1.
inline CVector steering_y(double theta, const ArrayGeometry& geom) {
  const double base = -2.0 * kPi * geom.dy / geom.wavelength() * std::cos(theta);
  CVector a(static_cast<Eigen::Index>(geom.n_active));
  a(0) = 1.0;
  for (Eigen::Index k = 1; k < a.size(); ++k) a(k) = std::polar(1.0, base * static_cast<double>(k));
  return a;
}

inline ChannelRealization multipath_channel(const PathSet& paths, const ArrayGeometry& geom) {
  const auto na = static_cast<Eigen::Index>(geom.n_active);
  const auto np = static_cast<Eigen::Index>(geom.n_parasitic_per_active);
  ChannelRealization ch{CVector::Zero(na), CVector::Zero(na * np)};
  if (paths.size() == 0) return ch;
  const double norm = 1.0 / std::sqrt(static_cast<double>(paths.size()));
  for (std::size_t l = 0; l < paths.size(); ++l) {
    const auto idx = static_cast<Eigen::Index>(l);
    const cplx g = paths.alphas(idx) * norm;
    const CVector ay = steering_y(paths.thetas(idx), geom);
    ch.h_a += g * ay;
    if (np > 0) {
      const CVector ax = steering_x(paths.thetas(idx), geom);
      for (Eigen::Index j = 0; j < na; ++j) ch.h_p.segment(j * np, np) += (g * ay(j)) * ax;
    }
  }
  return ch;
}

/// Single unit-gain path: the line-of-sight channel.
inline ChannelRealization los_channel(double theta, const ArrayGeometry& geom) {
  PathSet p{CVector::Constant(1, 1.0), RVector::Constant(1, theta)};
  return multipath_channel(p, geom);
}

// Seed derivation: derive_seed(seed, index) = splitmix64(splitmix64(seed) ^ splitmix64(index)).
// Trials draw from std::mt19937_64 seeded with the derived value, so a trial's
// paths depend only on (seed, trial index) and never on execution order.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index));
}

/// Thin wrapper over mt19937_64 with portable uniform/normal draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; consumes two uniforms per call.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // CN(0, 1): independent N(0, 1/2) real and imaginary parts.
  cplx complex_normal() {
    const double re = normal();
    const double im = normal();
    return cplx(re, im) * std::sqrt(0.5);
  }

 private:
  std::mt19937_64 engine_;
};

/// L paths with theta ~ U[-pi, pi] and alpha ~ CN(0, 1), drawn per path in
/// the order theta, alpha.
inline PathSet sample_paths(std::size_t n_paths, std::uint64_t seed) {
  if (n_paths < 1) throw Error("path count must be at least 1");
  Rng rng(seed);
  PathSet p{CVector(static_cast<Eigen::Index>(n_paths)), RVector(static_cast<Eigen::Index>(n_paths))};
  for (Eigen::Index l = 0; l < p.alphas.size(); ++l) {
    p.thetas(l) = rng.uniform(-kPi, kPi);
    p.alphas(l) = rng.complex_normal();
  }
  return p;
}

/// gamma^2 / sigma^2 = (lambda / 4 pi r)^2 * R_r / (4 k_B T_A BW).
inline double link_constant(const LinkBudget& b, const DipoleSpec& spec) {
  const double free_space = spec.wavelength() / (4.0 * kPi * b.range);
  return free_space * free_space * b.radiation_resistance /
         (4.0 * b.boltzmann * b.antenna_temperature * b.bandwidth);
}

}  // namespace parasim
