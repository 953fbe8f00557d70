#pragma once

#include <cmath>

#include "parasim/circuit.hpp"
#include "parasim/solver.hpp"

namespace parasim {

struct PowerModel {
  double p_rfc = 0.240;            // W per RF chain
  double p_ps = 0.030;             // W per phase shifter
  double p_var = 0.0;              // W per varactor
  double insertion_loss_db = 2.3;  // phase-shifter network, HPS only

  double epsilon() const { return std::pow(10.0, insertion_loss_db / 10.0); }

  void validate() const {
    if (!(p_rfc >= 0.0 && p_ps >= 0.0 && p_var >= 0.0 && insertion_loss_db >= 0.0))
      throw Error("power model constants must be nonnegative");
  }
};

struct ArchitectureResult {
  double snr = 0.0;
  double se = 0.0;       // bps/Hz
  double p_total = 0.0;  // W
  double ee = 0.0;       // bps/Hz/W
};

inline ArchitectureResult metrics(double snr, double p_total) {
  if (!(snr >= 0.0)) throw Error("snr must be nonnegative");
  if (!(p_total > 0.0)) throw Error("total power must be positive");
  const double se = std::log2(1.0 + snr);
  return {snr, se, p_total, se / p_total};
}

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

namespace detail {

// SNR of the optimal current for channel h and power matrix a.
inline double quadratic_snr(const CMatrix& a, const CVector& h, double p_max, double link) {
  const CVector i = optimal_active_current({h, a}, p_max);
  return link * std::norm((i.transpose() * h).value());
}

}  // namespace detail

/// Hybrid parasitic planar array: closed-form loads, then the optimal active current.
struct HrpOutcome {
  ArchitectureResult result;
  BeamformingSolution solution;
  std::vector<std::size_t> degenerate_rows;
};

inline HrpOutcome eval_hrp_upa_detailed(const PartitionedImpedance& z, const ChannelRealization& ch, double link,
                                        double p_max, const PowerModel& pm,
                                        double fixed_resistance = kDefaultLoadResistance) {
  const auto loads = closed_form_reactance_hybrid(ch, z, fixed_resistance);
  const ParasiticNetwork net(z, loads.loads);
  const auto eff = effective_system(net, ch);
  const CVector i_a = optimal_active_current(eff, p_max);
  const double s = snr(net, i_a, ch, link);
  const auto na = static_cast<double>(z.n_active);
  const double p_total = p_max + na * pm.p_rfc + na * static_cast<double>(z.n_parasitic) * pm.p_var;
  return {metrics(s, p_total), {i_a, loads.loads, s, radiated_power(net, i_a)}, loads.degenerate_rows};
}

inline ArchitectureResult eval_hrp_upa(const PartitionedImpedance& z, const ChannelRealization& ch, double link,
                                       double p_max, const PowerModel& pm,
                                       double fixed_resistance = kDefaultLoadResistance) {
  return eval_hrp_upa_detailed(z, ch, link, p_max, pm, fixed_resistance).result;
}

/// Fully digital linear array over the active elements only.
inline ArchitectureResult eval_fd_ula(const CMatrix& z_a, const CVector& h_a, double link, double p_max,
                                      const PowerModel& pm) {
  if (z_a.rows() < 1 || z_a.rows() != h_a.size()) throw Error("FD-ULA needs a square Z_A matching h_A");
  const double s = detail::quadratic_snr(z_a.real().cast<cplx>(), h_a, p_max, link);
  return metrics(s, p_max + static_cast<double>(z_a.rows()) * pm.p_rfc);
}

/// Fully digital planar array: every element has an RF chain.
inline ArchitectureResult eval_fd_upa(const PartitionedImpedance& z, const ChannelRealization& ch, double link,
                                      double p_max, const PowerModel& pm) {
  const CMatrix re = z.full().real().cast<cplx>();
  const double s = detail::quadratic_snr(re, ch.h(), p_max, link);
  return metrics(s, p_max + static_cast<double>(re.rows()) * pm.p_rfc);
}

/// Row-sparse phase-shifter precoder: row j carries exp(-j arg h_k) on the
/// elements of sub-panel j (active j and its parasitic row).
inline CMatrix phase_shifter_precoder(const PartitionedImpedance& z, const ChannelRealization& ch) {
  const auto na = static_cast<Eigen::Index>(z.n_active);
  const auto np = static_cast<Eigen::Index>(z.n_parasitic);
  const CVector h = ch.h();
  CMatrix f = CMatrix::Zero(na, na * (np + 1));
  for (Eigen::Index j = 0; j < na; ++j) {
    f(j, j) = std::polar(1.0, -std::arg(h(j)));
    for (Eigen::Index i = 0; i < np; ++i) {
      const Eigen::Index k = na + j * np + i;
      f(j, k) = std::polar(1.0, -std::arg(h(k)));
    }
  }
  return f;
}

inline ArchitectureResult eval_hps_upa(const PartitionedImpedance& z, const ChannelRealization& ch, double link,
                                       double p_max, const PowerModel& pm) {
  const CMatrix f = phase_shifter_precoder(z, ch);
  const CMatrix re = z.full().real().cast<cplx>();
  const CVector h_eff = f * ch.h();
  const CMatrix z_eff = f.conjugate() * re * f.transpose();
  const double s = detail::quadratic_snr(z_eff, h_eff, p_max, link);
  const auto na = static_cast<double>(z.n_active);
  const double p_total = pm.epsilon() * p_max + na * pm.p_rfc +
                         na * static_cast<double>(z.n_parasitic + 1) * pm.p_ps;
  return metrics(s, p_total);
}

/// Random-search stand-in for an iterative load optimizer; same power total as HRP-UPA.
inline ArchitectureResult eval_random_baseline(const PartitionedImpedance& z, const ChannelRealization& ch,
                                               double link, double p_max, const PowerModel& pm, std::size_t budget,
                                               std::uint64_t seed, double fixed_resistance = kDefaultLoadResistance) {
  const auto sol = random_search_baseline(ch, z, budget, seed, p_max, link, fixed_resistance);
  const auto na = static_cast<double>(z.n_active);
  return metrics(sol.snr, p_max + na * pm.p_rfc + na * static_cast<double>(z.n_parasitic) * pm.p_var);
}

}  // namespace parasim
