#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "parasim/parasim.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw parasim::ConfigError("cannot open " + path + " for writing");
  return os;
}

int cmd_sweep(const std::string& config, std::optional<std::size_t> trials, std::optional<std::uint64_t> seed,
              std::optional<std::size_t> threads, const std::string& out) {
  auto cfg = parasim::load_sweep_config(config);
  if (trials) {
    if (*trials < 1) throw parasim::ConfigError("--trials must be at least 1");
    cfg.trials = *trials;
  }
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  const auto res = parasim::run_sweep(cfg);
  auto os = open_output(out);
  parasim::write_sweep_csv(os, cfg, res);
  for (const auto& r : res.rows)
    if (r.failures > 0)
      std::cerr << "warning: " << r.architecture << " at " << r.axis << "=" << r.axis_value << ": " << r.failures
                << " of " << cfg.trials << " trials failed\n";
  if (res.failure_rate() > 0.5) {
    std::cerr << "error: numerical failure rate " << res.failure_rate() << " exceeds 50%\n";
    return kExitNumerical;
  }
  return 0;
}

int cmd_pattern(const std::string& config, const std::string& mode, const std::string& out) {
  auto text = parasim::detail::read_text_file(config);
  auto cfg = parasim::parse_pattern_config(text);
  if (!mode.empty() && mode != cfg.mode) {
    auto j = nlohmann::json::parse(text);
    j["pattern"]["mode"] = mode;
    cfg = parasim::parse_pattern_config(j.dump(2));
  }
  const auto table = parasim::run_pattern(cfg);
  auto os = open_output(out);
  parasim::write_pattern_csv(os, cfg, table);
  return 0;
}

int cmd_zmatrix(const std::string& geom_path, double z0, const std::string& out) {
  const auto text = parasim::detail::read_text_file(geom_path);
  const parasim::detail::ConfigReader r(text);
  r.allow_keys({}, {"geometry", "dipole", "fixed_resistance_ohm"});
  const auto array = parasim::detail::read_array_config(r);
  const auto z = parasim::assemble_impedance(array.geometry());
  auto os = open_output(out);
  parasim::write_impedance(os, z, z0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beamforming simulator for hybrid reconfigurable parasitic antenna arrays"};
  app.require_subcommand(1);

  std::string config, out, mode, geom;
  std::optional<std::size_t> trials, threads;
  std::optional<std::uint64_t> seed;
  double z0 = 50.0;

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep of SE/EE per architecture");
  sweep->add_option("--config", config, "JSON sweep config")->required();
  sweep->add_option("--trials", trials, "override trial count");
  sweep->add_option("--seed", seed, "override seed");
  sweep->add_option("--threads", threads, "worker threads (0: all cores)");
  sweep->add_option("--out", out, "output CSV")->required();

  auto* pattern = app.add_subcommand("pattern", "max-gain or fixed-load beam pattern table");
  pattern->add_option("--config", config, "JSON pattern config")->required();
  pattern->add_option("--mode", mode, "maxgain or fixedload")->check(CLI::IsMember({"maxgain", "fixedload"}));
  pattern->add_option("--out", out, "output CSV")->required();

  auto* zmatrix = app.add_subcommand("zmatrix", "export the analytic impedance matrix");
  zmatrix->add_option("--geom", geom, "JSON geometry config")->required();
  zmatrix->add_option("--z0", z0, "reference impedance written to the header");
  zmatrix->add_option("--out", out, "output matrix file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sweep) return cmd_sweep(config, trials, seed, threads, out);
    if (*pattern) return cmd_pattern(config, mode, out);
    if (*zmatrix) return cmd_zmatrix(geom, z0, out);
  } catch (const parasim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const parasim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
