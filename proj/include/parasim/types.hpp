#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace parasim {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kVacuumPermeability = 1.25663706212e-6;
inline constexpr double kFreeSpaceImpedance = kVacuumPermeability * kSpeedOfLight;

// Open-circuit termination. Large but finite so every load stays a plain linear solve.
inline constexpr double kOpenCircuitReactance = 1e9;

// Default fixed load resistance on parasitic ports.
inline constexpr double kDefaultLoadResistance = 0.05;

// Condition number of (Z_P + Z_R) past which solves are rejected as resonant.
inline constexpr double kResonanceConditionLimit = 1e12;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-physical or non-finite antenna model input/output.
struct ModelDomainError : Error {
  using Error::Error;
};

struct GeometryError : Error {
  using Error::Error;
};

// S <-> Z conversion with a singular operand.
struct ConversionError : Error {
  using Error::Error;
};

// Impedance file does not match the declared layout or is not passive.
struct FormatError : Error {
  using Error::Error;
};

struct ResonanceError : Error {
  ResonanceError(const std::string& what, double condition)
      : Error(what), condition_number(condition) {}
  double condition_number;
};

// Effective impedance (or another quadratic form) not positive definite.
struct SolverError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  ConfigError(const std::string& what, std::size_t line_no = 0)
      : Error(line_no ? "line " + std::to_string(line_no) + ": " + what : what), line(line_no) {}
  std::size_t line;
};

}  // namespace parasim
