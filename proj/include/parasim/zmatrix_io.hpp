#pragma once

// Text format for impedance matrices:
//
//   # zmatrix v1 n_active=<int> n_parasitic=<int> z0=<float>
//   <re+imj> <re+imj> ...      (one line per row of the full Z_TX)
//
// Rows follow the canonical element ordering (actives, then parasitics grouped
// per active row). Numbers use the shortest representation that round-trips.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "parasim/em_model.hpp"

namespace parasim {

struct ImpedanceFile {
  PartitionedImpedance z;
  double z0 = 50.0;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw FormatError("line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  return v;
}

inline cplx parse_complex(std::string_view tok, std::size_t line_no) {
  if (tok.size() < 2 || tok.back() != 'j')
    throw FormatError("line " + std::to_string(line_no) + ": entry '" + std::string(tok) +
                      "' is not of the form re+imj");
  tok.remove_suffix(1);
  // The imaginary part starts at the last sign that is not an exponent sign.
  std::size_t split = std::string_view::npos;
  for (std::size_t i = tok.size(); i-- > 1;) {
    if ((tok[i] == '+' || tok[i] == '-') && tok[i - 1] != 'e' && tok[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  if (split == std::string_view::npos)
    throw FormatError("line " + std::to_string(line_no) + ": entry '" + std::string(tok) +
                      "j' is missing its imaginary part");
  return {parse_double(tok.substr(0, split), line_no), parse_double(tok.substr(split), line_no)};
}

inline std::size_t header_field(const std::string& header, const std::string& key) {
  const auto pos = header.find(" " + key + "=");
  if (pos == std::string::npos) throw FormatError("line 1: header is missing " + key);
  return pos + key.size() + 2;
}

}  // namespace detail

inline void write_impedance(std::ostream& os, const PartitionedImpedance& z, double z0 = 50.0) {
  os << "# zmatrix v1 n_active=" << z.n_active << " n_parasitic=" << z.n_parasitic
     << " z0=" << detail::format_double(z0) << "\n";
  const CMatrix full = z.full();
  for (Eigen::Index i = 0; i < full.rows(); ++i) {
    for (Eigen::Index j = 0; j < full.cols(); ++j) {
      if (j) os << ' ';
      const double im = full(i, j).imag();
      os << detail::format_double(full(i, j).real()) << (std::signbit(im) ? "" : "+")
         << detail::format_double(im) << 'j';
    }
    os << '\n';
  }
}

inline ImpedanceFile read_impedance(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("# zmatrix v1", 0) != 0)
    throw FormatError("line 1: expected '# zmatrix v1 ...' header");

  auto read_count = [&](const std::string& key) {
    const auto at = detail::header_field(header, key);
    const auto end = header.find(' ', at);
    const auto tok = std::string_view(header).substr(at, end == std::string::npos ? end : end - at);
    std::size_t v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
      throw FormatError("line 1: bad value for " + key);
    return v;
  };
  const std::size_t n_active = read_count("n_active");
  const std::size_t n_parasitic = read_count("n_parasitic");
  const auto z0_at = detail::header_field(header, "z0");
  const auto z0_end = header.find(' ', z0_at);
  const double z0 = detail::parse_double(
      std::string_view(header).substr(z0_at, z0_end == std::string::npos ? z0_end : z0_end - z0_at), 1);
  if (n_active < 1) throw FormatError("line 1: n_active must be at least 1");

  const std::size_t n = n_active * (1 + n_parasitic);
  CMatrix z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::string line;
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (row >= n)
      throw FormatError("line " + std::to_string(line_no) + ": more than " + std::to_string(n) +
                        " rows for n_active=" + std::to_string(n_active) +
                        ", n_parasitic=" + std::to_string(n_parasitic));
    std::size_t col = 0;
    std::string_view rest(line);
    while (!rest.empty()) {
      const auto sp = rest.find(' ');
      const auto tok = rest.substr(0, sp);
      if (col >= n)
        throw FormatError("line " + std::to_string(line_no) + ": row has more than " +
                          std::to_string(n) + " entries");
      z(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col++)) =
          detail::parse_complex(tok, line_no);
      if (sp == std::string_view::npos) break;
      rest.remove_prefix(sp + 1);
    }
    if (col != n)
      throw FormatError("line " + std::to_string(line_no) + ": row has " + std::to_string(col) +
                        " entries, expected " + std::to_string(n));
    ++row;
  }
  if (row != n)
    throw FormatError("matrix has " + std::to_string(row) + " rows but n_active=" +
                      std::to_string(n_active) + ", n_parasitic=" + std::to_string(n_parasitic) +
                      " needs " + std::to_string(n));

  const double scale = std::max(1.0, z.cwiseAbs().maxCoeff());
  if ((z - z.transpose()).cwiseAbs().maxCoeff() > 1e-6 * scale)
    throw FormatError("impedance matrix is not symmetric (reciprocity violated)");
  if (!is_passive(z))
    throw FormatError("impedance matrix is not passive: Re{Z} has eigenvalue " +
                      std::to_string(min_resistive_eigenvalue(z)));
  return {PartitionedImpedance::from_full(z, n_active, n_parasitic), z0};
}

inline void export_impedance(const std::string& path, const PartitionedImpedance& z, double z0 = 50.0) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  write_impedance(os, z, z0);
}

inline ImpedanceFile import_impedance(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path);
  return read_impedance(is);
}

}  // namespace parasim
