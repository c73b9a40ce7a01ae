#pragma once

// Plain-text operator files:
//
//   specshift-operator 1
//   blocks <count>
//   block <dim> <weight>          (one line per block)
//   matrix <index>                (then dim rows of dim "re,im" pairs)
//
// Numbers are written with 17 significant digits, so a write/read cycle
// reproduces every double exactly.

#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "specshift/errors.hpp"
#include "specshift/format.hpp"
#include "specshift/trace_algebra.hpp"

namespace specshift {

namespace detail {

inline double parse_double(const std::string& s, const std::string& where) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw ConfigError(where, "malformed number '" + s + "'");
  return v;
}

inline std::string expect_line(std::istream& in, int& lineno) {
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] != '#') return line;
  }
  throw ConfigError("line " + std::to_string(lineno), "unexpected end of operator file");
}

}  // namespace detail

inline void write_operator(std::ostream& out, const AlgebraElement& a) {
  const auto& blocks = a.algebra()->blocks();
  out << "specshift-operator 1\n";
  out << "blocks " << blocks.size() << '\n';
  for (const auto& b : blocks) out << "block " << b.dim << ' ' << format_double(b.weight) << '\n';
  for (int b = 0; b < a.block_count(); ++b) {
    out << "matrix " << b << '\n';
    const Matrix& m = a.block(b);
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) {
        out << (j ? " " : "") << format_double(m(i, j).real()) << ',' << format_double(m(i, j).imag());
      }
      out << '\n';
    }
  }
}

inline std::string to_text(const AlgebraElement& a) {
  std::ostringstream os;
  write_operator(os, a);
  return os.str();
}

inline AlgebraElement read_operator(std::istream& in) {
  int lineno = 0;
  auto where = [&] { return "line " + std::to_string(lineno); };
  if (detail::expect_line(in, lineno) != "specshift-operator 1") throw ConfigError(where(), "bad header");
  std::istringstream hs(detail::expect_line(in, lineno));
  std::string word;
  int count = 0;
  if (!(hs >> word >> count) || word != "blocks" || count < 1) throw ConfigError(where(), "expected 'blocks <n>'");
  std::vector<Block> blocks;
  for (int b = 0; b < count; ++b) {
    std::istringstream bs(detail::expect_line(in, lineno));
    std::string w;
    Block blk{};
    if (!(bs >> word >> blk.dim >> w) || word != "block") throw ConfigError(where(), "expected 'block <dim> <weight>'");
    blk.weight = detail::parse_double(w, where());
    blocks.push_back(blk);
  }
  auto alg = TraceAlgebra::make(blocks);
  std::vector<Matrix> mats;
  for (int b = 0; b < count; ++b) {
    std::istringstream ms(detail::expect_line(in, lineno));
    int idx = -1;
    if (!(ms >> word >> idx) || word != "matrix" || idx != b) throw ConfigError(where(), "expected 'matrix " + std::to_string(b) + "'");
    const int d = blocks[static_cast<std::size_t>(b)].dim;
    Matrix m(d, d);
    for (int i = 0; i < d; ++i) {
      std::istringstream rs(detail::expect_line(in, lineno));
      for (int j = 0; j < d; ++j) {
        std::string pair;
        if (!(rs >> pair)) throw ConfigError(where(), "row too short");
        const auto comma = pair.find(',');
        if (comma == std::string::npos) throw ConfigError(where(), "expected re,im pair");
        m(i, j) = cplx(detail::parse_double(pair.substr(0, comma), where()),
                       detail::parse_double(pair.substr(comma + 1), where()));
      }
    }
    mats.push_back(std::move(m));
  }
  return {alg, std::move(mats)};
}

inline AlgebraElement from_text(const std::string& s) {
  std::istringstream is(s);
  return read_operator(is);
}

}  // namespace specshift
