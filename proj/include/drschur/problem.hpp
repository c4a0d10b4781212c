#pragma once

// Problem data (E, A, B, requested poles), the text format used to store it,
// and the feasibility checks that must pass before assignment is attempted.
//
// Text format, '#' starts a comment, blank lines are ignored:
//
//   n m r
//   n rows of E
//   n rows of A
//   n rows of B (m entries each)
//   r lines: alpha_re alpha_im beta_re beta_im
//
// The n - r infinite poles are implicit. Complex poles are given as two
// adjacent lines holding a conjugate pair.

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "drschur/errors.hpp"
#include "drschur/linalg.hpp"
#include "drschur/oracle.hpp"
#include "drschur/pole.hpp"

namespace drschur {

struct Problem {
  MatrixXd E;
  MatrixXd A;
  MatrixXd B;
  /// n - r infinite poles first, then the finite ones in input order.
  std::vector<PolePair> poles;
  Index r = 0;

  Index n() const { return A.rows(); }
  Index m() const { return B.cols(); }

  std::vector<PolePair> finite_poles() const {
    std::vector<PolePair> out;
    for (const auto& p : poles)
      if (!p.is_infinite()) out.push_back(p);
    return out;
  }
  Index infinite_count() const {
    Index k = 0;
    for (const auto& p : poles) k += p.is_infinite() ? 1 : 0;
    return k;
  }
};

// ---------------------------------------------------------------------------
// Tokenizer shared by the problem and solution readers

namespace io_detail {

struct Line {
  std::size_t number = 0;
  std::vector<std::string_view> tokens;
};

class LineReader {
 public:
  explicit LineReader(std::string text) : text_(std::move(text)) {
    std::size_t pos = 0;
    std::size_t number = 0;
    while (pos <= text_.size()) {
      std::size_t end = text_.find('\n', pos);
      if (end == std::string::npos) end = text_.size();
      ++number;
      std::string_view line(text_.data() + pos, end - pos);
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      Line l{number, split(line)};
      if (!l.tokens.empty()) lines_.push_back(std::move(l));
      if (end == text_.size()) break;
      pos = end + 1;
    }
  }

  bool done() const { return next_ >= lines_.size(); }
  std::size_t last_line() const { return lines_.empty() ? 0 : lines_.back().number; }
  std::size_t next_line_number() const { return done() ? last_line() : lines_[next_].number; }

  const Line& take(const char* what) {
    if (done()) throw ParseError(last_line(), std::string("unexpected end of input while reading ") + what);
    return lines_[next_++];
  }

  /// Skip lines for which `skip` returns true.
  template <typename Pred>
  void skip_while(Pred skip) {
    while (!done() && skip(lines_[next_])) ++next_;
  }

 private:
  static std::vector<std::string_view> split(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      std::size_t j = i;
      while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      if (j > i) out.push_back(s.substr(i, j - i));
      i = j;
    }
    return out;
  }

  std::string text_;
  std::vector<Line> lines_;
  std::size_t next_ = 0;
};

inline double parse_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec == std::errc::result_out_of_range)
    throw ParseError(line, "number out of range: '" + std::string(tok) + "'");
  if (ec != std::errc() || ptr != last)
    throw ParseError(line, "non-numeric token '" + std::string(tok) + "'");
  if (!std::isfinite(v)) throw ParseError(line, "non-finite value '" + std::string(tok) + "'");
  return v;
}

inline long long parse_int(std::string_view tok, std::size_t line) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(line, "expected an integer, got '" + std::string(tok) + "'");
  return v;
}

inline MatrixXd read_matrix(LineReader& in, Index rows, Index cols, const char* name) {
  MatrixXd M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Line& l = in.take(name);
    if (static_cast<Index>(l.tokens.size()) != cols)
      throw ParseError(l.number, std::string(name) + " row " + std::to_string(i + 1) + ": expected " +
                                     std::to_string(cols) + " entries, got " + std::to_string(l.tokens.size()));
    for (Index j = 0; j < cols; ++j) M(i, j) = parse_double(l.tokens[static_cast<std::size_t>(j)], l.number);
  }
  return M;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_matrix(std::ostream& os, const MatrixXd& M) {
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j > 0) os << ' ';
      os << format_double(M(i, j));
    }
    os << '\n';
  }
}

inline std::string slurp(std::istream& is) {
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// Parsing and serialization

inline Problem parse_problem(const std::string& text) {
  using namespace io_detail;
  LineReader in(text);
  const Line& header = in.take("header");
  if (header.tokens.size() != 3)
    throw ParseError(header.number, "malformed header: expected 'n m r'");
  const long long n = parse_int(header.tokens[0], header.number);
  const long long m = parse_int(header.tokens[1], header.number);
  const long long r = parse_int(header.tokens[2], header.number);
  if (n < 1 || m < 1 || m > n || r < 0 || r > n)
    throw ParseError(header.number, "malformed header: need n >= 1, 1 <= m <= n, 0 <= r <= n");

  Problem p;
  p.E = read_matrix(in, n, n, "E");
  p.A = read_matrix(in, n, n, "A");
  p.B = read_matrix(in, n, m, "B");
  p.r = r;
  p.poles.assign(static_cast<std::size_t>(n - r), PolePair::infinite());

  long long seen = 0;
  while (seen < r) {
    if (in.done()) throw ParseError(in.last_line(), "pole count mismatch: header announces " +
                                                        std::to_string(r) + " finite poles, found " +
                                                        std::to_string(seen));
    const Line& l = in.take("poles");
    if (l.tokens.size() != 4)
      throw ParseError(l.number, "pole line must hold 4 numbers: alpha_re alpha_im beta_re beta_im");
    const Complex a(parse_double(l.tokens[0], l.number), parse_double(l.tokens[1], l.number));
    const Complex b(parse_double(l.tokens[2], l.number), parse_double(l.tokens[3], l.number));
    if (b == 0.0) throw ParseError(l.number, "finite pole with beta = 0");
    const PolePair pole = canonicalize(a, b);
    if (!pole.is_complex()) {
      p.poles.push_back(pole);
      ++seen;
      continue;
    }
    if (seen + 2 > r || in.done()) throw ParseError(l.number, "unpaired complex pole");
    const Line& l2 = in.take("poles");
    if (l2.tokens.size() != 4)
      throw ParseError(l2.number, "pole line must hold 4 numbers: alpha_re alpha_im beta_re beta_im");
    const Complex a2(parse_double(l2.tokens[0], l2.number), parse_double(l2.tokens[1], l2.number));
    const Complex b2(parse_double(l2.tokens[2], l2.number), parse_double(l2.tokens[3], l2.number));
    if (b2 == 0.0) throw ParseError(l2.number, "finite pole with beta = 0");
    const PolePair conj{std::conj(a), std::conj(b), PoleKind::FiniteComplex};
    const PolePair second{a2, b2, PoleKind::FiniteComplex};
    if (!equivalent(conj, second, 1e-12)) throw ParseError(l.number, "unpaired complex pole");
    p.poles.push_back(pole);
    seen += 2;
  }
  if (!in.done())
    throw ParseError(in.next_line_number(), "pole count mismatch: more pole lines than announced");
  return p;
}

inline Problem parse_problem(std::istream& is) { return parse_problem(io_detail::slurp(is)); }

/// Shortest round-trip decimal representation; parse_problem(serialize) == p.
inline std::string serialize_problem(const Problem& p) {
  using io_detail::format_double;
  std::ostringstream os;
  os << p.n() << ' ' << p.m() << ' ' << p.r << '\n';
  os << "# E\n";
  io_detail::write_matrix(os, p.E);
  os << "# A\n";
  io_detail::write_matrix(os, p.A);
  os << "# B\n";
  io_detail::write_matrix(os, p.B);
  os << "# finite poles: alpha_re alpha_im beta_re beta_im\n";
  auto line = [&](Complex a, Complex b) {
    os << format_double(a.real()) << ' ' << format_double(a.imag()) << ' ' << format_double(b.real()) << ' '
       << format_double(b.imag()) << '\n';
  };
  for (const auto& pole : p.poles) {
    if (pole.is_infinite()) continue;
    line(pole.alpha, pole.beta);
    if (pole.is_complex()) line(std::conj(pole.alpha), std::conj(pole.beta));
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  bool ok = true;
  Index q = 0;  // numerical rank of [E B]
  std::vector<std::string> failures;
  std::vector<std::string> warnings;

  void fail(std::string msg) {
    ok = false;
    failures.push_back(std::move(msg));
  }
};

/// Checks every precondition of the assignment method. `rank_rtol` is the
/// relative singular-value cutoff used for all rank decisions, which is the
/// only way it affects the outcome. Never throws on infeasible data.
inline ValidationReport validate_problem(const Problem& p, double rank_rtol = 1e-10) {
  ValidationReport rep;
  const Index n = p.n();
  const Index m = p.m();
  if (p.E.rows() != n || p.E.cols() != n || p.A.cols() != n || p.B.rows() != n || n == 0) {
    rep.fail("shape mismatch between E, A and B");
    return rep;
  }
  if (!linalg::all_finite(p.E) || !linalg::all_finite(p.A) || !linalg::all_finite(p.B)) {
    rep.fail("non-finite matrix entry");
    return rep;
  }
  const auto policy = linalg::RankPolicy::relative_cutoff(rank_rtol);

  // Pole list shape.
  Index eigen_count = 0;
  Index finite_count = 0;
  std::vector<Complex> finite;
  for (const auto& pole : p.poles) {
    eigen_count += pole.multiplicity();
    if (!pole.is_infinite()) finite_count += pole.multiplicity();
    if (pole.is_complex() && pole.lambda().imag() <= 0.0)
      rep.fail("complex pole not stored by its Im > 0 representative");
  }
  if (eigen_count != n)
    rep.fail("pole count mismatch: " + std::to_string(eigen_count) + " eigenvalues for n = " + std::to_string(n));
  if (finite_count != p.r)
    rep.fail("pole count mismatch: " + std::to_string(finite_count) + " finite eigenvalues, r = " +
             std::to_string(p.r));

  // (a) B full column rank.
  if (linalg::numerical_rank(p.B, policy).rank != m) rep.fail("B does not have full column rank");

  // (b) q = rank [E B], (c) q - m <= r <= q.
  MatrixXd EB(n, n + m);
  EB << p.E, p.B;
  rep.q = linalg::numerical_rank(EB, policy).rank;
  if (p.r < rep.q - m || p.r > rep.q)
    rep.fail("r = " + std::to_string(p.r) + " violates the feasibility bound q - m <= r <= q with q = rank[E B] = " +
             std::to_string(rep.q) + ", m = " + std::to_string(m));

  // (d) controllability at infinity.
  {
    const MatrixXd N = linalg::orthonormal_null_basis(p.E, policy);
    MatrixXd M(n, n + N.cols() + m);
    M << p.E, p.A * N, p.B;
    if (linalg::numerical_rank(M, policy).rank != n)
      rep.fail("not controllable at infinity: rank[E, A N(E), B] < n");
  }

  // (e) finite-mode controllability at the open-loop eigenvalues plus random probes.
  {
    std::vector<Complex> probes;
    try {
      for (const Complex& l : pencil_spectrum(p.A, p.E).finite) probes.push_back(l);
    } catch (const SingularPencil&) {
      rep.warnings.push_back("open-loop pencil (A, E) is singular; finite modes checked at random probes only");
    }
    std::mt19937_64 rng(0x5eed5eedULL);
    std::normal_distribution<double> normal;
    const double scale = p.E.norm() > 0.0 ? std::max(p.A.norm(), 1.0) / p.E.norm() : 1.0;
    for (int k = 0; k < 8; ++k) {
      const double re = normal(rng);
      const double im = normal(rng);
      probes.emplace_back(scale * re, scale * im);
    }
    const MatrixXcd Ec = p.E.cast<Complex>();
    const MatrixXcd Ac = p.A.cast<Complex>();
    const MatrixXcd Bc = p.B.cast<Complex>();
    for (const Complex& l : probes) {
      MatrixXcd M(n, n + m);
      M << l * Ec - Ac, Bc;
      if (linalg::numerical_rank<Complex>(M, policy).rank != n) {
        std::ostringstream os;
        os.precision(6);
        os << "not controllable at lambda = " << l.real() << (l.imag() < 0 ? " - " : " + ") << std::abs(l.imag())
           << "i: rank[lambda E - A, B] < n";
        rep.fail(os.str());
        break;
      }
    }
  }

  // Repeated poles beyond what m inputs can place independently.
  {
    const auto fp = p.finite_poles();
    for (std::size_t i = 0; i < fp.size(); ++i) {
      Index mult = 0;
      bool first = true;
      for (std::size_t k = 0; k < fp.size(); ++k) {
        if (equivalent(fp[i], fp[k], 1e-12)) {
          ++mult;
          if (k < i) first = false;
        }
      }
      if (first && mult > m) {
        std::ostringstream os;
        os << "pole " << fp[i].lambda() << " repeated " << mult << " times with only m = " << m
           << " inputs; expect reduced accuracy";
        rep.warnings.push_back(os.str());
      }
    }
  }
  return rep;
}

}  // namespace drschur
