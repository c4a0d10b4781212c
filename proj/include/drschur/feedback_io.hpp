#pragma once

// Solution files: header "n m", then m rows of F and m rows of G, n entries
// each. '#' comments are allowed, and lines containing '=' are skipped so a
// text report (key=value lines followed by the matrices) reads back as a
// solution file.

#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include "drschur/errors.hpp"
#include "drschur/linalg.hpp"
#include "drschur/problem.hpp"

namespace drschur {

struct Feedback {
  MatrixXd F;
  MatrixXd G;
};

inline Feedback parse_feedback(const std::string& text) {
  using namespace io_detail;
  LineReader in(text);
  auto is_report_line = [](const Line& l) {
    for (auto t : l.tokens)
      if (t.find('=') != std::string_view::npos) return true;
    return false;
  };
  in.skip_while(is_report_line);
  const Line& header = in.take("header");
  if (header.tokens.size() != 2) throw ParseError(header.number, "malformed header: expected 'n m'");
  const long long n = parse_int(header.tokens[0], header.number);
  const long long m = parse_int(header.tokens[1], header.number);
  if (n < 1 || m < 1 || m > n) throw ParseError(header.number, "malformed header: need n >= 1, 1 <= m <= n");
  Feedback fb;
  fb.F = read_matrix(in, m, n, "F");
  fb.G = read_matrix(in, m, n, "G");
  in.skip_while(is_report_line);
  if (!in.done()) throw ParseError(in.next_line_number(), "unexpected data after G");
  return fb;
}

inline void write_feedback(std::ostream& os, const MatrixXd& F, const MatrixXd& G) {
  os << F.cols() << ' ' << F.rows() << '\n';
  os << "# F\n";
  io_detail::write_matrix(os, F);
  os << "# G\n";
  io_detail::write_matrix(os, G);
}

}  // namespace drschur
