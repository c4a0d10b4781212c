#pragma once

// Random benchmark instances and parameter sweeps.
//
// Each instance draws A, E0, B, W, Y with independent standard normal
// entries, takes the finite poles as the generalized eigenvalues of (W, Y),
// and builds E = Q_E R_E Q_E' from the QR factors of E0 with the leading
// (n - rankE) x (n - rankE) block of R_E set to zero.
//
// The random stream is an mt19937_64 engine fed through a local Box-Muller
// transform (the standard normal_distribution is implementation defined),
// seeded by a splitmix64 mix of (seed, n, rankE, m, r, trial, attempt), so
// any single instance can be regenerated without replaying the sweep.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "drschur/assign.hpp"
#include "drschur/errors.hpp"
#include "drschur/linalg.hpp"
#include "drschur/metrics.hpp"
#include "drschur/oracle.hpp"
#include "drschur/problem.hpp"

namespace drschur {

struct BenchConfig {
  Index n = 6;
  Index rankE = 3;
  Index m = 2;
  std::vector<Index> r_values;  // empty: full feasible range
  int trials = 50;
  std::uint64_t seed = 1;
  Order order = Order::InfFirst;
  unsigned threads = 0;  // 0: hardware concurrency
};

inline Index bench_q(const BenchConfig& cfg) { return std::min(cfg.n, cfg.rankE + cfg.m); }

/// Every r with q - m <= r <= q, q = min(n, rankE + m).
inline std::vector<Index> feasible_r_values(const BenchConfig& cfg) {
  const Index q = bench_q(cfg);
  std::vector<Index> out;
  for (Index r = std::max<Index>(0, q - cfg.m); r <= q; ++r) out.push_back(r);
  return out;
}

inline void check_config(const BenchConfig& cfg) {
  if (cfg.n < 2) throw InvalidInput("bench: n must be at least 2");
  if (cfg.rankE <= 0 || cfg.rankE >= cfg.n) throw InvalidInput("bench: need 0 < rankE < n");
  if (cfg.m <= 0 || cfg.m > cfg.n) throw InvalidInput("bench: need 0 < m <= n");
  if (cfg.trials <= 0) throw InvalidInput("bench: trials must be positive");
  const auto range = feasible_r_values(cfg);
  for (Index r : cfg.r_values)
    if (r < range.front() || r > range.back())
      throw InvalidInput("bench: r = " + std::to_string(r) + " outside the feasible range");
}

// ---------------------------------------------------------------------------
// Random numbers

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // Uniforms in (0, 1] from the top 53 bits.
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  MatrixXd matrix(Index rows, Index cols) {
    MatrixXd M(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) M(i, j) = next();
    return M;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::uint64_t instance_seed(const BenchConfig& cfg, Index r, int trial, int attempt) {
  std::uint64_t h = splitmix64(cfg.seed);
  for (std::uint64_t v : {static_cast<std::uint64_t>(cfg.n), static_cast<std::uint64_t>(cfg.rankE),
                          static_cast<std::uint64_t>(cfg.m), static_cast<std::uint64_t>(r),
                          static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(attempt)})
    h = splitmix64(h ^ v);
  return h;
}

// ---------------------------------------------------------------------------
// Instances

namespace bench_detail {

/// Finite poles of (W, Y) as a conjugate-closed pole list, or false if the
/// draw does not give exactly r finite eigenvalues in clean conjugate pairs.
inline bool random_poles(const MatrixXd& W, const MatrixXd& Y, std::vector<PolePair>& out) {
  PencilSpectrum sp;
  try {
    sp = pencil_spectrum(W, Y);
  } catch (const SingularPencil&) {
    return false;
  }
  if (sp.infinite_count != 0) return false;
  std::vector<Complex> upper, lower;
  for (const Complex& l : sp.finite) {
    if (std::abs(l.imag()) <= 1e-8 * std::abs(l))
      out.push_back(PolePair::real(l.real(), 1.0));
    else
      (l.imag() > 0.0 ? upper : lower).push_back(l);
  }
  if (upper.size() != lower.size()) return false;
  // Sort both halves so that pairing is by position.
  auto key = [](const Complex& a, const Complex& b) {
    return a.real() != b.real() ? a.real() < b.real() : std::abs(a.imag()) < std::abs(b.imag());
  };
  std::sort(upper.begin(), upper.end(), key);
  std::sort(lower.begin(), lower.end(), key);
  for (std::size_t i = 0; i < upper.size(); ++i) {
    if (std::abs(upper[i] - std::conj(lower[i])) > 1e-8 * std::abs(upper[i])) return false;
    out.push_back(PolePair::finite(0.5 * (upper[i] + std::conj(lower[i]))));
  }
  return true;
}

}  // namespace bench_detail

inline Problem generate_random_instance(const BenchConfig& cfg, Index r, int trial) {
  const Index n = cfg.n;
  const Index m = cfg.m;
  const Index zeroed = n - cfg.rankE;
  const Index q_target = bench_q(cfg);
  for (int attempt = 0; attempt < 10; ++attempt) {
    NormalStream rng(instance_seed(cfg, r, trial, attempt));
    Problem p;
    p.A = rng.matrix(n, n);
    const MatrixXd E0 = rng.matrix(n, n);
    p.B = rng.matrix(n, m);
    const MatrixXd W = rng.matrix(r, r);
    const MatrixXd Y = rng.matrix(r, r);

    const auto qr = linalg::qr_decompose(E0);
    MatrixXd RE = qr.R;
    RE.topLeftCorner(zeroed, zeroed).setZero();
    p.E = qr.Q * RE * qr.Q.transpose();

    std::vector<PolePair> finite;
    if (r > 0 && !bench_detail::random_poles(W, Y, finite)) continue;
    p.r = r;
    p.poles.assign(static_cast<std::size_t>(n - r), PolePair::infinite());
    p.poles.insert(p.poles.end(), finite.begin(), finite.end());

    MatrixXd EB(n, n + m);
    EB << p.E, p.B;
    const auto policy = linalg::RankPolicy::relative_cutoff(1e-10);
    if (linalg::numerical_rank(EB, policy).rank != q_target) continue;
    if (linalg::numerical_rank(p.E, policy).rank != cfg.rankE) continue;
    return p;
  }
  throw AssignmentError(-1, "could not draw a non-degenerate instance in 10 attempts");
}

// ---------------------------------------------------------------------------
// Sweeps

struct TrialResult {
  bool solved = false;
  bool passed = false;
  Report report;
};

struct BenchRow {
  Index n = 0, rankE = 0, m = 0, r = 0;
  int trials = 0;
  double mean_precs = 0.0;
  double mean_deltaF2 = 0.0;
  double mean_normF = 0.0;
  double mean_normG = 0.0;
  double mean_kappaXGF = 0.0;
  double mean_kappaX = 0.0;  // NaN when unavailable for every trial
  int failures = 0;
  std::vector<TrialResult> details;
};

inline TrialResult run_trial(const BenchConfig& cfg, Index r, int trial) {
  TrialResult out;
  try {
    const Problem p = generate_random_instance(cfg, r, trial);
    AssignOptions opts;
    opts.order = cfg.order;
    const Solution sol = run_pipeline(p, opts);
    out.report = verify_solution(p, sol);
    out.solved = true;
    out.passed = out.report.pass;
  } catch (const Error& e) {
    out.report.failures.push_back(e.what());
  }
  return out;
}

/// Runs all trials for one r. Trials are independent and may run on several
/// threads; results are aggregated in trial order.
inline BenchRow run_bench_row(const BenchConfig& cfg, Index r) {
  BenchRow row;
  row.n = cfg.n;
  row.rankE = cfg.rankE;
  row.m = cfg.m;
  row.r = r;
  row.trials = cfg.trials;
  row.details.resize(static_cast<std::size_t>(cfg.trials));
  unsigned threads = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(cfg.trials));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int t = next++; t < cfg.trials; t = next++) row.details[static_cast<std::size_t>(t)] = run_trial(cfg, r, t);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  int solved = 0, with_kappa = 0;
  double kappa_sum = 0.0;
  for (const auto& d : row.details) {
    if (!d.passed) ++row.failures;
    if (!d.solved) continue;
    ++solved;
    row.mean_precs += d.report.precs;
    row.mean_deltaF2 += d.report.deltaF2;
    row.mean_normF += d.report.normF;
    row.mean_normG += d.report.normG;
    row.mean_kappaXGF += d.report.kappaXGF;
    if (d.report.kappaX) {
      kappa_sum += *d.report.kappaX;
      ++with_kappa;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (solved > 0) {
    row.mean_precs /= solved;
    row.mean_deltaF2 /= solved;
    row.mean_normF /= solved;
    row.mean_normG /= solved;
    row.mean_kappaXGF /= solved;
  } else {
    row.mean_precs = row.mean_deltaF2 = row.mean_normF = row.mean_normG = row.mean_kappaXGF = nan;
  }
  row.mean_kappaX = with_kappa > 0 ? kappa_sum / with_kappa : nan;
  return row;
}

inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
  check_config(cfg);
  const auto rs = cfg.r_values.empty() ? feasible_r_values(cfg) : cfg.r_values;
  std::vector<BenchRow> rows;
  for (Index r : rs) rows.push_back(run_bench_row(cfg, r));
  return rows;
}

inline constexpr const char* kCsvHeader =
    "n,rankE,m,r,trials,mean_precs,mean_deltaF2,mean_normF,mean_normG,mean_kappaXGF,mean_kappaX,failures";

inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const std::vector<BenchRow>& rows, bool header = true) {
  if (header) os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.n << ',' << r.rankE << ',' << r.m << ',' << r.r << ',' << r.trials << ',' << format_g17(r.mean_precs)
       << ',' << format_g17(r.mean_deltaF2) << ',' << format_g17(r.mean_normF) << ',' << format_g17(r.mean_normG)
       << ',' << format_g17(r.mean_kappaXGF) << ',' << format_g17(r.mean_kappaX) << ',' << r.failures << '\n';
  }
}

}  // namespace drschur
