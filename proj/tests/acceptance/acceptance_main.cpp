// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and
// problem sizes are fixed here; exit status is non-zero if any criterion
// fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "learnsketch/learnsketch.hpp"
#include "../test_support.hpp"

namespace ls = learnsketch;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      detail = why;
    }
  }
};

struct Criterion {
  int id;
  const char* title;
  double time_limit_s;  // 0: no limit
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> unit_vector(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> x(d);
  for (double& v : x) v = normal(rng);
  const double n = std::sqrt(ls::norm_sq(x));
  for (double& v : x) v /= n;
  return x;
}

// min_{k<τ} tail_k/(τ−k) from an independent (Eigen) SVD.
double fd_bound(const ls::DenseMatrix& a, std::size_t tau) {
  const auto tail = testing_support::reference_tails(a);
  double best = tail[0] / static_cast<double>(tau);
  for (std::size_t k = 1; k < tau; ++k) {
    const double t = k < tail.size() ? tail[k] : 0.0;
    best = std::min(best, t / static_cast<double>(tau - k));
  }
  return best;
}

// ---- 1 ---------------------------------------------------------------------
Outcome psd_dominance() {
  Outcome o;
  std::mt19937_64 rng(2024);
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = std::uniform_int_distribution<std::size_t>(2, 64)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 500)(rng);
    const std::size_t ell = std::array<std::size_t, 3>{8, 16, 32}[trial % 3];
    const std::size_t tau = (trial / 3) % 2 == 0 ? ell / 2 : ell;
    auto a = testing_support::random_matrix(n, d, 5000 + static_cast<std::uint64_t>(trial));
    if (trial % 2 == 1)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) a(r, c) /= std::sqrt(static_cast<double>(c + 1));
    ls::FrequentDirections fd(ell, tau, d);
    fd.update_rows(a);
    const auto eig = testing_support::reference_gap_eigenvalues(a, fd.result());
    const double total = a.frobenius_norm_sq();
    const double bound = fd_bound(a, tau);
    o.require(eig.minCoeff() >= -1e-8 * total, fmt("trial %d: min eigenvalue %.3g", trial, eig.minCoeff()));
    o.require(eig.maxCoeff() <= bound + 1e-8 * total,
              fmt("trial %d: spectral gap %.6g exceeds bound %.6g", trial, eig.maxCoeff(), bound));
    if (bound > 0) worst_ratio = std::max(worst_ratio, eig.maxCoeff() / bound);
  }
  if (o.pass) o.detail = fmt("200 streams, max gap/bound = %.3f", worst_ratio);
  return o;
}

// ---- 2 ---------------------------------------------------------------------
Outcome mg_contract() {
  Outcome o;
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = std::uniform_int_distribution<std::size_t>(1, 100)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 10000)(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, d + 5)(rng);
    const std::size_t tau = trial % 2 == 0 ? m + 1 : std::uniform_int_distribution<std::size_t>(1, m + 1)(rng);
    const auto items = testing_support::random_stream(d, n, 100 + static_cast<std::uint64_t>(trial), trial % 3 != 0);
    ls::MisraGriesSketch s(m, tau);
    ls::MisraGriesSketch again(m, tau);
    for (auto x : items) s.update(x);
    for (auto x : items) again.update(x);
    o.require(s == again, fmt("trial %d: re-run differs", trial));

    const auto counts = testing_support::tally(items);
    std::vector<double> sorted;
    for (const auto& [id, c] : counts) sorted.push_back(static_cast<double>(c));
    std::sort(sorted.rbegin(), sorted.rend());
    double bound = static_cast<double>(n) / static_cast<double>(tau);
    double head = 0.0;
    for (std::size_t k = 1; k < tau; ++k) {
      if (k <= sorted.size()) head += sorted[k - 1];
      bound = std::min(bound, (static_cast<double>(n) - head) / static_cast<double>(tau - k));
    }
    double max_err = 0.0;
    for (const auto& [id, c] : counts) {
      const auto est = s.estimate(id);
      o.require(est <= c, fmt("trial %d: overestimate of %llu", trial, static_cast<unsigned long long>(id)));
      max_err = std::max(max_err, static_cast<double>(c - std::min(est, c)));
    }
    o.require(max_err <= bound + 1e-9, fmt("trial %d: error %.1f > bound %.3f", trial, max_err, bound));
    if (bound > 0) worst = std::max(worst, max_err / bound);
  }
  if (o.pass) o.detail = fmt("1000 streams, max error/bound = %.3f", worst);
  return o;
}

// ---- 3 ---------------------------------------------------------------------
Outcome reduction_equivalence() {
  Outcome o;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = std::uniform_int_distribution<std::size_t>(2, 20)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 500)(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, d)(rng);
    const auto items = testing_support::random_stream(d, n, 900 + static_cast<std::uint64_t>(trial));
    ls::MisraGriesSketch mg(m);
    ls::FrequentDirections fd(m + 1, m + 1, d);
    std::vector<double> row(d);
    for (auto x : items) {
      mg.update(x);
      std::fill(row.begin(), row.end(), 0.0);
      row[x - 1] = 1.0;
      fd.update(row);
    }
    const auto b = fd.result();
    for (ls::ElementId id = 1; id <= d; ++id) {
      std::fill(row.begin(), row.end(), 0.0);
      row[id - 1] = 1.0;
      const double q = ls::fd_query(b, row);
      o.require(std::abs(q - static_cast<double>(mg.estimate(id))) < 1e-6,
                fmt("trial %d (d=%zu m=%zu) id %llu: FD %.9g vs MG %llu", trial, d, m,
                    static_cast<unsigned long long>(id), q, static_cast<unsigned long long>(mg.estimate(id))));
    }
  }
  if (o.pass) o.detail = "100 streams, all estimates identical";
  return o;
}

// ---- 4 ---------------------------------------------------------------------
Outcome trace_form_identity() {
  Outcome o;
  std::mt19937_64 rng(13);
  double worst_cf = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = std::uniform_int_distribution<std::size_t>(4, 40)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(d, 300)(rng);
    const std::size_t ell = std::uniform_int_distribution<std::size_t>(2, d)(rng);
    const auto a = testing_support::random_matrix(n, d, 7000 + static_cast<std::uint64_t>(trial));
    ls::FrequentDirections fd(ell, std::max<std::size_t>(1, ell / 2), d);
    fd.update_rows(a);
    const auto b = fd.result();
    const auto cf = ls::weighted_error_trace_form(a, b);
    const double matrix_err = ls::weighted_error_matrix(a, b);
    const double rel = std::abs(cf.value - matrix_err) / std::max(matrix_err, 1e-300);
    worst_cf = std::max(worst_cf, rel);
    o.require(cf.premise_holds, fmt("trial %d: FD output violates BᵀB ⪯ AᵀA", trial));
    o.require(rel <= 1e-10, fmt("trial %d: closed form %.15g vs matrix error %.15g", trial, cf.value, matrix_err));
  }
  double worst_mc = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = testing_support::random_matrix(80, 12, 8000 + static_cast<std::uint64_t>(trial));
    ls::FrequentDirections fd(6, 3, 12);
    fd.update_rows(a);
    const auto b = fd.result();
    const double cf = ls::weighted_error_trace_form(a, b).value;
    const auto mc = ls::weighted_error_monte_carlo(a, b, 100000, 31 + static_cast<std::uint64_t>(trial));
    const double rel = std::abs(mc.value - cf) / cf;
    worst_mc = std::max(worst_mc, rel);
    o.require(rel <= 0.02, fmt("MC trial %d: %.6g vs closed form %.6g", trial, mc.value, cf));
    o.require(std::abs(mc.mean_norm_sq - a.frobenius_norm_sq()) <= 0.02 * a.frobenius_norm_sq(),
              fmt("MC trial %d: E|v|^2 %.6g vs %.6g", trial, mc.mean_norm_sq, a.frobenius_norm_sq()));
  }
  if (o.pass) o.detail = fmt("closed form max rel diff %.2e; Monte Carlo max rel diff %.4f", worst_cf, worst_mc);
  return o;
}

// ---- 5 ---------------------------------------------------------------------
Outcome matrix_error_reduction() {
  Outcome o;
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = std::uniform_int_distribution<std::size_t>(2, 50)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 400)(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, d)(rng);
    const auto items = testing_support::random_stream(d, n, 3000 + static_cast<std::uint64_t>(trial));
    ls::MisraGriesSketch mg(m);
    for (auto x : items) mg.update(x);
    ls::DenseMatrix a(n, d);
    for (std::size_t t = 0; t < n; ++t) a(t, items[t] - 1) = 1.0;
    ls::DenseMatrix b(0, d);
    for (const auto& [id, c] : mg.entries()) {
      std::vector<double> row(d, 0.0);
      row[id - 1] = std::sqrt(static_cast<double>(c));
      b.append_row(row);
    }
    const auto truth = ls::FrequencyTable::from_stream(items);
    const double freq_err = ls::weighted_error_freq(truth, [&](ls::ElementId id) { return mg.estimate(id); });
    const double matrix_err = ls::weighted_error_matrix(a, b);
    const double rel = std::abs(freq_err - matrix_err) / std::max(freq_err, 1.0);
    worst = std::max(worst, rel);
    o.require(rel <= 1e-9, fmt("trial %d: frequency error %.15g vs matrix error %.15g", trial, freq_err, matrix_err));
  }
  if (o.pass) o.detail = fmt("100 instances, max rel diff %.2e", worst);
  return o;
}

// ---- 6 ---------------------------------------------------------------------
Outcome scaling_envelopes() {
  Outcome o;
  const auto inst = ls::zipf_stream(10000, 1000000, 1);
  std::vector<std::pair<double, double>> learned;
  std::vector<double> ratio;
  for (std::size_t m : {128u, 256u, 512u, 1024u, 2048u}) {
    ls::MisraGriesSketch mg(m);
    ls::LearnedMisraGriesSketch lmg(ls::perfect_freq_oracle(inst.truth, m / 2), ls::MisraGriesSketch(m - m / 2));
    for (auto x : inst.items) {
      mg.update(x);
      lmg.update(x);
    }
    const double ec = ls::weighted_error_freq(inst.truth, [&](ls::ElementId id) { return mg.estimate(id); });
    const double el = ls::weighted_error_freq(inst.truth, [&](ls::ElementId id) { return lmg.estimate(id); });
    o.require(ec > el, fmt("m=%zu: classic %.4g not above learned %.4g", m, ec, el));
    learned.emplace_back(static_cast<double>(m), el);
    ratio.push_back(ec / el);
  }
  const double slope = ls::fit_error_scaling(learned);
  o.require(slope >= -1.3 && slope <= -0.7, fmt("learned MG slope %.3f outside [-1.3, -0.7]", slope));
  o.require(ratio.back() > ratio.front(),
            fmt("classic/learned ratio %.3f at m=2048 not above %.3f at m=128", ratio.back(), ratio.front()));

  const auto mat = ls::zipf_matrix(128, 512, 1);
  const ls::MatrixTruth truth(mat.a);
  std::vector<std::pair<double, double>> fd_pts;
  std::vector<std::pair<double, double>> lfd_pts;
  for (std::size_t m : {8u, 16u, 32u, 64u, 96u}) {
    ls::FrequentDirections fd(m, m / 2, 128);
    fd.update_rows(mat.a);
    ls::LearnedFrequentDirections lfd(m, ls::perfect_direction_oracle(mat.a, m / 4).p);
    lfd.update_rows(mat.a);
    fd_pts.emplace_back(static_cast<double>(m), ls::weighted_error_matrix(truth, fd.result()));
    lfd_pts.emplace_back(static_cast<double>(m), ls::weighted_error_matrix(truth, lfd.result()));
  }
  const double fd_slope = ls::fit_error_scaling(fd_pts);
  const double lfd_slope = ls::fit_error_scaling(lfd_pts);
  o.require(fd_slope >= -1.4 && fd_slope <= -0.6, fmt("FD slope %.3f outside [-1.4, -0.6]", fd_slope));
  o.require(lfd_slope >= -1.4 && lfd_slope <= -0.6, fmt("learned FD slope %.3f outside [-1.4, -0.6]", lfd_slope));
  if (o.pass)
    o.detail = fmt("learned MG slope %.3f, ratio %.2f -> %.2f; FD slope %.3f, learned FD slope %.3f", slope,
                   ratio.front(), ratio.back(), fd_slope, lfd_slope);
  return o;
}

// ---- 7 ---------------------------------------------------------------------
Outcome lower_bounds() {
  Outcome o;
  const std::size_t d = 10000;
  const ls::Count n = 200000;
  std::string detail;
  for (std::size_t space : {100u, 200u, 400u}) {
    const std::size_t m = space / 2;
    const auto adv = ls::adversarial_mg_stream(d, n, m, 5);
    ls::MisraGriesSketch mg(m);
    for (auto x : adv.stream.items) mg.update(x);
    const double err = ls::weighted_error_freq(adv.stream.truth, [&](ls::ElementId id) { return mg.estimate(id); });
    const double ref = ls::classic_mg_reference(static_cast<double>(adv.stream.n()), static_cast<double>(d),
                                                static_cast<double>(m));
    o.require(adv.certificate.holds, fmt("MG certificate fails at m=%zu", m));
    o.require(err > 0.05 * ref, fmt("MG m=%zu: error %.4g <= 0.05 x %.4g", m, err, ref));

    const std::size_t k_h = m / 2;
    const auto ladv = ls::adversarial_lmg_stream(d, n, m, k_h, 5);
    ls::FrequencyOracle oracle;
    for (ls::ElementId id = 1; id <= k_h; ++id) oracle.heavy.push_back(id);
    ls::LearnedMisraGriesSketch lmg(oracle, ls::MisraGriesSketch(m - k_h));
    for (auto x : ladv.stream.items) lmg.update(x);
    const double lerr =
        ls::weighted_error_freq(ladv.stream.truth, [&](ls::ElementId id) { return lmg.estimate(id); });
    const double lref = ls::learned_mg_reference(static_cast<double>(n), static_cast<double>(d), static_cast<double>(m));
    o.require(ladv.certificate.holds, fmt("learned MG certificate fails at m=%zu", m));
    o.require(lerr >= 0.05 * lref, fmt("learned MG m=%zu: error %.4g < 0.05 x %.4g", m, lerr, lref));
    detail += fmt("m=%zu MG %.2fx, LMG %.2fx; ", m, err / ref, lerr / lref);
  }
  if (o.pass) o.detail = "error/reference: " + detail.substr(0, detail.size() - 2);
  return o;
}

// ---- 8 ---------------------------------------------------------------------
Outcome robustness() {
  Outcome o;
  std::mt19937_64 rng(19);
  std::size_t queries = 0;
  std::size_t fallbacks = 0;
  auto check_instance = [&](int idx, const ls::DenseMatrix& a, const ls::DenseMatrix& p, std::size_t m,
                            std::size_t k) {
    ls::RobustLearnedFrequentDirections<> s(m, p, k);
    s.update_rows(a);
    const auto r = s.result();
    const double total = a.frobenius_norm_sq();
    const double residual = testing_support::reference_tails(a)[std::min(k, std::min(a.rows(), a.cols()))];
    const double res_bound = 6.0 * residual / static_cast<double>(m - k);
    std::vector<std::vector<double>> xs;
    const auto vt = ls::svd(a).vt;
    for (std::size_t i = 0; i < vt.rows(); ++i) xs.emplace_back(vt.row(i).begin(), vt.row(i).end());
    for (int q = 0; q < 200; ++q) xs.push_back(unit_vector(a.cols(), rng));
    if (a.cols() == 2) xs.push_back({1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)});
    for (const auto& x : xs) {
      const double exact = ls::norm_sq(ls::multiply(a, x));
      const double learned_err = std::abs(exact - ls::fd_query(r.learned, x));
      const double err = std::abs(exact - r.query(x));
      ++queries;
      if (!r.prefers_learned(x)) ++fallbacks;
      o.require(err <= std::min(learned_err, res_bound) + 1e-8 * total,
                fmt("instance %d: error %.6g > min(%.6g, %.6g)", idx, err, learned_err, res_bound));
    }
  };

  // The two-dimensional counterexample: one row (1, 1), prediction e₁.
  check_instance(0, ls::DenseMatrix{{1.0, 1.0}}, ls::DenseMatrix{{1.0}, {0.0}}, 4, 1);
  for (int idx = 1; idx < 50; ++idx) {
    const std::size_t d = std::uniform_int_distribution<std::size_t>(8, 48)(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(6, std::min<std::size_t>(d, 24))(rng);
    const std::size_t k_h = std::uniform_int_distribution<std::size_t>(1, (m - 1) / 2)(rng);
    const auto inst = ls::zipf_matrix(d, 4 * d, 40 + static_cast<std::uint64_t>(idx));
    check_instance(idx, inst.a, ls::adversarial_direction_oracle(inst.a, k_h).p, m, m / 2);
  }

  for (int idx = 0; idx < 10; ++idx) {
    const auto inst = ls::zipf_matrix(32, 128, 90 + static_cast<std::uint64_t>(idx));
    const auto p = ls::perfect_direction_oracle(inst.a, 4).p;
    ls::RobustLearnedFrequentDirections<> s(16, p);
    s.update_rows(inst.a);
    const auto r = s.result();
    for (std::size_t j = 0; j < 4; ++j) {
      const auto x = p.column(j);
      o.require(r.prefers_learned(x) && r.query(x) == ls::fd_query(r.learned, x),
                fmt("perfect oracle instance %d direction %zu: robust answer differs from learned", idx, j));
    }
  }
  if (o.pass) o.detail = fmt("%zu queries on 50 instances, %zu fell back to classic FD", queries, fallbacks);
  return o;
}

// ---- 9 ---------------------------------------------------------------------
Outcome learned_fd_dominance() {
  Outcome o;
  ls::BenchConfig c;
  c.mode = ls::BenchMode::matrix;
  c.count = 20;
  c.mat_d = 128;
  c.mat_n = 512;
  c.k_shared = 16;
  c.drift = 0.5;
  c.rank = {40, 80, 120};
  c.seeds = {1};
  c.omit_timing = true;
  ls::validate(c);
  const auto res = ls::run_matrix_bench(c);
  std::map<std::pair<std::string, std::size_t>, double> err;
  for (const auto& r : res.reports) {
    o.require(r.ok(), "cell failed: " + r.error);
    err[{r.algorithm, r.algorithm == "svd" ? r.m : r.m / 2}] = r.weighted_err;
  }
  std::string detail;
  for (std::size_t rank : c.rank) {
    const double fd = err[{"fd", rank}];
    const double lfd = err[{"learned_fd", rank}];
    const double svd = err[{"svd", rank}];
    o.require(lfd <= 0.5 * fd, fmt("rank %zu: learned FD %.4g > 0.5 x FD %.4g", rank, lfd, fd));
    o.require(svd <= fd && svd <= lfd, fmt("rank %zu: SVD baseline %.4g not below both", rank, svd));
    detail += fmt("rank %zu: LFD/FD = %.3f; ", rank, lfd / fd);
  }
  if (o.pass) o.detail = detail.substr(0, detail.size() - 2);
  return o;
}

// ---- 10 --------------------------------------------------------------------
Outcome noise_monotonicity() {
  Outcome o;
  ls::BenchConfig c;
  c.mode = ls::BenchMode::noise;
  c.count = 10;
  c.mat_d = 128;
  c.mat_n = 512;
  c.k_shared = 16;
  c.rank = {40};
  c.oracle = "perfect";
  c.noise = {0.0, 1e-3, 1e-2, 1e-1, 1.0};
  c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  c.omit_timing = true;
  ls::validate(c);
  const auto res = ls::run_noise_bench(c);

  ls::BenchConfig p = c;
  p.mode = ls::BenchMode::matrix;
  p.algorithms = {"learned_fd"};
  ls::validate(p);
  const auto workload = ls::load_or_generate_matrices(p);
  const auto perfect = ls::run_matrix_cell(p, workload, "learned_fd", 40, 1);

  std::map<double, std::vector<double>> by_sigma;
  for (const auto& r : res.reports) {
    o.require(r.ok(), "cell failed: " + r.error);
    by_sigma[r.c].push_back(r.weighted_err);
    if (r.c == 0.0)
      o.require(r.weighted_err == perfect.weighted_err && r.unweighted_err == perfect.unweighted_err,
                fmt("sigma=0 seed %llu: %.17g differs from perfect oracle %.17g",
                    static_cast<unsigned long long>(r.seed), r.weighted_err, perfect.weighted_err));
  }
  std::string detail;
  double prev = -1.0;
  for (const auto& [sigma, v] : by_sigma) {
    const double med = ls::median(v);
    o.require(med >= prev, fmt("median at sigma=%g (%.9g) below previous level (%.9g)", sigma, med, prev));
    prev = med;
    detail += fmt("%g:%.4g ", sigma, med);
  }
  const auto& slope = res.extra["noise_summary"][0]["excess_slope"];
  if (o.pass) o.detail = "medians " + detail + "| excess slope " + slope.dump();
  return o;
}

// ---- 11 --------------------------------------------------------------------
Outcome cli_reproducibility() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "learnsketch_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string base = std::string(LEARNSKETCH_BENCH_EXE) +
                           " --mode freq --d 10000 --n 1000000 --space 750 --seeds 1,2,3 --omit-timing --out ";
  auto run = [&](const std::string& name) {
    const std::string cmd = base + (dir / name).string() + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  o.require(run("a.csv") == 0, "first CLI run failed");
  o.require(run("b.csv") == 0, "second CLI run failed");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(dir / "a.csv");
  o.require(!a.empty() && a == slurp(dir / "b.csv"), "CSV output differs between runs");

  std::istringstream in(a);
  std::size_t rows = 0;
  try {
    for (const auto& r : ls::parse_csv_reports(in)) {
      ++rows;
      const auto algo = ls::parse_freq_algorithm(r.algorithm);
      const auto plan = ls::plan_freq_sketch(algo, 750, ls::SpaceSplit::half);
      o.require(r.space_words == ls::space_words(plan) && r.space_words <= 750,
                fmt("%s: space_words %zu does not match plan", r.algorithm.c_str(), r.space_words));
      if (algo == ls::FreqAlgorithm::mg) o.require(r.m == 375, fmt("MG has %zu counters, expected 375", r.m));
      if (algo == ls::FreqAlgorithm::cs)
        o.require(plan.rows == 3 && r.m == 250 && r.space_words == 750, "CountSketch is not 3 x 250");
    }
  } catch (const std::exception& e) {
    o.require(false, std::string("CSV parse failed: ") + e.what());
  }
  o.require(rows == 18, fmt("expected 18 rows, found %zu", rows));
  fs::remove_all(dir);
  if (o.pass) o.detail = fmt("%zu rows byte-identical across runs, space audit clean", rows);
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "FD PSD dominance and spectral bound", 60, psd_dominance},
      {2, "Misra-Gries contract and determinism", 30, mg_contract},
      {3, "FD on basis rows equals Misra-Gries", 0, reduction_equivalence},
      {4, "trace identity and Monte Carlo agreement", 60, trace_form_identity},
      {5, "matrix error reduces to frequency error", 0, matrix_error_reduction},
      {6, "error scaling envelopes", 300, scaling_envelopes},
      {7, "adversarial lower-bound certificates", 120, lower_bounds},
      {8, "robust learned FD bounded by the minimum", 0, robustness},
      {9, "learned FD dominance on self-similar sequences", 0, learned_fd_dominance},
      {10, "noise monotonicity", 0, noise_monotonicity},
      {11, "CLI reproducibility and space audit", 0, cli_reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.pass && c.time_limit_s > 0 && secs > c.time_limit_s) {
      o.pass = false;
      o.detail = fmt("took %.1f s, limit %.0f s", secs, c.time_limit_s);
    }
    if (!o.pass) ++failures;
    std::printf("[%s] criterion %2d: %s (%.1f s) - %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
