#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "learnsketch/count_sketch.hpp"
#include "learnsketch/datagen.hpp"
#include "learnsketch/evaluation.hpp"
#include "learnsketch/frequent_directions.hpp"
#include "learnsketch/io.hpp"
#include "learnsketch/learned_sketch.hpp"
#include "learnsketch/misra_gries.hpp"
#include "learnsketch/oracles.hpp"
#include "learnsketch/space.hpp"

namespace learnsketch {

enum class BenchMode { freq, matrix, adversarial, noise };

inline std::string_view to_string(BenchMode m) {
  switch (m) {
    case BenchMode::freq: return "freq";
    case BenchMode::matrix: return "matrix";
    case BenchMode::adversarial: return "adversarial";
    case BenchMode::noise: return "noise";
  }
  return "?";
}

inline BenchMode parse_bench_mode(std::string_view s) {
  for (auto m : {BenchMode::freq, BenchMode::matrix, BenchMode::adversarial, BenchMode::noise})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (expected freq|matrix|adversarial|noise)");
}

struct BenchConfig {
  BenchMode mode = BenchMode::freq;

  // Frequency generator (freq and adversarial modes).
  std::size_t d = 10000;
  Count n = 1000000;
  // Matrix sequence generator (matrix and noise modes).
  std::size_t count = 20;
  std::size_t mat_d = 128;
  std::size_t mat_n = 512;
  std::size_t k_shared = 16;
  double drift = 0.5;
  /// Seeds the generated instance. The per-cell seeds only drive hashing,
  /// oracle noise and adversarial choices.
  std::uint64_t data_seed = 1;

  std::vector<std::string> algorithms;  // empty: the mode's default list
  std::vector<std::size_t> space{750};
  std::vector<std::size_t> rank{20, 40, 60, 80, 100, 120};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  SpaceSplit split = SpaceSplit::half;
  std::vector<double> cs_c{1.0};
  std::vector<double> noise{0.0, 1e-3, 1e-2, 1e-1, 1.0};

  /// freq: perfect|partial|adversarial; matrix/noise: first|perfect|adversarial.
  std::string oracle;
  double partial_c = 0.1;
  bool include_first = false;
  bool omit_timing = false;
  std::size_t threads = 0;  // 0: hardware concurrency

  std::vector<std::string> input;
  std::string out;
  std::string format = "csv";
  std::string export_dir;
  std::string save_sketches;

  [[nodiscard]] std::vector<std::string> algorithm_list() const {
    if (!algorithms.empty()) return algorithms;
    switch (mode) {
      case BenchMode::freq: return {"mg", "learned_mg", "cs", "learned_cs", "cs++", "learned_cs++"};
      case BenchMode::matrix: return {"fd", "learned_fd", "svd"};
      case BenchMode::adversarial: return {"mg_adversarial", "learned_mg_adversarial"};
      case BenchMode::noise: return {"learned_fd_noise"};
    }
    return {};
  }

  [[nodiscard]] std::string oracle_kind() const {
    if (!oracle.empty()) return oracle;
    return (mode == BenchMode::matrix || mode == BenchMode::noise) ? "first" : "perfect";
  }
};

namespace detail {
template <class T>
void normalize_sweep(std::vector<T>& v, const char* name, bool allow_zero) {
  for (const T& x : v)
    if (!(x > T{} || (allow_zero && x == T{})))
      throw std::invalid_argument(std::string("config: ") + name + " values must be positive");
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}
}  // namespace detail

/// Checks and canonicalizes a config: sweeps sorted and de-duplicated, seeds
/// non-empty, names known.
inline void validate(BenchConfig& c) {
  detail::normalize_sweep(c.space, "space", false);
  detail::normalize_sweep(c.rank, "rank", false);
  detail::normalize_sweep(c.cs_c, "cs_c", true);
  detail::normalize_sweep(c.noise, "noise", true);
  if (c.seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
  if (c.format != "csv" && c.format != "json") throw std::invalid_argument("config: format must be csv or json");
  if (c.d == 0 || c.n == 0 || c.mat_d == 0 || c.mat_n == 0 || c.count == 0)
    throw std::invalid_argument("config: generator sizes must be positive");
  if (!(c.partial_c > 0.0 && c.partial_c <= 1.0)) throw std::invalid_argument("config: partial_c must lie in (0, 1]");
  const auto kind = c.oracle_kind();
  const bool matrixish = c.mode == BenchMode::matrix || c.mode == BenchMode::noise;
  const bool known = matrixish ? (kind == "first" || kind == "perfect" || kind == "adversarial")
                               : (kind == "perfect" || kind == "partial" || kind == "adversarial");
  if (!known) throw std::invalid_argument("config: oracle '" + kind + "' is not valid for mode " +
                                          std::string(to_string(c.mode)));
  for (const auto& a : c.algorithm_list()) {
    bool ok = false;
    switch (c.mode) {
      case BenchMode::freq:
        parse_freq_algorithm(a);
        ok = true;
        break;
      case BenchMode::matrix: ok = a == "fd" || a == "learned_fd" || a == "svd" || a == "robust_lfd"; break;
      case BenchMode::adversarial: ok = a == "mg_adversarial" || a == "learned_mg_adversarial"; break;
      case BenchMode::noise: ok = a == "learned_fd_noise"; break;
    }
    if (!ok) throw std::invalid_argument("config: algorithm '" + a + "' is not valid for mode " +
                                         std::string(to_string(c.mode)));
  }
}

inline Json to_json(const BenchConfig& c) {
  return Json{{"mode", to_string(c.mode)},
              {"d", c.d},
              {"n", c.n},
              {"count", c.count},
              {"mat_d", c.mat_d},
              {"mat_n", c.mat_n},
              {"k_shared", c.k_shared},
              {"drift", c.drift},
              {"data_seed", c.data_seed},
              {"algorithms", c.algorithm_list()},
              {"space", c.space},
              {"rank", c.rank},
              {"seeds", c.seeds},
              {"split", to_string(c.split)},
              {"cs_c", c.cs_c},
              {"noise", c.noise},
              {"oracle", c.oracle_kind()},
              {"partial_c", c.partial_c},
              {"include_first", c.include_first},
              {"omit_timing", c.omit_timing},
              {"input", c.input}};
}

/// Reads the keys of `j` present in the config; unknown keys are rejected.
inline void apply_json(BenchConfig& c, const Json& j) {
  for (const auto& [key, v] : j.items()) {
    if (key == "mode") c.mode = parse_bench_mode(v.get<std::string>());
    else if (key == "d") c.d = v.get<std::size_t>();
    else if (key == "n") c.n = v.get<Count>();
    else if (key == "count") c.count = v.get<std::size_t>();
    else if (key == "mat_d") c.mat_d = v.get<std::size_t>();
    else if (key == "mat_n") c.mat_n = v.get<std::size_t>();
    else if (key == "k_shared") c.k_shared = v.get<std::size_t>();
    else if (key == "drift") c.drift = v.get<double>();
    else if (key == "data_seed") c.data_seed = v.get<std::uint64_t>();
    else if (key == "algorithms") c.algorithms = v.get<std::vector<std::string>>();
    else if (key == "space") c.space = v.get<std::vector<std::size_t>>();
    else if (key == "rank") c.rank = v.get<std::vector<std::size_t>>();
    else if (key == "seeds") c.seeds = v.get<std::vector<std::uint64_t>>();
    else if (key == "split") c.split = parse_split(v.get<std::string>());
    else if (key == "cs_c") c.cs_c = v.get<std::vector<double>>();
    else if (key == "noise") c.noise = v.get<std::vector<double>>();
    else if (key == "oracle") c.oracle = v.get<std::string>();
    else if (key == "partial_c") c.partial_c = v.get<double>();
    else if (key == "include_first") c.include_first = v.get<bool>();
    else if (key == "omit_timing") c.omit_timing = v.get<bool>();
    else if (key == "threads") c.threads = v.get<std::size_t>();
    else if (key == "input") c.input = v.get<std::vector<std::string>>();
    else if (key == "out") c.out = v.get<std::string>();
    else if (key == "format") c.format = v.get<std::string>();
    else if (key == "export_dir") c.export_dir = v.get<std::string>();
    else if (key == "save_sketches") c.save_sketches = v.get<std::string>();
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

struct BenchResult {
  std::vector<ErrorReport> reports;
  Json extra = Json::object();  // summaries, certificates, fitted slopes

  [[nodiscard]] bool any_error() const {
    return std::any_of(reports.begin(), reports.end(), [](const ErrorReport& r) { return !r.ok(); });
  }
};

/// Runs fn(0..count-1) on `threads` workers. Each index writes only its own
/// slot, so the output order never depends on scheduling.
inline void run_parallel(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline std::string safe_name(std::string s) {
  for (char& ch : s)
    if (ch == '+') ch = 'p';
  return s;
}

// Streams the instance through a sketch and fills the error fields.
template <class Sketch>
void measure_freq(Sketch& sketch, const StreamInstance& inst, bool omit_timing, ErrorReport& r) {
  Stopwatch sw;
  for (ElementId id : inst.items) sketch.update(id);
  r.wall_ms = omit_timing ? 0.0 : sw.elapsed_ms();
  const auto est = [&](ElementId id) { return static_cast<double>(sketch.estimate(id)); };
  r.weighted_err = weighted_error_freq(inst.truth, est);
  r.unweighted_err = unweighted_error_freq(inst.truth, est);
  r.space_words = sketch.space_words();
}

inline FrequencyOracle make_freq_oracle(const BenchConfig& c, const FrequencyTable& truth, std::size_t k_h) {
  const auto kind = c.oracle_kind();
  if (kind == "partial") return partial_freq_oracle(truth, k_h, c.partial_c, c.data_seed);
  if (kind == "adversarial") return adversarial_freq_oracle(truth, k_h);
  return perfect_freq_oracle(truth, k_h);
}

inline void audit_space(const ErrorReport& r, const FreqSketchPlan& plan) {
  if (r.space_words != space_words(plan))
    throw std::logic_error("space accounting mismatch for " + r.algorithm + ": sketch reports " +
                           std::to_string(r.space_words) + " words, plan says " + std::to_string(space_words(plan)));
}

// Runs one frequency-sketch cell; throws on infeasible parameters.
inline ErrorReport run_freq_cell(const BenchConfig& c, const StreamInstance& inst, FreqAlgorithm algo,
                                 std::size_t budget, double cs_c, std::uint64_t seed,
                                 const std::filesystem::path& sketch_dir) {
  const FreqSketchPlan plan = plan_freq_sketch(algo, budget, c.split);
  ErrorReport r;
  r.algorithm = std::string(to_string(algo));
  r.k_h = plan.heavy;
  r.c = cs_c;
  r.seed = seed;
  const auto snapshot_path = [&] {
    return sketch_dir / (safe_name(r.algorithm) + "_s" + std::to_string(budget) + "_seed" + std::to_string(seed) + ".json");
  };
  const auto cs_mode = uses_truncation(algo) ? CountSketch::Mode::plus_plus : CountSketch::Mode::plain;
  switch (algo) {
    case FreqAlgorithm::mg: {
      MisraGriesSketch s(plan.counters);
      r.m = s.capacity();
      r.tau = s.threshold();
      measure_freq(s, inst, c.omit_timing, r);
      if (!sketch_dir.empty()) write_snapshot(snapshot_path(), s);
      break;
    }
    case FreqAlgorithm::learned_mg: {
      LearnedMisraGriesSketch s(make_freq_oracle(c, inst.truth, plan.heavy), MisraGriesSketch(plan.counters));
      r.m = plan.counters;
      r.tau = s.inner().threshold();
      measure_freq(s, inst, c.omit_timing, r);
      if (!sketch_dir.empty()) write_snapshot(snapshot_path(), s);
      break;
    }
    case FreqAlgorithm::cs:
    case FreqAlgorithm::cs_pp: {
      CountSketch s(plan.rows, plan.width, seed, cs_mode, cs_c);
      r.m = plan.width;
      measure_freq(s, inst, c.omit_timing, r);
      break;
    }
    case FreqAlgorithm::learned_cs:
    case FreqAlgorithm::learned_cs_pp: {
      LearnedCountSketch s(make_freq_oracle(c, inst.truth, plan.heavy),
                           CountSketch(plan.rows, plan.width, seed, cs_mode, cs_c));
      r.m = plan.width;
      measure_freq(s, inst, c.omit_timing, r);
      break;
    }
    case FreqAlgorithm::cm: {
      CountMinSketch s(plan.rows, plan.width, seed);
      r.m = plan.width;
      measure_freq(s, inst, c.omit_timing, r);
      break;
    }
    case FreqAlgorithm::learned_cm: {
      LearnedCountMinSketch s(make_freq_oracle(c, inst.truth, plan.heavy), CountMinSketch(plan.rows, plan.width, seed));
      r.m = plan.width;
      measure_freq(s, inst, c.omit_timing, r);
      break;
    }
  }
  audit_space(r, plan);
  return r;
}

// Groups successful reports by (algorithm, m-or-space, C) and summarizes over seeds.
template <class Key>
Json summarize_groups(const std::vector<ErrorReport>& reports, const std::vector<Key>& keys,
                      const std::function<Json(const Key&)>& describe) {
  std::map<Key, std::pair<std::vector<double>, std::vector<double>>> groups;
  std::vector<Key> order;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (!reports[i].ok()) continue;
    auto [it, fresh] = groups.try_emplace(keys[i]);
    if (fresh) order.push_back(keys[i]);
    it->second.first.push_back(reports[i].weighted_err);
    it->second.second.push_back(reports[i].unweighted_err);
  }
  Json out = Json::array();
  for (const auto& k : order) {
    const auto& [w, u] = groups.at(k);
    const SummaryStats sw = summarize(w);
    const SummaryStats su = summarize(u);
    Json j = describe(k);
    j["trials"] = sw.count;
    j["weighted_median"] = sw.median;
    j["weighted_mean"] = sw.mean;
    j["weighted_std"] = sw.stddev;
    j["unweighted_median"] = su.median;
    j["unweighted_mean"] = su.mean;
    j["unweighted_std"] = su.stddev;
    out.push_back(j);
  }
  return out;
}

inline ErrorReport failed_report(std::string algorithm, std::uint64_t seed, const std::exception& e) {
  ErrorReport r;
  r.algorithm = std::move(algorithm);
  r.seed = seed;
  r.error = e.what();
  return r;
}

}  // namespace detail

// ---- frequency sweep -----------------------------------------------------------

inline StreamInstance load_or_generate_stream(const BenchConfig& c) {
  if (c.input.empty()) return zipf_stream(c.d, c.n, c.data_seed);
  if (c.input.size() != 1) throw std::invalid_argument("freq mode takes exactly one --input stream file");
  auto items = read_stream(c.input.front());
  if (items.empty()) throw IoError(c.input.front(), "stream is empty");
  const std::size_t d = static_cast<std::size_t>(*std::max_element(items.begin(), items.end()));
  return detail::stream_from_items(std::move(items), d);
}

/// One report per (algorithm, space, C, seed). C only varies for the
/// truncating CountSketch variants; other rows carry C = 0.
inline BenchResult run_freq_bench(const BenchConfig& config) {
  const StreamInstance inst = load_or_generate_stream(config);
  if (!config.export_dir.empty()) write_stream(std::filesystem::path(config.export_dir) / "stream.txt", inst.items);

  struct Cell {
    std::string algorithm;
    std::size_t space;
    double c;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& name : config.algorithm_list()) {
    const FreqAlgorithm a = parse_freq_algorithm(name);
    const std::vector<double> cs = uses_truncation(a) ? config.cs_c : std::vector<double>{0.0};
    for (std::size_t s : config.space)
      for (double cv : cs)
        for (std::uint64_t seed : config.seeds) cells.push_back({name, s, cv, seed});
  }

  BenchResult res;
  res.reports.resize(cells.size());
  const std::filesystem::path sketch_dir = config.save_sketches;
  run_parallel(cells.size(), config.threads, [&](std::size_t i) {
    const Cell& cell = cells[i];
    try {
      res.reports[i] = detail::run_freq_cell(config, inst, parse_freq_algorithm(cell.algorithm), cell.space, cell.c,
                                             cell.seed, sketch_dir);
    } catch (const std::exception& e) {
      res.reports[i] = detail::failed_report(cell.algorithm, cell.seed, e);
      res.reports[i].c = cell.c;
    }
  });

  using Key = std::tuple<std::string, std::size_t, double>;
  std::vector<Key> keys;
  for (const auto& cell : cells) keys.emplace_back(cell.algorithm, cell.space, cell.c);
  res.extra["summary"] = detail::summarize_groups<Key>(res.reports, keys, [](const Key& k) {
    return Json{{"algorithm", std::get<0>(k)}, {"space", std::get<1>(k)}, {"C", std::get<2>(k)}};
  });
  res.extra["instance"] = Json{{"d", inst.d}, {"n", inst.n()}, {"distinct", inst.truth.distinct()}};
  return res;
}

// ---- matrix sweep --------------------------------------------------------------

struct MatrixWorkload {
  std::vector<DenseMatrix> instances;
  std::vector<MatrixTruth> truths;
  std::size_t first_eval = 1;

  [[nodiscard]] std::size_t dim() const { return instances.front().cols(); }
};

inline MatrixWorkload load_or_generate_matrices(const BenchConfig& c) {
  MatrixWorkload w;
  if (c.input.empty()) {
    for (auto& inst : matrix_sequence(c.count, c.mat_d, c.mat_n, c.k_shared, c.drift, c.data_seed))
      w.instances.push_back(std::move(inst.a));
  } else {
    for (const auto& path : c.input) w.instances.push_back(read_dense(path).matrix);
  }
  if (w.instances.empty()) throw std::invalid_argument("matrix workload is empty");
  for (const auto& a : w.instances)
    if (a.cols() != w.instances.front().cols()) throw std::invalid_argument("matrix instances differ in dimension");
  w.truths.reserve(w.instances.size());
  for (const auto& a : w.instances) w.truths.emplace_back(a);
  w.first_eval = (c.include_first || w.instances.size() == 1) ? 0 : 1;
  if (!c.export_dir.empty()) {
    for (std::size_t i = 0; i < w.instances.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "instance_%03zu.bin", i);
      write_dense(std::filesystem::path(c.export_dir) / name, w.instances[i],
                  Json{{"index", i}, {"data_seed", c.data_seed}, {"drift", c.drift}, {"k_shared", c.k_shared}});
    }
  }
  return w;
}

namespace detail {

inline DenseMatrix top_rows_as_columns(const DenseMatrix& vt, std::size_t k) {
  return vt.row_block(0, k).transpose();
}

// Oracle for evaluation instance `idx` according to the configured kind.
inline DirectionOracle direction_oracle_for(const BenchConfig& c, const MatrixWorkload& w, std::size_t idx,
                                            std::size_t k_h) {
  const auto kind = c.oracle_kind();
  if (kind == "perfect") return {top_rows_as_columns(w.truths[idx].factors.vt, k_h)};
  if (kind == "adversarial") return adversarial_direction_oracle(w.instances.front(), k_h);
  return {top_rows_as_columns(w.truths.front().factors.vt, k_h)};
}

inline DenseMatrix truncated_svd_sketch(const MatrixTruth& t, std::size_t r) {
  DenseMatrix b = t.factors.vt.row_block(0, std::min(r, t.factors.vt.rows()));
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (double& x : b.row(i)) x *= t.factors.singular_values[i];
  return b;
}

struct InstanceErrors {
  std::vector<double> weighted;
  std::vector<double> unweighted;
  double wall_ms = 0.0;
};

inline void finalize_matrix_report(ErrorReport& r, const InstanceErrors& e) {
  r.weighted_err = median(e.weighted);
  r.unweighted_err = median(e.unweighted);
  r.wall_ms = e.wall_ms;
}

}  // namespace detail

/// Learned Frequent Directions at sketch rank r: capacity 2r, k_h = r/2
/// predicted directions, orthogonal sketch with r rows and threshold r/2.
inline std::size_t learned_rank_split(std::size_t r) { return r / 2; }

/// Runs one (algorithm, rank) cell over the evaluation instances. `noise`
/// perturbs the oracle (noise mode only).
inline ErrorReport run_matrix_cell(const BenchConfig& c, const MatrixWorkload& w, const std::string& algo,
                                   std::size_t r, std::uint64_t seed, std::optional<double> noise = std::nullopt) {
  const std::size_t d = w.dim();
  if (r >= d) throw std::invalid_argument("rank " + std::to_string(r) + " must be below dimension " + std::to_string(d));
  ErrorReport rep;
  rep.algorithm = algo;
  rep.seed = seed;
  detail::InstanceErrors errs;
  const std::size_t capacity = 2 * r;
  const std::size_t k_h = learned_rank_split(r);
  const std::filesystem::path sketch_dir = c.save_sketches;
  const auto save = [&](std::size_t idx, const DenseMatrix& b) {
    if (sketch_dir.empty()) return;
    char name[96];
    std::snprintf(name, sizeof name, "%s_r%zu_seed%llu_i%03zu.bin", algo.c_str(), r,
                  static_cast<unsigned long long>(seed), idx);
    write_dense(sketch_dir / name, b, Json{{"algorithm", algo}, {"rank", r}, {"seed", seed}, {"instance", idx}});
  };

  for (std::size_t idx = w.first_eval; idx < w.instances.size(); ++idx) {
    const DenseMatrix& a = w.instances[idx];
    const MatrixTruth& truth = w.truths[idx];
    detail::Stopwatch sw;
    DenseMatrix b;
    if (algo == "fd") {
      FrequentDirections fd(capacity, r, d);
      fd.update_rows(a);
      errs.wall_ms += sw.elapsed_ms();
      b = fd.result();
      rep.m = capacity;
      rep.tau = r;
      rep.space_words = classic_fd_space(capacity, d).with_oracle;
    } else if (algo == "learned_fd" || algo == "learned_fd_noise") {
      DirectionOracle oracle = detail::direction_oracle_for(c, w, idx, k_h);
      if (noise) oracle = noisy_direction_oracle(oracle, *noise, seed);
      sw = detail::Stopwatch();
      LearnedFrequentDirections lfd(capacity, oracle.p);
      lfd.update_rows(a);
      errs.wall_ms += sw.elapsed_ms();
      b = lfd.result();
      rep.m = capacity;
      rep.tau = lfd.perp_sketch().threshold();
      rep.k_h = k_h;
      rep.c = noise.value_or(0.0);
      rep.space_words = lfd.space_words();
    } else if (algo == "robust_lfd") {
      const DirectionOracle oracle = detail::direction_oracle_for(c, w, idx, k_h);
      sw = detail::Stopwatch();
      RobustLearnedFrequentDirections<> rob(capacity, oracle.p, r);
      rob.update_rows(a);
      errs.wall_ms += sw.elapsed_ms();
      const RobustLfdResult out = rob.result();
      const auto e = direction_errors(truth, [&](std::span<const double> x) { return out.query(x); });
      errs.weighted.push_back(e.weighted());
      errs.unweighted.push_back(e.unweighted());
      rep.m = capacity;
      rep.tau = capacity;
      rep.k_h = k_h;
      rep.space_words = 2 * capacity * d + rob.residual().space_words();
      save(idx, out.learned);
      continue;
    } else if (algo == "svd") {
      b = detail::truncated_svd_sketch(truth, r);
      errs.wall_ms += sw.elapsed_ms();
      rep.m = r;
      rep.space_words = r * d;
    } else {
      throw std::invalid_argument("unknown matrix algorithm '" + algo + "'");
    }
    errs.weighted.push_back(weighted_error_matrix(truth, b));
    errs.unweighted.push_back(unweighted_error_matrix(truth, b));
    save(idx, b);
  }
  detail::finalize_matrix_report(rep, errs);
  if (c.omit_timing) rep.wall_ms = 0.0;
  return rep;
}

/// One report per (algorithm, rank, seed); the error is the median over the
/// evaluation instances (all but the first unless include_first is set).
inline BenchResult run_matrix_bench(const BenchConfig& config) {
  const MatrixWorkload w = load_or_generate_matrices(config);
  struct Cell {
    std::string algorithm;
    std::size_t rank;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& a : config.algorithm_list())
    for (std::size_t r : config.rank)
      for (std::uint64_t s : config.seeds) cells.push_back({a, r, s});

  BenchResult res;
  res.reports.resize(cells.size());
  run_parallel(cells.size(), config.threads, [&](std::size_t i) {
    const Cell& cell = cells[i];
    try {
      res.reports[i] = run_matrix_cell(config, w, cell.algorithm, cell.rank, cell.seed);
    } catch (const std::exception& e) {
      res.reports[i] = detail::failed_report(cell.algorithm, cell.seed, e);
      res.reports[i].m = 2 * cell.rank;
    }
  });
  using Key = std::tuple<std::string, std::size_t>;
  std::vector<Key> keys;
  for (const auto& cell : cells) keys.emplace_back(cell.algorithm, cell.rank);
  res.extra["summary"] = detail::summarize_groups<Key>(res.reports, keys, [](const Key& k) {
    return Json{{"algorithm", std::get<0>(k)}, {"rank", std::get<1>(k)}};
  });
  Json space = Json::array();
  for (std::size_t r : config.rank)
    if (r < w.dim()) {
      const auto s = learned_fd_space(2 * r, learned_rank_split(r), w.dim());
      space.push_back({{"rank", r}, {"learned_with_oracle", s.with_oracle}, {"learned_without_oracle", s.without_oracle}});
    }
  res.extra["space_conventions"] = space;
  res.extra["instances"] = Json{{"count", w.instances.size()}, {"first_eval", w.first_eval}, {"dim", w.dim()}};
  return res;
}

// ---- noise sweep ---------------------------------------------------------------

/// Learned FD with the configured oracle perturbed at each noise level. The
/// C column holds σ. Per rank, the summary reports the median error per σ and
/// the log-log slope of the excess error over σ = 0 on σ ∈ [1e-3, 1e-1].
inline BenchResult run_noise_bench(const BenchConfig& config) {
  const MatrixWorkload w = load_or_generate_matrices(config);
  struct Cell {
    std::size_t rank;
    double sigma;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t r : config.rank)
    for (double s : config.noise)
      for (std::uint64_t seed : config.seeds) cells.push_back({r, s, seed});

  BenchResult res;
  res.reports.resize(cells.size());
  run_parallel(cells.size(), config.threads, [&](std::size_t i) {
    const Cell& cell = cells[i];
    try {
      res.reports[i] = run_matrix_cell(config, w, "learned_fd_noise", cell.rank, cell.seed, cell.sigma);
    } catch (const std::exception& e) {
      res.reports[i] = detail::failed_report("learned_fd_noise", cell.seed, e);
      res.reports[i].c = cell.sigma;
    }
  });

  Json per_rank = Json::array();
  for (std::size_t r : config.rank) {
    Json levels = Json::array();
    std::vector<std::pair<double, double>> medians;
    for (double s : config.noise) {
      std::vector<double> v;
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].rank == r && cells[i].sigma == s && res.reports[i].ok()) v.push_back(res.reports[i].weighted_err);
      if (v.empty()) continue;
      const SummaryStats st = summarize(v);
      medians.emplace_back(s, st.median);
      levels.push_back({{"sigma", s}, {"median", st.median}, {"mean", st.mean}, {"std", st.stddev}});
    }
    Json entry{{"rank", r}, {"levels", levels}};
    const auto base = std::find_if(medians.begin(), medians.end(), [](const auto& p) { return p.first == 0.0; });
    std::vector<std::pair<double, double>> excess;
    bool monotone = true;
    for (std::size_t i = 1; i < medians.size(); ++i) monotone = monotone && medians[i].second >= medians[i - 1].second;
    for (const auto& [s, m] : medians) {
      if (s < 1e-3 || s > 1e-1) continue;
      const double e = base == medians.end() ? m : m - base->second;
      if (e > 0.0) excess.emplace_back(s, e);
    }
    entry["monotone"] = monotone;
    if (excess.size() >= 3) entry["excess_slope"] = fit_error_scaling(excess);
    else entry["excess_slope"] = nullptr;
    per_rank.push_back(entry);
  }
  res.extra["noise_summary"] = per_rank;
  return res;
}

// ---- adversarial suite --------------------------------------------------------

/// Reference error levels used to judge adversarial runs.
inline double classic_mg_reference(double n, double d, double m) {
  return std::log(m / std::log(2.0 * d / m)) * std::log(d / m) / m * n / (std::log(d) * std::log(d));
}

inline double learned_mg_reference(double n, double d, double m) { return n / (m * std::log(d) * std::log(d)); }

/// Classic MG against its adversarial ordering and learned MG (perfect
/// oracle) against its own, per (algorithm, space, seed). The seed drives
/// the adversary's random choices.
inline BenchResult run_adversarial_bench(const BenchConfig& config) {
  struct Cell {
    std::string algorithm;
    std::size_t space;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& a : config.algorithm_list())
    for (std::size_t s : config.space)
      for (std::uint64_t seed : config.seeds) cells.push_back({a, s, seed});

  BenchResult res;
  res.reports.resize(cells.size());
  std::vector<Json> certs(cells.size());
  run_parallel(cells.size(), config.threads, [&](std::size_t i) {
    const Cell& cell = cells[i];
    const auto d = static_cast<double>(config.d);
    try {
      ErrorReport r;
      r.algorithm = cell.algorithm;
      r.seed = cell.seed;
      Json cert{{"algorithm", cell.algorithm}, {"space", cell.space}, {"seed", cell.seed}};
      std::filesystem::path export_path;
      if (!config.export_dir.empty())
        export_path = std::filesystem::path(config.export_dir) /
                      (cell.algorithm + "_s" + std::to_string(cell.space) + "_seed" + std::to_string(cell.seed) + ".txt");
      if (cell.algorithm == "mg_adversarial") {
        const FreqSketchPlan plan = plan_freq_sketch(FreqAlgorithm::mg, cell.space, config.split);
        const auto inst = adversarial_mg_stream(config.d, config.n, plan.counters, cell.seed);
        MisraGriesSketch s(plan.counters);
        r.m = s.capacity();
        r.tau = s.threshold();
        detail::measure_freq(s, inst.stream, config.omit_timing, r);
        detail::audit_space(r, plan);
        const auto& ct = inst.certificate;
        cert.update(Json{{"t", ct.t},
                         {"padding", ct.padding},
                         {"game_steps", ct.game_steps},
                         {"bound", ct.bound},
                         {"min_reduction", ct.min_reduction},
                         {"holds", ct.holds},
                         {"n", inst.stream.n()},
                         {"reference", classic_mg_reference(static_cast<double>(inst.stream.n()), d,
                                                            static_cast<double>(plan.counters))}});
        if (!export_path.empty()) write_stream(export_path, inst.stream.items);
      } else {
        const FreqSketchPlan plan = plan_freq_sketch(FreqAlgorithm::learned_mg, cell.space, config.split);
        const std::size_t m_total = plan.heavy + plan.counters;
        const auto inst = adversarial_lmg_stream(config.d, config.n, m_total, plan.heavy, cell.seed);
        FrequencyOracle oracle;
        for (std::size_t id = 1; id <= plan.heavy; ++id) oracle.heavy.push_back(id);
        LearnedMisraGriesSketch s(oracle, MisraGriesSketch(plan.counters));
        r.m = plan.counters;
        r.tau = s.inner().threshold();
        r.k_h = plan.heavy;
        detail::measure_freq(s, inst.stream, config.omit_timing, r);
        detail::audit_space(r, plan);
        const auto& ct = inst.certificate;
        cert.update(Json{{"game_steps", ct.game_steps},
                         {"range", {ct.range_begin, ct.range_end}},
                         {"zero_estimates", ct.zero_estimates},
                         {"required_zeros", ct.required_zeros},
                         {"max_inner_size", ct.max_inner_size},
                         {"lower_bound", ct.lower_bound},
                         {"holds", ct.holds},
                         {"n", inst.stream.n()},
                         {"reference", learned_mg_reference(static_cast<double>(inst.stream.n()), d,
                                                            static_cast<double>(m_total))}});
        if (!export_path.empty()) write_stream(export_path, inst.stream.items);
      }
      cert["weighted_err"] = r.weighted_err;
      res.reports[i] = r;
      certs[i] = cert;
    } catch (const std::exception& e) {
      res.reports[i] = detail::failed_report(cell.algorithm, cell.seed, e);
      certs[i] = Json{{"algorithm", cell.algorithm}, {"space", cell.space}, {"seed", cell.seed}, {"error", e.what()}};
    }
  });
  res.extra["certificates"] = certs;
  return res;
}

inline BenchResult run_bench(const BenchConfig& config) {
  switch (config.mode) {
    case BenchMode::freq: return run_freq_bench(config);
    case BenchMode::matrix: return run_matrix_bench(config);
    case BenchMode::noise: return run_noise_bench(config);
    case BenchMode::adversarial: return run_adversarial_bench(config);
  }
  throw std::logic_error("unreachable");
}

}  // namespace learnsketch
