#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "learnsketch/dense_matrix.hpp"
#include "learnsketch/evaluation.hpp"
#include "learnsketch/frequency.hpp"
#include "learnsketch/learned_sketch.hpp"
#include "learnsketch/misra_gries.hpp"
#include "learnsketch/oracles.hpp"

namespace learnsketch {

using Json = nlohmann::ordered_json;

class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what) {}
};

namespace detail {
inline std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError(path, "cannot open for reading");
  return in;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError(path, "write failed");
}
}  // namespace detail

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || end != s.data() + s.size())
    throw std::invalid_argument("parse_double: bad number '" + std::string(s) + "'");
  return x;
}

template <class T>
T parse_integer(std::string_view s) {
  T x{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || end != s.data() + s.size())
    throw std::invalid_argument("parse_integer: bad integer '" + std::string(s) + "'");
  return x;
}

// ---- streams ---------------------------------------------------------------

/// One element id per line.
inline void write_stream(const std::filesystem::path& path, const std::vector<ElementId>& items) {
  auto out = detail::open_out(path);
  for (ElementId id : items) out << id << '\n';
  detail::finish(out, path);
}

inline std::vector<ElementId> read_stream(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::vector<ElementId> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      items.push_back(parse_integer<ElementId>(line));
    } catch (const std::invalid_argument&) {
      throw IoError(path, "line " + std::to_string(lineno) + ": not an element id");
    }
  }
  return items;
}

// ---- dense matrices ----------------------------------------------------------

/// Sidecar header path for a dense binary file.
inline std::filesystem::path dense_header_path(const std::filesystem::path& bin) {
  auto h = bin;
  h.replace_extension(".json");
  return h;
}

/// Writes row-major little-endian float64 data to `bin` and a JSON header
/// {rows, cols, dtype, params} next to it.
inline void write_dense(const std::filesystem::path& bin, const DenseMatrix& m, const Json& params = Json::object()) {
  static_assert(std::endian::native == std::endian::little, "dense format assumes a little-endian host");
  {
    auto out = detail::open_out(bin, std::ios::out | std::ios::binary);
    const auto data = m.data();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    detail::finish(out, bin);
  }
  Json header;
  header["rows"] = m.rows();
  header["cols"] = m.cols();
  header["dtype"] = "float64-le";
  header["params"] = params;
  const auto hp = dense_header_path(bin);
  auto out = detail::open_out(hp);
  out << header.dump(2) << '\n';
  detail::finish(out, hp);
}

struct DenseFile {
  DenseMatrix matrix;
  Json params;
};

inline DenseFile read_dense(const std::filesystem::path& bin) {
  const auto hp = dense_header_path(bin);
  Json header;
  try {
    auto in = detail::open_in(hp);
    header = Json::parse(in);
  } catch (const Json::exception& e) {
    throw IoError(hp, std::string("invalid header: ") + e.what());
  }
  if (header.value("dtype", "") != "float64-le") throw IoError(hp, "unsupported dtype");
  const auto rows = header.at("rows").get<std::size_t>();
  const auto cols = header.at("cols").get<std::size_t>();
  std::vector<double> data(rows * cols);
  auto in = detail::open_in(bin, std::ios::in | std::ios::binary);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(data.size() * sizeof(double)))
    throw IoError(bin, "file shorter than header claims");
  if (in.peek() != std::char_traits<char>::eof()) throw IoError(bin, "file longer than header claims");
  try {
    return {DenseMatrix(rows, cols, std::move(data)), header.value("params", Json::object())};
  } catch (const std::invalid_argument& e) {
    throw IoError(bin, e.what());
  }
}

// ---- oracles -------------------------------------------------------------------

inline Json to_json(const FrequencyOracle& o) { return Json{{"heavy", o.heavy}}; }

inline FrequencyOracle frequency_oracle_from_json(const Json& j) {
  FrequencyOracle o{j.at("heavy").get<std::vector<ElementId>>()};
  o.validate();
  return o;
}

inline void write_frequency_oracle(const std::filesystem::path& path, const FrequencyOracle& o) {
  auto out = detail::open_out(path);
  out << to_json(o).dump() << '\n';
  detail::finish(out, path);
}

inline FrequencyOracle read_frequency_oracle(const std::filesystem::path& path) {
  try {
    auto in = detail::open_in(path);
    return frequency_oracle_from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw IoError(path, e.what());
  }
}

inline void write_direction_oracle(const std::filesystem::path& bin, const DirectionOracle& o) {
  write_dense(bin, o.p, Json{{"kind", "direction_oracle"}});
}

inline DirectionOracle read_direction_oracle(const std::filesystem::path& bin) {
  DirectionOracle o{read_dense(bin).matrix};
  o.validate();
  return o;
}

// ---- sketch snapshots --------------------------------------------------------

inline constexpr int kSnapshotVersion = 1;

namespace detail {
inline void require_snapshot(const Json& j, std::string_view type) {
  if (j.at("type") != type) throw std::invalid_argument("snapshot is not a " + std::string(type) + " sketch");
  if (j.value("version", kSnapshotVersion) != kSnapshotVersion)
    throw std::invalid_argument("unsupported snapshot version " + j.at("version").dump());
}
}  // namespace detail

inline Json to_json(const MisraGriesSketch& s) {
  Json entries = Json::array();
  for (const auto& [id, c] : s.entries()) entries.push_back({id, c});
  return Json{{"type", "misra_gries"},
              {"version", kSnapshotVersion},
              {"capacity", s.capacity()},
              {"threshold", s.threshold()},
              {"items_seen", s.items_seen()},
              {"entries", entries}};
}

inline MisraGriesSketch misra_gries_from_json(const Json& j) {
  detail::require_snapshot(j, "misra_gries");
  std::vector<std::pair<ElementId, Count>> entries;
  for (const auto& e : j.at("entries")) entries.emplace_back(e.at(0).get<ElementId>(), e.at(1).get<Count>());
  return MisraGriesSketch::restore(j.at("capacity").get<std::size_t>(), j.at("threshold").get<std::size_t>(),
                                   j.at("items_seen").get<Count>(), entries);
}

inline Json to_json(const LearnedMisraGriesSketch& s) {
  Json exact = Json::array();
  for (const auto& [id, c] : s.exact_counts()) exact.push_back({id, c});
  return Json{{"type", "learned_misra_gries"}, {"version", kSnapshotVersion}, {"exact", exact}, {"inner", to_json(s.inner())}};
}

inline LearnedMisraGriesSketch learned_misra_gries_from_json(const Json& j) {
  detail::require_snapshot(j, "learned_misra_gries");
  std::vector<std::pair<ElementId, Count>> exact;
  for (const auto& e : j.at("exact")) exact.emplace_back(e.at(0).get<ElementId>(), e.at(1).get<Count>());
  return LearnedMisraGriesSketch::restore(exact, misra_gries_from_json(j.at("inner")));
}

template <class Sketch>
void write_snapshot(const std::filesystem::path& path, const Sketch& s) {
  auto out = detail::open_out(path);
  out << to_json(s).dump() << '\n';
  detail::finish(out, path);
}

inline Json read_json(const std::filesystem::path& path) {
  try {
    auto in = detail::open_in(path);
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw IoError(path, e.what());
  }
}

// ---- reports -------------------------------------------------------------------

inline constexpr const char* kReportCsvHeader =
    "algorithm,m,tau,k_h,C,seed,space_words,weighted_err,unweighted_err,wall_ms";

inline std::string to_csv_row(const ErrorReport& r) {
  std::string s = r.algorithm;
  s += ',' + std::to_string(r.m) + ',' + std::to_string(r.tau) + ',' + std::to_string(r.k_h);
  s += ',' + format_double(r.c) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.space_words);
  if (r.ok()) {
    s += ',' + format_double(r.weighted_err) + ',' + format_double(r.unweighted_err);
  } else {
    s += ",nan,nan";
  }
  s += ',' + format_double(r.wall_ms);
  return s;
}

inline std::string to_csv(const std::vector<ErrorReport>& reports) {
  std::string s = kReportCsvHeader;
  s += '\n';
  for (const auto& r : reports) s += to_csv_row(r) + '\n';
  return s;
}

inline std::vector<ErrorReport> parse_csv_reports(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kReportCsvHeader) throw std::invalid_argument("report CSV: bad header");
  std::vector<ErrorReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 10) throw std::invalid_argument("report CSV: expected 10 fields in '" + line + "'");
    ErrorReport r;
    r.algorithm = f[0];
    r.m = parse_integer<std::size_t>(f[1]);
    r.tau = parse_integer<std::size_t>(f[2]);
    r.k_h = parse_integer<std::size_t>(f[3]);
    r.c = parse_double(f[4]);
    r.seed = parse_integer<std::uint64_t>(f[5]);
    r.space_words = parse_integer<std::size_t>(f[6]);
    r.weighted_err = parse_double(f[7]);
    r.unweighted_err = parse_double(f[8]);
    r.wall_ms = parse_double(f[9]);
    if (std::isnan(r.weighted_err)) r.error = "failed";
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<ErrorReport> read_csv_reports(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  try {
    return parse_csv_reports(in);
  } catch (const std::invalid_argument& e) {
    throw IoError(path, e.what());
  }
}

inline Json to_json(const ErrorReport& r) {
  Json j{{"algorithm", r.algorithm}, {"m", r.m},          {"tau", r.tau},
         {"k_h", r.k_h},             {"C", r.c},          {"seed", r.seed},
         {"space_words", r.space_words}};
  if (r.ok()) {
    j["weighted_err"] = r.weighted_err;
    j["unweighted_err"] = r.unweighted_err;
  } else {
    j["weighted_err"] = nullptr;
    j["unweighted_err"] = nullptr;
    j["error"] = r.error;
  }
  j["wall_ms"] = r.wall_ms;
  return j;
}

inline ErrorReport report_from_json(const Json& j) {
  ErrorReport r;
  r.algorithm = j.at("algorithm").get<std::string>();
  r.m = j.at("m").get<std::size_t>();
  r.tau = j.at("tau").get<std::size_t>();
  r.k_h = j.at("k_h").get<std::size_t>();
  r.c = j.at("C").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.space_words = j.at("space_words").get<std::size_t>();
  if (j.contains("error")) {
    r.error = j.at("error").get<std::string>();
  } else {
    r.weighted_err = j.at("weighted_err").get<double>();
    r.unweighted_err = j.at("unweighted_err").get<double>();
  }
  r.wall_ms = j.at("wall_ms").get<double>();
  return r;
}

/// Writes reports as CSV, or as JSON {config, reports, extra...} where
/// `extra` is merged at top level (summaries, certificates).
inline void emit(const std::vector<ErrorReport>& reports, const std::filesystem::path& path, std::string_view format,
                 const Json& config = Json::object(), const Json& extra = Json::object()) {
  if (format == "csv") {
    auto out = detail::open_out(path);
    out << to_csv(reports);
    detail::finish(out, path);
  } else if (format == "json") {
    Json doc;
    doc["config"] = config;
    doc["reports"] = Json::array();
    for (const auto& r : reports) doc["reports"].push_back(to_json(r));
    for (const auto& [k, v] : extra.items()) doc[k] = v;
    auto out = detail::open_out(path);
    out << doc.dump(2) << '\n';
    detail::finish(out, path);
  } else {
    throw std::invalid_argument("emit: unknown format '" + std::string(format) + "' (expected csv|json)");
  }
}

inline std::vector<ErrorReport> read_json_reports(const std::filesystem::path& path) {
  const Json doc = read_json(path);
  std::vector<ErrorReport> out;
  try {
    for (const auto& j : doc.at("reports")) out.push_back(report_from_json(j));
  } catch (const Json::exception& e) {
    throw IoError(path, e.what());
  }
  return out;
}

}  // namespace learnsketch
