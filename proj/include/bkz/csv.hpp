#pragma once

// Run-trace CSV: one row per recorded iteration, one file per (trial, method)
// run. Numbers are written with std::to_chars (17 significant digits, locale
// independent, "nan" for missing values) so that identical runs produce
// byte-identical files on any platform.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "bkz/errors.hpp"
#include "bkz/solver.hpp"

namespace bkz {

inline constexpr std::string_view kCsvHeader =
    "trial,method,k,index,residual_norm,error_norm,bregman_dist,step_kind,"
    "stepsize";

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

inline void append_long(std::string& out, long v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace detail

inline void append_csv_rows(std::string& out, long trial,
                            std::string_view method, const RunRecord& record) {
  for (const auto& row : record.rows) {
    detail::append_long(out, trial);
    out.push_back(',');
    out.append(method);
    out.push_back(',');
    detail::append_long(out, row.k);
    out.push_back(',');
    detail::append_long(out, row.index);
    out.push_back(',');
    detail::append_double(out, row.residual_norm);
    out.push_back(',');
    detail::append_double(out, row.error_norm);
    out.push_back(',');
    detail::append_double(out, row.bregman_dist);
    out.push_back(',');
    out.append(trace_kind_name(row.kind));
    out.push_back(',');
    detail::append_double(out, row.stepsize);
    out.push_back('\n');
  }
}

inline std::string run_csv_text(long trial, std::string_view method,
                                const RunRecord& record) {
  std::string out;
  out.reserve(record.rows.size() * 96 + 128);
  out.append(kCsvHeader);
  out.push_back('\n');
  append_csv_rows(out, trial, method, record);
  return out;
}

inline void write_run_csv(const std::filesystem::path& path, long trial,
                          std::string_view method, const RunRecord& record) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("csv: cannot open for writing: " + path.string());
  }
  out << run_csv_text(trial, method, record);
  if (!out) {
    throw std::runtime_error("csv: write failed: " + path.string());
  }
}

struct CsvRow {
  long trial = 0;
  std::string method;
  long k = 0;
  long index = 0;
  double residual_norm = 0.0;
  double error_norm = 0.0;
  double bregman_dist = 0.0;
  std::string step_kind;
  double stepsize = 0.0;
};

namespace detail {

inline double parse_double_field(std::string_view s, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::runtime_error(std::string("csv: bad number in column ") + what);
  }
  return v;
}

inline long parse_long_field(std::string_view s, const char* what) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::runtime_error(std::string("csv: bad integer in column ") + what);
  }
  return v;
}

}  // namespace detail

inline std::vector<CsvRow> parse_run_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) {
      throw std::runtime_error("csv: missing trailing newline");
    }
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (first) {
      if (line != kCsvHeader) {
        throw std::runtime_error("csv: unexpected header row");
      }
      first = false;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t fpos = 0;
    while (true) {
      const std::size_t comma = line.find(',', fpos);
      if (comma == std::string_view::npos) {
        fields.push_back(line.substr(fpos));
        break;
      }
      fields.push_back(line.substr(fpos, comma - fpos));
      fpos = comma + 1;
    }
    if (fields.size() != 9) {
      throw std::runtime_error("csv: wrong field count");
    }
    CsvRow row;
    row.trial = detail::parse_long_field(fields[0], "trial");
    row.method = std::string(fields[1]);
    row.k = detail::parse_long_field(fields[2], "k");
    row.index = detail::parse_long_field(fields[3], "index");
    row.residual_norm = detail::parse_double_field(fields[4], "residual_norm");
    row.error_norm = detail::parse_double_field(fields[5], "error_norm");
    row.bregman_dist = detail::parse_double_field(fields[6], "bregman_dist");
    row.step_kind = std::string(fields[7]);
    row.stepsize = detail::parse_double_field(fields[8], "stepsize");
    rows.push_back(std::move(row));
  }
  if (first) {
    throw std::runtime_error("csv: empty file");
  }
  return rows;
}

inline std::vector<CsvRow> read_run_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("csv: cannot open for reading: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_csv(buf.str());
}

}  // namespace bkz
