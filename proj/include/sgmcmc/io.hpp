#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sgmcmc/dataset.hpp"
#include "sgmcmc/trace.hpp"
#include "sgmcmc/types.hpp"

namespace sgmcmc {

namespace detail {

//! Shortest round-trip decimal representation of a double.
inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace detail

//! Dataset CSV: required header row, feature columns then one response
//! column; one row per datum; UTF-8, LF line endings.
template <typename S>
void save_dataset_csv(const Dataset<S>& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("save_dataset_csv: cannot open " + path);
  for (Index j = 0; j < dataset.feature_dim(); ++j) out << "x" << j << ",";
  out << "y\n";
  for (Index i = 0; i < dataset.size(); ++i) {
    for (Index j = 0; j < dataset.feature_dim(); ++j) {
      out << detail::format_value(static_cast<double>(dataset.features()(i, j))) << ",";
    }
    out << detail::format_value(static_cast<double>(dataset.response(i))) << "\n";
  }
}

template <typename S>
Dataset<S> load_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("load_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw config_error("load_dataset_csv: missing header row");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2) {
    throw config_error("load_dataset_csv: header needs at least one feature and a response");
  }
  const Index dim = static_cast<Index>(header.size()) - 1;

  std::vector<std::vector<S>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (static_cast<Index>(fields.size()) != dim + 1) {
      throw config_error("load_dataset_csv: wrong field count at line " + std::to_string(line_no));
    }
    std::vector<S> row(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k) {
      try {
        row[k] = static_cast<S>(std::stod(fields[k]));
      } catch (const std::exception&) {
        throw config_error("load_dataset_csv: bad number at line " + std::to_string(line_no));
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw config_error("load_dataset_csv: no data rows");

  MatrixX<S> features(static_cast<Index>(rows.size()), dim);
  VectorX<S> responses(static_cast<Index>(rows.size()));
  for (Index i = 0; i < features.rows(); ++i) {
    for (Index j = 0; j < dim; ++j) features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    responses(i) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(dim)];
  }
  return Dataset<S>(std::move(features), std::move(responses));
}

//! Trace CSV: header `t,wall_s,theta_0,...,theta_{D-1}`, one row per
//! retained sample.  The t and theta columns are deterministic functions of
//! the run configuration; wall_s is measured compute time.
template <typename S>
void save_trace_csv(const Trace<S>& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("save_trace_csv: cannot open " + path);
  out << "t,wall_s";
  for (Index j = 0; j < trace.dim(); ++j) out << ",theta_" << j;
  out << "\n";
  for (Index i = 0; i < trace.size(); ++i) {
    out << trace.iterations[static_cast<std::size_t>(i)] << ","
        << detail::format_value(trace.seconds[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < trace.dim(); ++j) {
      out << "," << detail::format_value(static_cast<double>(trace.samples(i, j)));
    }
    out << "\n";
  }
}

template <typename S>
Trace<S> load_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("load_trace_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw config_error("load_trace_csv: missing header row");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "t" || header[1] != "wall_s") {
    throw config_error("load_trace_csv: unexpected header in " + path);
  }
  const Index dim = static_cast<Index>(header.size()) - 2;

  Trace<S> trace;
  std::vector<VectorX<S>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (static_cast<Index>(fields.size()) != dim + 2) {
      throw config_error("load_trace_csv: wrong field count in " + path);
    }
    trace.iterations.push_back(std::stoll(fields[0]));
    trace.seconds.push_back(std::stod(fields[1]));
    VectorX<S> row(dim);
    for (Index j = 0; j < dim; ++j) row(j) = static_cast<S>(std::stod(fields[static_cast<std::size_t>(j + 2)]));
    rows.push_back(std::move(row));
  }
  trace.samples.resize(static_cast<Index>(rows.size()), dim);
  for (Index i = 0; i < trace.samples.rows(); ++i) {
    trace.samples.row(i) = rows[static_cast<std::size_t>(i)].transpose();
  }
  return trace;
}

}  // namespace sgmcmc
