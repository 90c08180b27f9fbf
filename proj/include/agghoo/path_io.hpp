#pragma once

// CSV readers and writers for datasets, solution paths and step functions.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agghoo/errors.hpp"
#include "agghoo/homotopy.hpp"
#include "agghoo/huber.hpp"
#include "agghoo/jump_reg.hpp"

namespace agghoo {

namespace detail {
inline std::string num(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, std::size_t row) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw DomainError("row " + std::to_string(row) + ": not a number: '" + s + "'");
  }
  while (used < s.size() && (s[used] == ' ' || s[used] == '\r')) ++used;
  if (used != s.size()) throw DomainError("row " + std::to_string(row) + ": not a number: '" + s + "'");
  return v;
}
}  // namespace detail

/// Reads a dataset CSV with header "y,x_0,...". The response column is the one named y
/// (first column otherwise).
inline Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("dataset: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv(line);
  if (header.size() < 2) throw DomainError("dataset: need a response and at least one feature column");
  std::size_t ycol = 0;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "y") ycol = j;
  }
  std::vector<std::vector<double>> rows;
  std::size_t r = 1;
  while (std::getline(in, line)) {
    ++r;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != header.size()) throw DomainError("dataset: row " + std::to_string(r) + " has the wrong width");
    std::vector<double> v;
    for (const auto& c : cells) v.push_back(detail::parse_double(c, r));
    rows.push_back(std::move(v));
  }
  if (rows.empty()) throw DomainError("dataset: no rows");
  Dataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  data.x.resize(n, d);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index k = 0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == ycol) {
        data.y(i) = rows[i][j];
      } else {
        data.x(i, k++) = rows[i][j];
      }
    }
  }
  data.validate();
  return data;
}

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  return read_dataset_csv(in);
}

/// Dense form: knot_index, lambda, event, zero_norm, q, theta_0..theta_{d-1}.
inline void write_path_csv(std::ostream& out, const SolutionPath& path) {
  out << "knot_index,lambda,event,zero_norm,q";
  for (Eigen::Index j = 0; j < path.d(); ++j) out << ",theta_" << j;
  out << '\n';
  for (std::size_t m = 0; m < path.size(); ++m) {
    const auto& f = path.fits[m];
    out << m << ',' << detail::num(path.knots[m]) << ',' << join_labels(path.events[m]) << ',' << f.zero_norm << ','
        << detail::num(f.q);
    for (Eigen::Index j = 0; j < f.theta.size(); ++j) out << ',' << detail::num(f.theta(j));
    out << '\n';
  }
}

/// Sparse triplets (knot_index, j, theta_j) over the nonzero coefficients.
inline void write_path_triplets(std::ostream& out, const SolutionPath& path) {
  out << "knot_index,j,theta_j\n";
  for (std::size_t m = 0; m < path.size(); ++m) {
    const auto& f = path.fits[m];
    for (Eigen::Index j = 0; j < f.theta.size(); ++j) {
      if (f.theta(j) != 0.0) out << m << ',' << j << ',' << detail::num(f.theta(j)) << '\n';
    }
  }
}

/// Fits at given lambdas in the dense layout; the event column reads "grid".
inline void write_fits_csv(std::ostream& out, const std::vector<double>& lambdas, const std::vector<SparseFit>& fits) {
  if (lambdas.size() != fits.size()) throw DomainError("write_fits_csv: size mismatch");
  const Eigen::Index d = fits.empty() ? 0 : fits.front().d();
  out << "knot_index,lambda,event,zero_norm,q";
  for (Eigen::Index j = 0; j < d; ++j) out << ",theta_" << j;
  out << '\n';
  for (std::size_t m = 0; m < fits.size(); ++m) {
    out << m << ',' << detail::num(lambdas[m]) << ",grid," << fits[m].zero_norm << ',' << detail::num(fits[m].q);
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << detail::num(fits[m].theta(j));
    out << '\n';
  }
}

inline void write_step_csv(std::ostream& out, const IntervalPartition& p, const StepFunction& f) {
  if (f.u.size() != p.d()) throw DomainError("write_step_csv: level count does not match the partition");
  out << "interval_left,interval_right,level\n";
  for (Eigen::Index j = 0; j < p.d(); ++j) {
    out << detail::num(p.left(j)) << ',' << detail::num(p.right(j)) << ',' << detail::num(f.u(j)) << '\n';
  }
}

}  // namespace agghoo
