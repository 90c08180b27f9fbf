#pragma once

// Huberized-Lasso estimator families: indexed by zero-norm, or by position on a fixed lambda grid.

#include <algorithm>
#include <vector>

#include "agghoo/fixed_lambda.hpp"
#include "agghoo/homotopy.hpp"
#include "agghoo/model_select.hpp"

namespace agghoo {

/// Members 1..K of the zero-norm family of a path.
inline std::vector<SparseFit> zero_norm_members(const SolutionPath& path, int K) {
  auto fam = zero_norm_family(path, K);
  return std::vector<SparseFit>(fam.fits.begin() + 1, fam.fits.end());
}

/// One fit per grid value, read off the path (the fixed-lambda solver fills in below an
/// incomplete path).
inline std::vector<SparseFit> grid_members(const SolutionPath& path, const PathConfig& cfg, const Dataset& data,
                                           const LambdaGrid& grid) {
  std::vector<SparseFit> out;
  out.reserve(grid.values.size());
  for (double lam : grid.values) out.push_back(path_fit_at(path, cfg, data, lam));
  return out;
}

inline EstimatorFamily zero_norm_estimators(const PathConfig& cfg, int K) {
  EstimatorFamily fam;
  fam.name = "zeronorm";
  fam.first_index = 1;
  fam.train = [cfg, K](const Dataset& data) { return zero_norm_members(homotopy_path(cfg, data), K); };
  return fam;
}

/// Grid family read off the homotopy path.
inline EstimatorFamily grid_estimators(const PathConfig& cfg, const LambdaGrid& grid) {
  EstimatorFamily fam;
  fam.name = "grid";
  fam.first_index = 1;
  fam.train = [cfg, grid](const Dataset& data) { return grid_members(homotopy_path(cfg, data), cfg, data, grid); };
  return fam;
}

/// Grid family from warm-started fixed-lambda solves.
inline EstimatorFamily grid_estimators_direct(const PathConfig& cfg, const LambdaGrid& grid) {
  EstimatorFamily fam;
  fam.name = "grid_direct";
  fam.first_index = 1;
  fam.train = [cfg, grid](const Dataset& data) { return fit_grid_family(cfg, data, grid); };
  return fam;
}

}  // namespace agghoo
