// Copyright 2026 The qsettle Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace qsettle {

struct EcdfPoint {
  double cost = 0.0;
  double ecdf = 0.0;
};

/// Sorted empirical CDF, one point per sample; tied samples share the upper value.
inline std::vector<EcdfPoint> ecdf(std::span<const double> samples) {
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  std::vector<EcdfPoint> out;
  out.reserve(v.size());
  const double n = static_cast<double>(v.size());
  for (double c : v) {
    auto k = std::upper_bound(v.begin(), v.end(), c) - v.begin();
    out.push_back({c, static_cast<double>(k) / n});
  }
  return out;
}

/// F(x) = fraction of samples <= x.
inline double ecdf_at(std::span<const double> sortedSamples, double x) {
  if (sortedSamples.empty()) return 0.0;
  auto k = std::upper_bound(sortedSamples.begin(), sortedSamples.end(), x) - sortedSamples.begin();
  return static_cast<double>(k) / static_cast<double>(sortedSamples.size());
}

struct RankSumResult {
  double u = 0.0;        // Mann-Whitney U of the first sample
  double z = 0.0;        // normal score, negative when the first sample is smaller
  double pLess = 1.0;    // one-sided: first sample stochastically smaller
  double pGreater = 1.0;
  double pTwoSided = 1.0;
};

/// Mann-Whitney U test with normal approximation, tie and continuity corrections.
inline RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("rank_sum_test: empty sample");
  struct Item {
    double v;
    bool first;
  };
  std::vector<Item> all;
  all.reserve(a.size() + b.size());
  for (double v : a) all.push_back({v, true});
  for (double v : b) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Item& x, const Item& y) { return x.v < y.v; });
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size()), n = n1 + n2;
  double rankSum = 0.0, tieTerm = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    tieTerm += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].first) rankSum += rank;
    i = j;
  }
  RankSumResult r;
  r.u = rankSum - n1 * (n1 + 1.0) / 2.0;
  const double mean = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - tieTerm / (n * (n - 1.0)));
  if (var <= 0.0) return r;
  const double sd = std::sqrt(var);
  r.z = (r.u - mean) / sd;
  auto upper = [](double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); };
  r.pLess = upper(-(r.u - mean + 0.5) / sd);
  r.pGreater = upper((r.u - mean - 0.5) / sd);
  r.pTwoSided = std::min(1.0, 2.0 * std::min(r.pLess, r.pGreater));
  return r;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Unbiased sample variance.
inline double variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace qsettle
