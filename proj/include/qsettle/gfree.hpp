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

// Derivative-free minimization with a linear model on a simplex of n+1
// points and a shrinking trust radius.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace qsettle {

struct GfreeOptions {
  double rhoBegin = 0.5;
  double rhoEnd = 1e-4;
  std::size_t maxIters = 1000;  // step attempts
  std::size_t maxEvals = 0;     // 0 = unlimited
};

struct GfreeResult {
  std::vector<double> x;
  double f = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  double rho = 0.0;
};

namespace detail {

/// Solves M g = r in place by Gaussian elimination with partial pivoting.
inline std::optional<std::vector<double>> solve_dense(std::vector<std::vector<double>> M, std::vector<double> r) {
  const std::size_t n = r.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t k = c + 1; k < n; ++k)
      if (std::abs(M[k][c]) > std::abs(M[piv][c])) piv = k;
    if (std::abs(M[piv][c]) < 1e-14) return std::nullopt;
    std::swap(M[piv], M[c]);
    std::swap(r[piv], r[c]);
    for (std::size_t k = c + 1; k < n; ++k) {
      const double f = M[k][c] / M[c][c];
      if (f == 0.0) continue;
      for (std::size_t j = c; j < n; ++j) M[k][j] -= f * M[c][j];
      r[k] -= f * r[c];
    }
  }
  std::vector<double> g(n);
  for (std::size_t c = n; c-- > 0;) {
    double s = r[c];
    for (std::size_t j = c + 1; j < n; ++j) s -= M[c][j] * g[j];
    g[c] = s / M[c][c];
  }
  return g;
}

}  // namespace detail

/// `f(x)` returns the objective; `onIter(iter, xBest, fBest, bestEval)` is
/// called after every step attempt, where bestEval is the 0-based index of
/// the evaluation that produced fBest.
inline GfreeResult minimize_gfree(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0, const GfreeOptions& opt,
    const std::function<void(std::size_t, const std::vector<double>&, double, std::size_t)>& onIter = {}) {
  const std::size_t n = x0.size();
  GfreeResult res;
  struct Point {
    std::vector<double> x;
    double f;
    std::size_t eval;
  };
  auto evaluate = [&](std::vector<double> x) {
    double v = f(x);
    return Point{std::move(x), v, res.evaluations++};
  };
  double rho = opt.rhoBegin;
  std::vector<Point> simplex;
  auto rebuild = [&](const Point& centre) {
    simplex.clear();
    simplex.push_back(centre);
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> x = centre.x;
      x[k] += rho;
      simplex.push_back(evaluate(std::move(x)));
    }
  };
  auto best_index = [&] {
    std::size_t b = 0;
    for (std::size_t k = 1; k < simplex.size(); ++k)
      if (simplex[k].f < simplex[b].f) b = k;
    return b;
  };
  auto budget_left = [&] { return opt.maxEvals == 0 || res.evaluations < opt.maxEvals; };

  rebuild(evaluate(std::move(x0)));
  while (res.iterations < opt.maxIters && rho >= opt.rhoEnd && budget_left()) {
    const std::size_t b = best_index();
    const Point best = simplex[b];
    std::vector<std::vector<double>> M;
    std::vector<double> r;
    for (std::size_t k = 0; k < simplex.size(); ++k) {
      if (k == b) continue;
      std::vector<double> row(n);
      for (std::size_t j = 0; j < n; ++j) row[j] = simplex[k].x[j] - best.x[j];
      M.push_back(std::move(row));
      r.push_back(simplex[k].f - best.f);
    }
    auto g = n == 0 ? std::optional<std::vector<double>>(std::vector<double>{}) : detail::solve_dense(M, r);
    double gnorm = 0.0;
    if (g)
      for (double v : *g) gnorm += v * v;
    gnorm = std::sqrt(gnorm);
    ++res.iterations;
    bool improved = false;
    if (g && gnorm > 0.0 && std::isfinite(gnorm)) {
      std::vector<double> x = best.x;
      for (std::size_t j = 0; j < n; ++j) x[j] -= rho * (*g)[j] / gnorm;
      Point trial = evaluate(std::move(x));
      if (trial.f < best.f) {
        std::size_t worst = 0;
        for (std::size_t k = 1; k < simplex.size(); ++k)
          if (simplex[k].f > simplex[worst].f) worst = k;
        simplex[worst] = std::move(trial);
        improved = true;
      }
    }
    if (!improved) {
      rho *= 0.5;
      if (rho >= opt.rhoEnd && budget_left()) rebuild(best);
    }
    const Point& cur = simplex[best_index()];
    if (onIter) onIter(res.iterations - 1, cur.x, cur.f, cur.eval);
  }
  const Point& fin = simplex[best_index()];
  res.x = fin.x;
  res.f = fin.f;
  res.rho = rho;
  return res;
}

}  // namespace qsettle
