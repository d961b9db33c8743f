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

// Compressed bit encoding: a covering assigns to every register r an ordered
// list A_r of bit positions (size 0 or n_a). Measuring ancilla bits b and
// register r fixes x[A_r[l]] = b_l.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsettle/problem.hpp"
#include "qsettle/rng.hpp"
#include "qsettle/simulator.hpp"

namespace qsettle {

/// ceil(log2(n)) for n >= 1.
inline unsigned ceil_log2(std::uint64_t n) {
  unsigned k = 0;
  while ((std::uint64_t{1} << k) < n) ++k;
  return k;
}

inline unsigned register_qubit_count(std::size_t I, unsigned nAncilla, unsigned nRegisterPlus) {
  require(nAncilla >= 1, "register_qubit_count: need at least one ancilla");
  require(nAncilla <= I, "register_qubit_count: more ancillas than bits");
  return ceil_log2((I + nAncilla - 1) / nAncilla) + nRegisterPlus;
}

inline unsigned qubit_count(std::size_t I, unsigned nAncilla, unsigned nRegisterPlus) {
  return nAncilla + register_qubit_count(I, nAncilla, nRegisterPlus);
}

class Covering {
 public:
  Covering() = default;

  /// Validates the sets and builds the position map. Repeated entries inside
  /// one set are allowed (padding); the first occurrence defines the position.
  Covering(std::size_t I, unsigned nAncilla, std::vector<std::vector<std::size_t>> sets)
      : I_(I), nAncilla_(nAncilla), sets_(std::move(sets)) {
    require(!sets_.empty() && (sets_.size() & (sets_.size() - 1)) == 0,
            "Covering: number of sets must be a power of two");
    nRegister_ = ceil_log2(sets_.size());
    position_.assign(sets_.size(), std::vector<int>(I_, -1));
    members_.resize(sets_.size());
    std::vector<std::uint8_t> covered(I_, 0);
    for (std::size_t r = 0; r < sets_.size(); ++r) {
      const auto& s = sets_[r];
      require(s.empty() || s.size() == nAncilla_, "Covering: each set must have size 0 or n_a");
      for (std::size_t l = 0; l < s.size(); ++l) {
        require(s[l] < I_, "Covering: bit index out of range");
        if (position_[r][s[l]] < 0) {
          position_[r][s[l]] = static_cast<int>(l);
          members_[r].push_back(s[l]);
        }
        covered[s[l]] = 1;
      }
    }
    for (std::size_t i = 0; i < I_; ++i)
      require(covered[i], "Covering: bit " + std::to_string(i) + " is not covered");
  }

  std::size_t bits() const { return I_; }
  unsigned nAncilla() const { return nAncilla_; }
  unsigned nRegister() const { return nRegister_; }
  std::size_t registers() const { return sets_.size(); }
  QubitPartition partition() const { return {nAncilla_, nRegister_}; }
  const std::vector<std::vector<std::size_t>>& sets() const { return sets_; }
  const std::vector<std::size_t>& set(std::size_t r) const { return sets_[r]; }

  /// Distinct bits of A_r in first-occurrence order.
  const std::vector<std::size_t>& members(std::size_t r) const { return members_[r]; }

  /// l_r(i) (0-based), or -1 if i is not in A_r.
  int position(std::size_t r, std::size_t i) const { return position_[r][i]; }

  /// Number of registers containing bit i.
  std::size_t cover_count(std::size_t i) const {
    std::size_t n = 0;
    for (std::size_t r = 0; r < registers(); ++r) n += position_[r][i] >= 0;
    return n;
  }

  /// Number of registers containing both i and j.
  std::size_t joint_count(std::size_t i, std::size_t j) const {
    std::size_t n = 0;
    for (std::size_t r = 0; r < registers(); ++r) n += position_[r][i] >= 0 && position_[r][j] >= 0;
    return n;
  }

  /// Every bit belongs to exactly one register.
  bool disjoint() const {
    for (std::size_t i = 0; i < I_; ++i)
      if (cover_count(i) != 1) return false;
    return true;
  }

 private:
  std::size_t I_ = 0;
  unsigned nAncilla_ = 0;
  unsigned nRegister_ = 0;
  std::vector<std::vector<std::size_t>> sets_;
  std::vector<std::vector<int>> position_;
  std::vector<std::vector<std::size_t>> members_;
};

/// Single register holding every bit in order: the full encoding n_a = I.
inline Covering full_covering(std::size_t I) {
  std::vector<std::size_t> all(I);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return Covering(I, static_cast<unsigned>(I), {all});
}

/// Shortest-path distances between transactions, two transactions being
/// adjacent when they share a party. Unreachable pairs get I + 1.
inline std::vector<std::vector<std::size_t>> transaction_distances(const SettlementProblem& p) {
  const std::size_t I = p.I;
  std::vector<std::vector<std::size_t>> adj(I);
  auto share = [&](const Transaction& a, const Transaction& b) {
    return a.sender == b.sender || a.sender == b.receiver || a.receiver == b.sender || a.receiver == b.receiver;
  };
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = i + 1; j < I; ++j)
      if (share(p.transactions[i], p.transactions[j])) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
  std::vector<std::vector<std::size_t>> dist(I, std::vector<std::size_t>(I, I + 1));
  for (std::size_t s = 0; s < I; ++s) {
    std::queue<std::size_t> q;
    dist[s][s] = 0;
    q.push(s);
    while (!q.empty()) {
      std::size_t u = q.front();
      q.pop();
      for (std::size_t v : adj[u])
        if (dist[s][v] > dist[s][u] + 1) {
          dist[s][v] = dist[s][u] + 1;
          q.push(v);
        }
    }
  }
  return dist;
}

/// Groups transactions into clusters of n_a that share parties.
///
/// Seeds are picked farthest-first (the first at random), each cluster
/// greedily absorbs the unassigned transaction closest to its members, then
/// pairwise swaps between clusters reduce the total intra-cluster distance.
/// The last cluster is padded with its own members when I mod n_a != 0.
/// With n_rPlus > 0 the spare register slots hold overlapping sets built
/// from the transactions with the most neighbours.
inline Covering build_covering(const SettlementProblem& p, unsigned nAncilla, unsigned nRegisterPlus,
                               std::uint64_t seed) {
  const std::size_t I = p.I;
  require(nAncilla >= 1 && nAncilla <= I, "build_covering: need 1 <= n_a <= I");
  const unsigned nRegister = register_qubit_count(I, nAncilla, nRegisterPlus);
  const std::size_t nSets = std::size_t{1} << nRegister;
  const std::size_t nGroups = (I + nAncilla - 1) / nAncilla;
  auto dist = transaction_distances(p);
  CounterRng rng(derive_seed(seed, {0x636f76}));

  std::vector<std::uint8_t> assigned(I, 0);
  std::vector<std::size_t> seeds;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t g = 0; g < nGroups; ++g) {
    std::size_t pick = I;
    if (g == 0) {
      pick = rng.below(I);
    } else {
      std::size_t best = 0;
      for (std::size_t i = 0; i < I; ++i) {
        if (assigned[i]) continue;
        std::size_t d = std::numeric_limits<std::size_t>::max();
        for (std::size_t s : seeds) d = std::min(d, dist[s][i]);
        if (pick == I || d > best) {
          best = d;
          pick = i;
        }
      }
    }
    seeds.push_back(pick);
    assigned[pick] = 1;
    std::vector<std::size_t> group{pick};
    while (group.size() < nAncilla) {
      std::size_t next = I, bestCost = std::numeric_limits<std::size_t>::max();
      for (std::size_t i = 0; i < I; ++i) {
        if (assigned[i]) continue;
        std::size_t cost = 0;
        for (std::size_t m : group) cost += dist[m][i];
        if (cost < bestCost) {
          bestCost = cost;
          next = i;
        }
      }
      if (next == I) break;
      assigned[next] = 1;
      group.push_back(next);
    }
    groups.push_back(std::move(group));
  }

  // Swap refinement.
  auto groupCost = [&](const std::vector<std::size_t>& g, std::size_t skip, std::size_t with) {
    std::size_t c = 0;
    for (std::size_t m : g)
      if (m != skip) c += dist[m][with];
    return c;
  };
  for (int pass = 0; pass < 20; ++pass) {
    bool improved = false;
    for (std::size_t ga = 0; ga < groups.size(); ++ga)
      for (std::size_t gb = ga + 1; gb < groups.size(); ++gb)
        for (std::size_t ia = 0; ia < groups[ga].size(); ++ia)
          for (std::size_t ib = 0; ib < groups[gb].size(); ++ib) {
            std::size_t a = groups[ga][ia], b = groups[gb][ib];
            long before = static_cast<long>(groupCost(groups[ga], a, a) + groupCost(groups[gb], b, b));
            long after = static_cast<long>(groupCost(groups[ga], a, b) + groupCost(groups[gb], b, a));
            if (after < before) {
              std::swap(groups[ga][ia], groups[gb][ib]);
              improved = true;
            }
          }
    if (!improved) break;
  }

  std::vector<std::vector<std::size_t>> sets;
  for (auto& g : groups) {
    std::sort(g.begin(), g.end());
    std::size_t unique = g.size();
    for (std::size_t u = 0; g.size() < nAncilla; ++u) g.push_back(g[u % unique]);
    sets.push_back(g);
  }
  if (nRegisterPlus > 0) {
    std::vector<std::size_t> degree(I, 0), ranked(I);
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t j = 0; j < I; ++j) degree[i] += (i != j && dist[i][j] == 1);
    std::iota(ranked.begin(), ranked.end(), std::size_t{0});
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return degree[a] > degree[b]; });
    for (std::size_t t = 0; sets.size() < nSets; ++t) {
      std::vector<std::size_t> s;
      for (std::size_t u = 0; u < nAncilla; ++u) s.push_back(ranked[(t * nAncilla + u) % I]);
      std::sort(s.begin(), s.end());
      sets.push_back(s);
    }
  }
  while (sets.size() < nSets) sets.emplace_back();
  return Covering(I, nAncilla, std::move(sets));
}

// ---------------------------------------------------------------------------
// Sampling bit-vectors

/// Bits fixed by one measurement: 0/1 where set, -1 elsewhere.
struct PartialAssignment {
  std::vector<std::int8_t> bits;
  std::uint64_t registerIndex = 0;

  bool complete() const { return std::none_of(bits.begin(), bits.end(), [](std::int8_t b) { return b < 0; }); }
};

inline PartialAssignment partial_from_record(const MeasurementRecord& m, const Covering& cov) {
  require(m.registerIndex < cov.registers(), "record register index out of range");
  PartialAssignment pa{std::vector<std::int8_t>(cov.bits(), -1), m.registerIndex};
  for (std::size_t i : cov.members(m.registerIndex)) {
    int l = cov.position(m.registerIndex, i);
    pa.bits[i] = static_cast<std::int8_t>((m.ancillaBits >> l) & 1u);
  }
  return pa;
}

inline std::vector<PartialAssignment> partials_from_records(std::span<const MeasurementRecord> records,
                                                            const Covering& cov) {
  std::vector<PartialAssignment> out;
  out.reserve(records.size());
  for (const auto& m : records) out.push_back(partial_from_record(m, cov));
  return out;
}

/// Greedy assembly of complete bit-vectors from a measurement stream. Records
/// that fix no new bit are queued and offered first to the next vector, in
/// arrival order.
///
/// A record can only be useful while its register still has unset bits, and
/// absorbing it sets all of them, so at most the oldest queued record of each
/// register is used per vector. Leftovers are therefore kept per register and
/// visited by the arrival order of the queue fronts.
class GreedySampler {
 public:
  explicit GreedySampler(const Covering& cov) : cov_(&cov), leftovers_(cov.registers()) {}

  /// `next` returns the next MeasurementRecord (and may throw when exhausted).
  template <class Source>
  BitVector next_vector(Source&& next) {
    std::vector<std::int8_t> x(cov_->bits(), -1);
    std::size_t missing = cov_->bits();
    auto absorb = [&](const MeasurementRecord& m) {
      bool used = false;
      for (std::size_t i : cov_->members(m.registerIndex)) {
        if (x[i] >= 0) continue;
        x[i] = static_cast<std::int8_t>((m.ancillaBits >> cov_->position(m.registerIndex, i)) & 1u);
        --missing;
        used = true;
      }
      return used;
    };
    if (pending_ > 0) {
      fronts_.clear();
      for (std::size_t r = 0; r < leftovers_.size(); ++r)
        if (!leftovers_[r].empty()) fronts_.emplace_back(leftovers_[r].front().first, r);
      std::sort(fronts_.begin(), fronts_.end());
      for (const auto& [seq, r] : fronts_) {
        if (missing == 0) break;
        if (absorb(leftovers_[r].front().second)) {
          leftovers_[r].pop_front();
          --pending_;
        }
      }
    }
    while (missing > 0) {
      MeasurementRecord m = next();
      ++consumed_;
      require(m.registerIndex < cov_->registers(), "GreedySampler: register index out of range");
      if (!absorb(m) && !cov_->members(m.registerIndex).empty()) {
        leftovers_[m.registerIndex].emplace_back(sequence_++, m);
        ++pending_;
      }
    }
    return BitVector(x.begin(), x.end());
  }

  std::size_t consumed() const { return consumed_; }
  std::size_t pending() const { return pending_; }

 private:
  const Covering* cov_;
  std::vector<std::deque<std::pair<std::size_t, MeasurementRecord>>> leftovers_;
  std::vector<std::pair<std::size_t, std::size_t>> fronts_;
  std::size_t sequence_ = 0;
  std::size_t pending_ = 0;
  std::size_t consumed_ = 0;
};

struct SampledVectors {
  std::vector<BitVector> vectors;
  std::size_t recordsConsumed = 0;
};

/// Builds `count` vectors from a finite record list; throws if it runs out.
inline SampledVectors greedy_sample_bitvectors(std::span<const MeasurementRecord> records, const Covering& cov,
                                               std::size_t count) {
  GreedySampler sampler(cov);
  std::size_t pos = 0;
  auto next = [&]() -> MeasurementRecord {
    if (pos >= records.size()) throw std::runtime_error("greedy_sample_bitvectors: measurement stream exhausted");
    return records[pos++];
  };
  SampledVectors out;
  for (std::size_t v = 0; v < count; ++v) out.vectors.push_back(sampler.next_vector(next));
  out.recordsConsumed = sampler.consumed();
  return out;
}

}  // namespace qsettle
