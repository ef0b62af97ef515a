#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "alsrec/error.hpp"
#include "alsrec/rng.hpp"

namespace alsrec {

using Index = std::uint32_t;

// One raw interaction: investor invested in company. Tokens are opaque.
struct InteractionRecord {
  std::string investor_id;
  std::string company_id;
};

// An (company, investor) index pair.
struct Pair {
  Index company;
  Index investor;
  friend bool operator==(const Pair&, const Pair&) = default;
};

// Deduplicated bipartite interaction set. String IDs are interned to dense
// indices in first-appearance order; the pair set is stored row-indexed by
// investor with strictly increasing company lists. An instance is immutable
// after construction and safe to share across threads.
//
// The matrix view: m[c][i] = 1 iff (c, i) is a stored pair, 0 otherwise.
class InteractionDataset {
 public:
  InteractionDataset() = default;

  // Builds from interned tables plus pairs listed in first-occurrence order.
  // Validates index ranges and pair uniqueness.
  static InteractionDataset from_parts(std::vector<std::string> company_ids,
                                       std::vector<std::string> investor_ids,
                                       std::vector<Pair> pairs_in_order) {
    InteractionDataset d;
    d.company_ids_ = std::move(company_ids);
    d.investor_ids_ = std::move(investor_ids);
    d.order_ = std::move(pairs_in_order);
    const Index c_count = static_cast<Index>(d.company_ids_.size());
    const Index i_count = static_cast<Index>(d.investor_ids_.size());

    d.company_lookup_.reserve(d.company_ids_.size());
    for (Index c = 0; c < c_count; ++c) {
      if (d.company_ids_[c].empty()) throw ConfigError("empty company id at index " + std::to_string(c));
      if (!d.company_lookup_.emplace(d.company_ids_[c], c).second)
        throw ConfigError("duplicate company id: " + d.company_ids_[c]);
    }
    d.investor_lookup_.reserve(d.investor_ids_.size());
    for (Index i = 0; i < i_count; ++i) {
      if (d.investor_ids_[i].empty()) throw ConfigError("empty investor id at index " + std::to_string(i));
      if (!d.investor_lookup_.emplace(d.investor_ids_[i], i).second)
        throw ConfigError("duplicate investor id: " + d.investor_ids_[i]);
    }

    std::vector<Index> degree(i_count, 0);
    for (const Pair& p : d.order_) {
      if (p.company >= c_count || p.investor >= i_count)
        throw ConfigError("pair index out of range");
      ++degree[p.investor];
    }
    d.row_ptr_.assign(static_cast<std::size_t>(i_count) + 1, 0);
    for (Index i = 0; i < i_count; ++i) d.row_ptr_[i + 1] = d.row_ptr_[i] + degree[i];
    d.cols_.resize(d.order_.size());
    std::vector<Index> cursor(d.row_ptr_.begin(), d.row_ptr_.end() - 1);
    for (const Pair& p : d.order_) d.cols_[cursor[p.investor]++] = p.company;
    for (Index i = 0; i < i_count; ++i) {
      auto begin = d.cols_.begin() + d.row_ptr_[i];
      auto end = d.cols_.begin() + d.row_ptr_[i + 1];
      std::sort(begin, end);
      if (std::adjacent_find(begin, end) != end)
        throw ConfigError("duplicate pair for investor " + d.investor_ids_[i]);
    }
    return d;
  }

  Index company_count() const { return static_cast<Index>(company_ids_.size()); }
  Index investor_count() const { return static_cast<Index>(investor_ids_.size()); }
  std::size_t pair_count() const { return cols_.size(); }

  // Companies of one investor, strictly increasing.
  std::span<const Index> companies_of(Index investor) const {
    return {cols_.data() + row_ptr_[investor], cols_.data() + row_ptr_[investor + 1]};
  }

  Index degree(Index investor) const { return row_ptr_[investor + 1] - row_ptr_[investor]; }

  bool has_pair(Index company, Index investor) const {
    const auto row = companies_of(investor);
    return std::binary_search(row.begin(), row.end(), company);
  }

  const std::string& company_id(Index c) const { return company_ids_[c]; }
  const std::string& investor_id(Index i) const { return investor_ids_[i]; }
  const std::vector<std::string>& company_ids() const { return company_ids_; }
  const std::vector<std::string>& investor_ids() const { return investor_ids_; }

  std::optional<Index> find_company(std::string_view id) const {
    auto it = company_lookup_.find(std::string(id));
    if (it == company_lookup_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<Index> find_investor(std::string_view id) const {
    auto it = investor_lookup_.find(std::string(id));
    if (it == investor_lookup_.end()) return std::nullopt;
    return it->second;
  }

  // Pairs in first-occurrence order; serialization emits this order so that
  // re-ingesting reproduces the same interning.
  const std::vector<Pair>& pairs_in_order() const { return order_; }

  friend bool operator==(const InteractionDataset& a, const InteractionDataset& b) {
    return a.company_ids_ == b.company_ids_ && a.investor_ids_ == b.investor_ids_ &&
           a.row_ptr_ == b.row_ptr_ && a.cols_ == b.cols_ && a.order_ == b.order_;
  }

 private:
  std::vector<std::string> company_ids_;
  std::vector<std::string> investor_ids_;
  std::unordered_map<std::string, Index> company_lookup_;
  std::unordered_map<std::string, Index> investor_lookup_;
  std::vector<Index> row_ptr_;  // investor_count + 1
  std::vector<Index> cols_;     // company indices, sorted per investor
  std::vector<Pair> order_;     // first-occurrence order
};

// Interns IDs in first-appearance order, collapses duplicate pairs to a single
// interaction, and builds the row-indexed pair store.
inline InteractionDataset ingest(std::span<const InteractionRecord> records) {
  if (records.empty()) throw ConfigError("cannot ingest an empty record sequence");
  std::vector<std::string> company_ids;
  std::vector<std::string> investor_ids;
  std::unordered_map<std::string, Index> company_lookup;
  std::unordered_map<std::string, Index> investor_lookup;
  std::vector<Pair> order;
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(records.size());

  for (std::size_t n = 0; n < records.size(); ++n) {
    const InteractionRecord& rec = records[n];
    if (rec.investor_id.empty() || rec.company_id.empty())
      throw ParseError("record " + std::to_string(n + 1) + ": empty id token");
    auto [ci, c_new] = company_lookup.try_emplace(rec.company_id, static_cast<Index>(company_ids.size()));
    if (c_new) company_ids.push_back(rec.company_id);
    auto [ii, i_new] = investor_lookup.try_emplace(rec.investor_id, static_cast<Index>(investor_ids.size()));
    if (i_new) investor_ids.push_back(rec.investor_id);
    const Index c = ci->second;
    const Index i = ii->second;
    const std::uint64_t key = (static_cast<std::uint64_t>(c) << 32) | i;
    if (seen.insert(key).second) order.push_back({c, i});
  }
  return InteractionDataset::from_parts(std::move(company_ids), std::move(investor_ids),
                                        std::move(order));
}

inline InteractionDataset ingest(const std::vector<InteractionRecord>& records) {
  return ingest(std::span<const InteractionRecord>(records));
}

// Swaps the two roles: companies of the result are the investors of the input
// and vice versa. transpose(transpose(d)) == d.
inline InteractionDataset transpose(const InteractionDataset& d) {
  std::vector<Pair> swapped;
  swapped.reserve(d.pair_count());
  for (const Pair& p : d.pairs_in_order()) swapped.push_back({p.investor, p.company});
  return InteractionDataset::from_parts(d.investor_ids(), d.company_ids(), std::move(swapped));
}

struct HiddenPair {
  Index investor;
  Index company;
  friend bool operator==(const HiddenPair&, const HiddenPair&) = default;
};

// Holdout view: train plus the removed pairs, at most one per investor.
// Index spaces and ID tables of train match the source dataset exactly.
struct HoldoutSplit {
  InteractionDataset train;
  std::vector<HiddenPair> hidden;
};

// Hides one interaction from round(fraction * |eligible|) investors sampled
// uniformly without replacement, where eligible means degree >= 2 after
// deduplication. Rounding is half-up. Driven entirely by the seed.
inline HoldoutSplit holdout_split(const InteractionDataset& d, double fraction,
                                  std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ConfigError("holdout fraction must be in (0, 1]");
  std::vector<Index> eligible;
  for (Index i = 0; i < d.investor_count(); ++i)
    if (d.degree(i) >= 2) eligible.push_back(i);
  if (eligible.empty())
    throw ProtocolError("no eligible investors: every investor has fewer than 2 interactions");

  const auto n_hide = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(eligible.size()) + 0.5));

  Rng rng(seed);
  // Partial Fisher-Yates over the eligible list, then one pair per investor.
  std::vector<HiddenPair> hidden;
  hidden.reserve(n_hide);
  for (std::size_t t = 0; t < n_hide; ++t) {
    const std::size_t j = t + static_cast<std::size_t>(rng.below(eligible.size() - t));
    std::swap(eligible[t], eligible[j]);
    const Index inv = eligible[t];
    const auto row = d.companies_of(inv);
    const Index hid = row[static_cast<std::size_t>(rng.below(row.size()))];
    hidden.push_back({inv, hid});
  }

  std::unordered_set<std::uint64_t> removed;
  removed.reserve(hidden.size());
  for (const HiddenPair& h : hidden)
    removed.insert((static_cast<std::uint64_t>(h.company) << 32) | h.investor);
  std::vector<Pair> kept;
  kept.reserve(d.pair_count() - hidden.size());
  for (const Pair& p : d.pairs_in_order()) {
    const std::uint64_t key = (static_cast<std::uint64_t>(p.company) << 32) | p.investor;
    if (!removed.contains(key)) kept.push_back(p);
  }
  HoldoutSplit split;
  split.train = InteractionDataset::from_parts(d.company_ids(), d.investor_ids(), std::move(kept));
  split.hidden = std::move(hidden);
  return split;
}

}  // namespace alsrec
