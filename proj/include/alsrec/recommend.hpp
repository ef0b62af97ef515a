#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "alsrec/dataset.hpp"
#include "alsrec/error.hpp"
#include "alsrec/factorization.hpp"

namespace alsrec {

struct RecommendedItem {
  Index index;
  std::string id;
  double score;
  std::size_t rank;  // 1-based
};

// Masked top-k list for one entity: scores non-increasing, ranks consecutive
// from 1, and no item the entity already interacted with in training.
struct RecommendationList {
  Index entity_index;
  std::string entity_id;
  std::vector<RecommendedItem> items;
};

// Predicted strength x_c'y_i.
inline double score(const FactorModel& model, Index company, Index investor) {
  if (company >= model.X.rows())
    throw std::out_of_range("score: company index " + std::to_string(company) + " out of range");
  if (investor >= model.Y.rows())
    throw std::out_of_range("score: investor index " + std::to_string(investor) + " out of range");
  return model.score(company, investor);
}

namespace detail {

// Higher score first; equal scores by ascending index. A strict total order,
// so selection is fully deterministic.
struct ScoredCandidate {
  Index index;
  double score;
};

inline bool better(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.index < b.index;
}

}  // namespace detail

// The k highest-scoring companies unseen by this investor in the mask dataset
// (fewer if fewer unseen companies exist). Partial selection, not a full sort.
inline RecommendationList top_k(const FactorModel& model, Index investor, std::size_t k,
                                const InteractionDataset& mask) {
  if (k < 1) throw ConfigError("top_k: k must be >= 1");
  if (investor >= model.Y.rows() || investor >= mask.investor_count())
    throw std::out_of_range("top_k: investor index " + std::to_string(investor) + " out of range");
  if (model.X.rows() != mask.company_count())
    throw ShapeError("top_k: mask dataset does not match the model's company count");

  const Index companies = mask.company_count();
  std::vector<char> observed(companies, 0);
  for (Index c : mask.companies_of(investor)) observed[c] = 1;

  std::vector<detail::ScoredCandidate> candidates;
  candidates.reserve(companies - mask.degree(investor));
  for (Index c = 0; c < companies; ++c) {
    if (observed[c]) continue;
    candidates.push_back({c, model.score(c, investor)});
  }

  const std::size_t take = std::min(k, candidates.size());
  if (take < candidates.size())
    std::nth_element(candidates.begin(), candidates.begin() + take, candidates.end(),
                     detail::better);
  std::sort(candidates.begin(), candidates.begin() + take, detail::better);

  RecommendationList list;
  list.entity_index = investor;
  list.entity_id = mask.investor_id(investor);
  list.items.reserve(take);
  for (std::size_t r = 0; r < take; ++r)
    list.items.push_back({candidates[r].index, mask.company_id(candidates[r].index),
                          candidates[r].score, r + 1});
  return list;
}

// Role-swapped ranking for a model trained on the transposed matrix: the
// entity is a company and the recommended items are investors. Both the model
// and the mask must come from the transposed dataset.
inline RecommendationList top_k_transposed(const FactorModel& transposed_model, Index company,
                                           std::size_t k,
                                           const InteractionDataset& transposed_mask) {
  return top_k(transposed_model, company, k, transposed_mask);
}

namespace detail {

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (unsigned char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (ch < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += static_cast<char>(ch);
        }
    }
  }
  return out;
}

// Round-trip exact float text.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// One JSON object per entity:
// {"entity": "<id>", "items": [{"id": "<id>", "score": <float>, "rank": <int>}]}
inline void write_recommendations_jsonl(std::ostream& os, const RecommendationList& list) {
  os << "{\"entity\": \"" << detail::json_escape(list.entity_id) << "\", \"items\": [";
  for (std::size_t i = 0; i < list.items.size(); ++i) {
    const RecommendedItem& item = list.items[i];
    if (i > 0) os << ", ";
    os << "{\"id\": \"" << detail::json_escape(item.id)
       << "\", \"score\": " << detail::format_double(item.score) << ", \"rank\": " << item.rank
       << "}";
  }
  os << "]}\n";
}

inline void write_recommendations_csv_header(std::ostream& os) {
  os << "entity_id,item_id,score,rank\n";
}

inline void write_recommendations_csv(std::ostream& os, const RecommendationList& list) {
  for (const RecommendedItem& item : list.items)
    os << list.entity_id << ',' << item.id << ',' << detail::format_double(item.score) << ','
       << item.rank << '\n';
}

}  // namespace alsrec
