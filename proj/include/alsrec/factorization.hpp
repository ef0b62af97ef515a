#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alsrec/dataset.hpp"
#include "alsrec/error.hpp"
#include "alsrec/linalg.hpp"
#include "alsrec/parallel.hpp"
#include "alsrec/rng.hpp"

namespace alsrec {

struct TrainConfig {
  std::size_t factors = 0;
  std::size_t iterations = 0;
  std::size_t cg_steps = 3;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // 0 = all hardware threads
  // Optional early stop: finish when no factor entry moved by at least this
  // much over one full iteration.
  std::optional<double> convergence_delta;

  void validate() const {
    if (factors < 1) throw ConfigError("factors must be >= 1");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (cg_steps < 1) throw ConfigError("cg_steps must be >= 1");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (convergence_delta && !(*convergence_delta >= 0.0))
      throw ConfigError("convergence_delta must be non-negative");
  }
};

// Company factors X (C x f), investor factors Y (I x f), and the loss after
// initialization plus after each completed iteration.
struct FactorModel {
  DenseMatrix X;
  DenseMatrix Y;
  TrainConfig config;
  std::vector<double> loss_trace;

  double score(Index company, Index investor) const {
    const std::size_t f = X.cols();
    return detail::dot(X.data() + static_cast<std::size_t>(company) * f,
                       Y.data() + static_cast<std::size_t>(investor) * f, f);
  }
};

// Entries i.i.d. uniform on [0, 1/sqrt(f)), drawn row-major X then row-major
// Y from one seeded generator, so initial predictions x_c'y_i have mean
// f * (1/(2 sqrt(f)))^2 = 1/4 at every factor count.
inline FactorModel init_factors(Index companies, Index investors, const TrainConfig& cfg) {
  cfg.validate();
  if (companies < 1 || investors < 1)
    throw ConfigError("init_factors: need at least one company and one investor");
  FactorModel model;
  model.config = cfg;
  model.X = DenseMatrix(companies, cfg.factors);
  model.Y = DenseMatrix(investors, cfg.factors);
  Rng rng(cfg.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.factors));
  for (double* v = model.X.data(); v != model.X.data() + companies * cfg.factors; ++v)
    *v = rng.uniform() * scale;
  for (double* v = model.Y.data(); v != model.Y.data() + investors * cfg.factors; ++v)
    *v = rng.uniform() * scale;
  return model;
}

namespace detail {

// One ALS half-update with the fixed side's Gram already computed. Every
// target row r solves (F'F + lambda*Id) r = sum of fixed rows over the
// entity's partners, truncated CG warm-started at the current value. Rows
// write disjoint memory, so any thread split gives identical results.
inline void half_update_given_gram(DenseMatrix& target, const DenseMatrix& fixed,
                                   const InteractionDataset& target_rows, DenseMatrix gram_fixed,
                                   double lambda, std::size_t cg_steps, unsigned threads) {
  const std::size_t f = fixed.cols();
  if (target.cols() != f) throw ShapeError("half_update: factor counts differ");
  if (target.rows() != target_rows.investor_count() || fixed.rows() != target_rows.company_count())
    throw ShapeError("half_update: dataset orientation does not match the factor matrices");
  const SpdSystem sys(std::move(gram_fixed), lambda);

  parallel_for(target.rows(), threads, [&](std::size_t r0, std::size_t r1) {
    CgScratch scratch;
    std::vector<double> rhs(f);
    for (std::size_t r = r0; r < r1; ++r) {
      for (std::size_t j = 0; j < f; ++j) rhs[j] = 0.0;
      for (Index partner : target_rows.companies_of(static_cast<Index>(r))) {
        const double* frow = fixed.data() + static_cast<std::size_t>(partner) * f;
        for (std::size_t j = 0; j < f; ++j) rhs[j] += frow[j];
      }
      auto row = target.row(r);
      try {
        cg_solve_inplace(sys, rhs, row, cg_steps, scratch);
      } catch (const NumericError& e) {
        throw NumericError("row " + std::to_string(r) + ": " + e.what());
      }
      for (std::size_t j = 0; j < f; ++j)
        if (!std::isfinite(row[j]))
          throw NumericError("row " + std::to_string(r) + ": non-finite factor");
    }
  });
}

}  // namespace detail

// Updates every row of `target` against the fixed factor matrix. The dataset
// must be oriented with the target entities on its row (investor) side: pass
// the training dataset when solving investor factors and its transpose when
// solving company factors.
inline void half_update(DenseMatrix& target, const DenseMatrix& fixed,
                        const InteractionDataset& target_rows, double lambda,
                        std::size_t cg_steps, unsigned threads = 1) {
  if (cg_steps < 1) throw ConfigError("half_update: cg_steps must be >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("half_update: lambda must be non-negative");
  detail::half_update_given_gram(target, fixed, target_rows, gram(fixed, threads), lambda,
                                 cg_steps, threads);
}

// Called after every completed iteration with the 1-based iteration count and
// the model state so far.
using IterationCallback = std::function<void(std::size_t, const FactorModel&)>;

// Alternating least squares: random initialization, then per iteration one
// investor-side update followed by one company-side update, tracing the loss
// after each. Deterministic for a fixed seed at any thread count.
inline FactorModel train(const InteractionDataset& d, const TrainConfig& cfg,
                         const IterationCallback& on_iteration = {}) {
  cfg.validate();
  const unsigned threads = resolve_threads(cfg.threads);
  FactorModel model = init_factors(d.company_count(), d.investor_count(), cfg);
  const InteractionDataset dt = transpose(d);

  DenseMatrix gram_x = gram(model.X, threads);
  DenseMatrix gram_y = gram(model.Y, threads);
  model.loss_trace.push_back(loss_from_grams(d, model.X, model.Y, gram_x, gram_y, cfg.lambda, threads));

  DenseMatrix prev_x, prev_y;
  if (cfg.convergence_delta) {
    prev_x = model.X;
    prev_y = model.Y;
  }

  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    try {
      detail::half_update_given_gram(model.Y, model.X, d, std::move(gram_x), cfg.lambda,
                                     cfg.cg_steps, threads);
      gram_y = gram(model.Y, threads);
      detail::half_update_given_gram(model.X, model.Y, dt, gram_y, cfg.lambda, cfg.cg_steps,
                                     threads);
      gram_x = gram(model.X, threads);
      model.loss_trace.push_back(
          loss_from_grams(d, model.X, model.Y, gram_x, gram_y, cfg.lambda, threads));
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(it) + ": " + e.what());
    }
    if (on_iteration) on_iteration(it, model);

    if (cfg.convergence_delta) {
      double max_change = 0.0;
      for (std::size_t i = 0; i < model.X.values().size(); ++i)
        max_change = std::max(max_change, std::fabs(model.X.values()[i] - prev_x.values()[i]));
      for (std::size_t i = 0; i < model.Y.values().size(); ++i)
        max_change = std::max(max_change, std::fabs(model.Y.values()[i] - prev_y.values()[i]));
      if (max_change < *cfg.convergence_delta) break;
      prev_x = model.X;
      prev_y = model.Y;
    }
  }
  return model;
}

}  // namespace alsrec
