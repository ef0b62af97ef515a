#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "alsrec/dataset.hpp"
#include "alsrec/error.hpp"
#include "alsrec/factorization.hpp"
#include "alsrec/recommend.hpp"
#include "alsrec/rng.hpp"

namespace alsrec {

// Holdout-accuracy protocol parameters. Each trial derives its own holdout
// and training seeds from (base_seed, trial index), so trials are independent
// and reproducible in isolation.
struct EvalConfig {
  double holdout_fraction = 0.10;
  std::size_t top_k = 10;
  std::size_t trials = 50;
  std::uint64_t base_seed = 0;
  TrainConfig train;
  unsigned trial_workers = 1;  // concurrent trials; results independent of this

  void validate() const {
    if (!(holdout_fraction > 0.0) || holdout_fraction > 1.0)
      throw ConfigError("holdout_fraction must be in (0, 1]");
    if (top_k < 1) throw ConfigError("top_k must be >= 1");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    train.validate();
  }
};

struct TrialResult {
  std::size_t hidden_count = 0;
  std::size_t correct_count = 0;
  double accuracy = 0.0;  // correct / hidden
  double final_train_loss = 0.0;
  double wall_time_s = 0.0;
};

struct EvalAggregate {
  std::size_t trials = 0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;  // sample std; 0 for a single trial
  double loss_final_mean = 0.0;
  double wall_time_mean_s = 0.0;
  std::vector<TrialResult> per_trial;
};

// One holdout trial: split, retrain from scratch, count hidden interactions
// that appear in the masked top-k lists. Accuracy = correct / hidden.
inline TrialResult run_trial(const InteractionDataset& d, const EvalConfig& cfg,
                             std::size_t trial_index) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();

  HoldoutSplit split =
      holdout_split(d, cfg.holdout_fraction, derive_seed(cfg.base_seed, trial_index, kHoldoutStream));
  if (split.hidden.empty())
    throw ProtocolError("trial " + std::to_string(trial_index) +
                        ": holdout selected zero investors (fraction too small)");

  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.base_seed, trial_index, kTrainStream);
  const FactorModel model = train(split.train, tc);

  std::vector<char> hit(split.hidden.size(), 0);
  parallel_for(split.hidden.size(), resolve_threads(cfg.train.threads),
               [&](std::size_t h0, std::size_t h1) {
                 for (std::size_t h = h0; h < h1; ++h) {
                   const HiddenPair& hp = split.hidden[h];
                   const RecommendationList list = top_k(model, hp.investor, cfg.top_k, split.train);
                   for (const RecommendedItem& item : list.items)
                     if (item.index == hp.company) {
                       hit[h] = 1;
                       break;
                     }
                 }
               });

  TrialResult r;
  r.hidden_count = split.hidden.size();
  for (char h : hit) r.correct_count += static_cast<std::size_t>(h);
  r.accuracy = static_cast<double>(r.correct_count) / static_cast<double>(r.hidden_count);
  r.final_train_loss = model.loss_trace.back();
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

// Runs cfg.trials independent trials and aggregates accuracy in trial-index
// order, so the result does not depend on scheduling.
inline EvalAggregate evaluate(const InteractionDataset& d, const EvalConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.trials;
  std::vector<TrialResult> results(n);
  std::vector<std::exception_ptr> failures(n);

  const unsigned workers = std::min<unsigned>(resolve_threads(cfg.trial_workers), n);
  if (workers <= 1) {
    for (std::size_t t = 0; t < n; ++t) {
      try {
        results[t] = run_trial(d, cfg, t);
      } catch (...) {
        failures[t] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next.fetch_add(1); t < n; t = next.fetch_add(1)) {
          try {
            results[t] = run_trial(d, cfg, t);
          } catch (...) {
            failures[t] = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
  }
  for (std::size_t t = 0; t < n; ++t)
    if (failures[t]) {
      try {
        std::rethrow_exception(failures[t]);
      } catch (const std::exception& e) {
        throw ProtocolError("trial " + std::to_string(t) + " failed: " + e.what());
      }
    }

  EvalAggregate agg;
  agg.trials = n;
  agg.per_trial = std::move(results);
  double acc_sum = 0.0, loss_sum = 0.0, wall_sum = 0.0;
  for (const TrialResult& r : agg.per_trial) {
    acc_sum += r.accuracy;
    loss_sum += r.final_train_loss;
    wall_sum += r.wall_time_s;
  }
  agg.accuracy_mean = acc_sum / static_cast<double>(n);
  agg.loss_final_mean = loss_sum / static_cast<double>(n);
  agg.wall_time_mean_s = wall_sum / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (const TrialResult& r : agg.per_trial) {
      const double dev = r.accuracy - agg.accuracy_mean;
      ss += dev * dev;
    }
    agg.accuracy_std = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return agg;
}

struct SweepPoint {
  std::size_t factors = 0;
  std::size_t iterations = 0;
  double lambda = 0.0;
};

struct SweepResult {
  SweepPoint point;
  std::size_t trials = 0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double loss_final_mean = 0.0;
  double wall_time_s = 0.0;  // mean wall time per trial
};

// Cartesian grid; rows are emitted with factors outermost, then iterations,
// then lambda.
struct SweepGrid {
  std::vector<std::size_t> factors;
  std::vector<std::size_t> iterations;
  std::vector<double> lambdas;

  void validate() const {
    if (factors.empty() || iterations.empty() || lambdas.empty())
      throw ConfigError("sweep grid must have at least one value per axis");
  }
};

// Evaluates every grid point under the same base_seed derivation, so every
// point sees identical holdout splits and points differ only in the model.
inline std::vector<SweepResult> sweep(const InteractionDataset& d, const SweepGrid& grid,
                                      const EvalConfig& cfg) {
  grid.validate();
  std::vector<SweepResult> rows;
  rows.reserve(grid.factors.size() * grid.iterations.size() * grid.lambdas.size());
  for (std::size_t f : grid.factors)
    for (std::size_t iters : grid.iterations)
      for (double lambda : grid.lambdas) {
        EvalConfig point_cfg = cfg;
        point_cfg.train.factors = f;
        point_cfg.train.iterations = iters;
        point_cfg.train.lambda = lambda;
        EvalAggregate agg;
        try {
          agg = evaluate(d, point_cfg);
        } catch (const std::exception& e) {
          throw ProtocolError("grid point (factors=" + std::to_string(f) +
                              ", iterations=" + std::to_string(iters) +
                              ", lambda=" + std::to_string(lambda) + "): " + e.what());
        }
        SweepResult row;
        row.point = {f, iters, lambda};
        row.trials = agg.trials;
        row.accuracy_mean = agg.accuracy_mean;
        row.accuracy_std = agg.accuracy_std;
        row.loss_final_mean = agg.loss_final_mean;
        row.wall_time_s = agg.wall_time_mean_s;
        rows.push_back(row);
      }
  return rows;
}

namespace detail {

inline std::string format_csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace detail

// Plot-ready CSV, one row per grid point. Timing is measured wall time and
// varies run to run, so it is written as 0.000 unless include_timing is set;
// everything else is deterministic for a fixed base seed at any thread count.
inline void write_sweep_csv(std::ostream& os, std::span<const SweepResult> rows,
                            bool include_timing = false) {
  os << "factors,iterations,lambda,trials,accuracy_mean,accuracy_std,loss_final_mean,wall_time_s\n";
  for (const SweepResult& r : rows) {
    char wall[40];
    std::snprintf(wall, sizeof wall, "%.3f", include_timing ? r.wall_time_s : 0.0);
    os << r.point.factors << ',' << r.point.iterations << ','
       << detail::format_csv_double(r.point.lambda) << ',' << r.trials << ','
       << detail::format_csv_double(r.accuracy_mean) << ','
       << detail::format_csv_double(r.accuracy_std) << ','
       << detail::format_csv_double(r.loss_final_mean) << ',' << wall << '\n';
  }
}

}  // namespace alsrec
