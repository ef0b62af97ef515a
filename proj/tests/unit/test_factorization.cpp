#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "alsrec/factorization.hpp"
#include "alsrec/synth.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace alsrec;

namespace {

TrainConfig small_config(std::size_t f, std::size_t iters, double lambda, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.factors = f;
  cfg.iterations = iters;
  cfg.lambda = lambda;
  cfg.seed = seed;
  return cfg;
}

// Exact half-update oracle: per-row dense direct solve of the same normal
// equations, fully independent of the CG path.
DenseMatrix exact_half_update(const DenseMatrix& target, const DenseMatrix& fixed,
                              const InteractionDataset& target_rows, double lambda) {
  const std::size_t f = fixed.cols();
  const DenseMatrix g = oracles::matmul(oracles::transpose(fixed), fixed);
  DenseMatrix out = target;
  for (Index r = 0; r < target_rows.investor_count(); ++r) {
    std::vector<double> rhs(f, 0.0);
    for (Index partner : target_rows.companies_of(r))
      for (std::size_t k = 0; k < f; ++k) rhs[k] += fixed(partner, k);
    const auto x = oracles::direct_solve(g, lambda, rhs);
    for (std::size_t k = 0; k < f; ++k) out(r, k) = x[k];
  }
  return out;
}

}  // namespace

TEST_CASE("init_factors is seeded and bounded", "[factorization]") {
  const auto cfg = small_config(4, 1, 0.0, 77);
  const auto a = init_factors(10, 8, cfg);
  const auto b = init_factors(10, 8, cfg);
  CHECK(a.X == b.X);
  CHECK(a.Y == b.Y);

  const double bound = 1.0 / std::sqrt(4.0);
  for (double v : a.X.values()) {
    CHECK(v >= 0.0);
    CHECK(v < bound);
  }

  const auto one = init_factors(5, 5, small_config(1, 1, 0.0, 3));
  for (double v : one.X.values()) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }

  auto other = cfg;
  other.seed = 78;
  CHECK(init_factors(10, 8, other).X != a.X);
}

TEST_CASE("initial predictions average about one quarter", "[factorization]") {
  const auto model = init_factors(100, 100, small_config(16, 1, 0.0, 11));
  // mean over all (c,i) of x_c'y_i via column sums
  std::vector<double> cx(16, 0.0), cy(16, 0.0);
  for (std::size_t r = 0; r < 100; ++r)
    for (std::size_t k = 0; k < 16; ++k) {
      cx[k] += model.X(r, k);
      cy[k] += model.Y(r, k);
    }
  double mean = 0.0;
  for (std::size_t k = 0; k < 16; ++k) mean += cx[k] * cy[k];
  mean /= 100.0 * 100.0;
  CHECK(std::fabs(mean - 0.25) <= 0.05);
}

TEST_CASE("half_update reproduces the closed-form scalar solve", "[factorization]") {
  // C=1, I=1, one pair, fixed x=(2), lambda=0: y = m*x/x^2 = 0.5.
  const auto d = ingest(std::vector<InteractionRecord>{{"i0", "c0"}});
  DenseMatrix fixed(1, 1);
  fixed(0, 0) = 2.0;
  DenseMatrix target(1, 1);
  target(0, 0) = 0.3;
  half_update(target, fixed, d, 0.0, 1);
  CHECK(target(0, 0) == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("half_update drives a degree-0 row toward zero", "[factorization]") {
  // Investor i1 has no pairs after from_parts with an isolated entity.
  const auto d = InteractionDataset::from_parts({"c0"}, {"i0", "i1"}, {{0, 0}});
  DenseMatrix fixed(1, 2);
  fixed(0, 0) = 0.7;
  fixed(0, 1) = -0.2;
  DenseMatrix target(2, 2);
  target(1, 0) = 5.0;
  target(1, 1) = -3.0;
  // Exact solution for the empty row is 0; with cg_steps >= f it is reached.
  half_update(target, fixed, d, 0.5, 2);
  CHECK(std::fabs(target(1, 0)) < 1e-10);
  CHECK(std::fabs(target(1, 1)) < 1e-10);
}

TEST_CASE("half_update ordering: exact <= 3-step CG <= before", "[factorization]") {
  Rng rng(60601);
  for (int trial = 0; trial < 50; ++trial) {
    const Index companies = 3 + static_cast<Index>(rng.below(6));
    const Index investors = 3 + static_cast<Index>(rng.below(5));
    const std::size_t f = 1 + rng.below(3);
    const double lambda = 0.01 + rng.uniform();
    const auto d = gen::random_dataset(rng, companies, investors, 0.4);
    const auto x = gen::random_matrix(rng, companies, f, 0.0, 1.0);
    const auto y = gen::random_matrix(rng, investors, f, 0.0, 1.0);

    const double before = loss(d, x, y, lambda);

    DenseMatrix y_cg = y;
    half_update(y_cg, x, d, lambda, 3);
    const double after_cg = loss(d, x, y_cg, lambda);

    const DenseMatrix y_exact = exact_half_update(y, x, d, lambda);
    const double after_exact = loss(d, x, y_exact, lambda);

    const double slack = 1e-9 * std::max(1.0, std::fabs(before));
    CHECK(after_cg <= before + slack);
    CHECK(after_exact <= after_cg + slack);
  }
}

TEST_CASE("train descends on planted block data", "[factorization]") {
  SynthConfig synth;
  synth.investors = 20;
  synth.companies = 20;
  synth.blocks = 2;
  synth.within_density = 0.8;
  synth.cross_density = 0.0;
  synth.seed = 5;
  const auto d = ingest(generate_planted_blocks(synth));
  const auto model = train(d, small_config(8, 2, 0.1, 17));
  REQUIRE(model.loss_trace.size() == 3);
  CHECK(model.loss_trace.back() < model.loss_trace.front());
}

TEST_CASE("loss trace length contract", "[factorization]") {
  const auto d = ingest(std::vector<InteractionRecord>{{"i0", "c0"}, {"i1", "c0"}, {"i1", "c1"}});
  CHECK_THROWS_AS(train(d, small_config(2, 0, 0.0, 1)), ConfigError);
  const auto model = train(d, small_config(2, 1, 0.0, 1));
  CHECK(model.loss_trace.size() == 2);
}

TEST_CASE("train with enough cg steps descends monotonically", "[factorization]") {
  Rng rng(424243);
  for (int trial = 0; trial < 8; ++trial) {
    const Index companies = 5 + static_cast<Index>(rng.below(6));
    const Index investors = 5 + static_cast<Index>(rng.below(6));
    const std::size_t f = 2 + rng.below(3);
    const auto d = gen::random_dataset(rng, companies, investors, 0.35);
    auto cfg = small_config(f, 10, 0.05, rng.next_u64());
    cfg.cg_steps = f;
    const auto model = train(d, cfg);
    REQUIRE(model.loss_trace.size() == 11);
    for (std::size_t t = 1; t < model.loss_trace.size(); ++t) {
      const double slack = 1e-9 * std::max(1.0, std::fabs(model.loss_trace[t - 1]));
      CHECK(model.loss_trace[t] <= model.loss_trace[t - 1] + slack);
    }
  }
}

TEST_CASE("every 3-step half-update descends from its warm start", "[factorization]") {
  Rng rng(90210);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = gen::random_dataset(rng, 8, 7, 0.4);
    const auto dt = transpose(d);
    auto model = init_factors(8, 7, small_config(3, 1, 0.2, rng.next_u64()));
    double current = loss(d, model.X, model.Y, 0.2);
    for (int it = 0; it < 4; ++it) {
      half_update(model.Y, model.X, d, 0.2, 3);
      const double after_y = loss(d, model.X, model.Y, 0.2);
      CHECK(after_y <= current + 1e-9 * std::max(1.0, std::fabs(current)));
      half_update(model.X, model.Y, dt, 0.2, 3);
      const double after_x = loss(d, model.X, model.Y, 0.2);
      CHECK(after_x <= after_y + 1e-9 * std::max(1.0, std::fabs(after_y)));
      current = after_x;
    }
  }
}

TEST_CASE("training is bit-reproducible across runs and thread counts", "[factorization]") {
  Rng rng(1212);
  const auto d = gen::random_dataset(rng, 15, 12, 0.3);
  auto cfg = small_config(6, 3, 0.5, 2023);
  cfg.threads = 1;
  const auto a = train(d, cfg);
  const auto b = train(d, cfg);
  CHECK(a.X == b.X);
  CHECK(a.Y == b.Y);
  CHECK(a.loss_trace == b.loss_trace);

  cfg.threads = 3;
  const auto c = train(d, cfg);
  CHECK(a.X == c.X);
  CHECK(a.Y == c.Y);
  CHECK(a.loss_trace == c.loss_trace);

  cfg.threads = 0;  // all cores
  const auto e = train(d, cfg);
  CHECK(a.X == e.X);
}

TEST_CASE("stronger regularization shrinks the factors", "[factorization]") {
  SynthConfig synth;
  synth.investors = 15;
  synth.companies = 15;
  synth.blocks = 3;
  synth.within_density = 0.7;
  synth.cross_density = 0.1;
  synth.seed = 9;
  const auto d = ingest(generate_planted_blocks(synth));
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 1.0, 10.0, 100.0}) {
    const auto model = train(d, small_config(4, 4, lambda, 321));
    double norm = 0.0;
    for (double v : model.X.values()) norm += v * v;
    for (double v : model.Y.values()) norm += v * v;
    CHECK(norm <= prev + 1e-12);
    prev = norm;
  }
}

TEST_CASE("role symmetry: the mirrored trajectory has the same loss trace", "[factorization]") {
  // Train on d, then replay the same trajectory through the transposed
  // dataset with the initial blocks role-swapped (C == I makes the swap
  // shape-legal). Corresponding half-updates see identical systems, so the
  // traces agree up to the loss evaluation's summation order.
  Rng rng(777);
  const Index n = 9;
  const auto d = gen::random_dataset(rng, n, n, 0.35);
  const auto dt = transpose(d);
  auto cfg = small_config(3, 4, 0.3, 31);

  const auto reference = train(d, cfg);

  auto mirror = init_factors(n, n, cfg);
  std::swap(mirror.X, mirror.Y);  // companies of dt are investors of d
  std::vector<double> trace;
  trace.push_back(loss(dt, mirror.X, mirror.Y, cfg.lambda));
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    // Investor side of d first, exactly like train(d) does.
    half_update(mirror.X, mirror.Y, d, cfg.lambda, cfg.cg_steps);
    half_update(mirror.Y, mirror.X, dt, cfg.lambda, cfg.cg_steps);
    trace.push_back(loss(dt, mirror.X, mirror.Y, cfg.lambda));
  }
  REQUIRE(trace.size() == reference.loss_trace.size());
  for (std::size_t t = 0; t < trace.size(); ++t)
    CHECK_THAT(trace[t], Catch::Matchers::WithinRel(reference.loss_trace[t], 1e-9));
}

TEST_CASE("convergence_delta stops early", "[factorization]") {
  Rng rng(888);
  const auto d = gen::random_dataset(rng, 10, 10, 0.3);
  auto cfg = small_config(3, 50, 0.5, 4);
  cfg.convergence_delta = 1e-9;
  const auto model = train(d, cfg);
  CHECK(model.loss_trace.size() < 51);  // stopped before the iteration cap
  CHECK(model.loss_trace.size() >= 2);

  // A huge delta stops after the first iteration.
  cfg.convergence_delta = 1e9;
  const auto one = train(d, cfg);
  CHECK(one.loss_trace.size() == 2);
}

TEST_CASE("iteration callback sees every completed iteration", "[factorization]") {
  Rng rng(999);
  const auto d = gen::random_dataset(rng, 6, 6, 0.4);
  std::vector<std::size_t> seen;
  std::vector<double> losses;
  train(d, small_config(2, 3, 0.1, 5), [&](std::size_t it, const FactorModel& m) {
    seen.push_back(it);
    losses.push_back(m.loss_trace.back());
  });
  CHECK(seen == std::vector<std::size_t>{1, 2, 3});
  CHECK(losses.size() == 3);
}
