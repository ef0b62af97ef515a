#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "alsrec/synth.hpp"
#include "alsrec/dataset.hpp"

using namespace alsrec;

TEST_CASE("degenerate densities give exactly the block structure", "[synth]") {
  SynthConfig cfg;
  cfg.investors = 12;
  cfg.companies = 8;
  cfg.blocks = 4;
  cfg.within_density = 1.0;
  cfg.cross_density = 0.0;
  cfg.seed = 3;
  const auto records = generate_planted_blocks(cfg);
  // Every within-block pair, none cross-block.
  std::size_t expected = 0;
  for (std::size_t i = 0; i < cfg.investors; ++i)
    for (std::size_t c = 0; c < cfg.companies; ++c)
      if (synth_block_of(i, cfg.investors, cfg.blocks) ==
          synth_block_of(c, cfg.companies, cfg.blocks))
        ++expected;
  CHECK(records.size() == expected);
  for (const auto& r : records) {
    const auto i = std::stoul(r.investor_id.substr(std::string("investor_").size()));
    const auto c = std::stoul(r.company_id.substr(std::string("company_").size()));
    CHECK(synth_block_of(i, cfg.investors, cfg.blocks) ==
          synth_block_of(c, cfg.companies, cfg.blocks));
  }
}

TEST_CASE("pair count stays within 3 sigma of the binomial expectation", "[synth]") {
  SynthConfig cfg;
  cfg.investors = 60;
  cfg.companies = 50;
  cfg.blocks = 3;
  cfg.within_density = 0.4;
  cfg.cross_density = 0.05;
  cfg.seed = 99;
  const auto records = generate_planted_blocks(cfg);

  double mean = 0.0, variance = 0.0;
  for (std::size_t i = 0; i < cfg.investors; ++i)
    for (std::size_t c = 0; c < cfg.companies; ++c) {
      const double p = synth_block_of(i, cfg.investors, cfg.blocks) ==
                               synth_block_of(c, cfg.companies, cfg.blocks)
                           ? cfg.within_density
                           : cfg.cross_density;
      mean += p;
      variance += p * (1.0 - p);
    }
  const double sigma = std::sqrt(variance);
  CHECK(std::fabs(static_cast<double>(records.size()) - mean) <= 3.0 * sigma);
}

TEST_CASE("generation is a pure function of the config", "[synth]") {
  SynthConfig cfg;
  cfg.investors = 20;
  cfg.companies = 20;
  cfg.blocks = 2;
  cfg.within_density = 0.5;
  cfg.cross_density = 0.02;
  cfg.seed = 11;
  const auto a = generate_planted_blocks(cfg);
  const auto b = generate_planted_blocks(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].investor_id == b[i].investor_id);
    CHECK(a[i].company_id == b[i].company_id);
  }
  cfg.seed = 12;
  const auto c = generate_planted_blocks(cfg);
  CHECK(c.size() != a.size());  // overwhelmingly likely under new draws
}

TEST_CASE("synth config validation", "[synth]") {
  SynthConfig cfg;
  cfg.investors = 4;
  cfg.companies = 6;
  cfg.blocks = 5;  // > min(4, 6)
  CHECK_THROWS_AS(generate_planted_blocks(cfg), ConfigError);
  cfg.blocks = 0;
  CHECK_THROWS_AS(generate_planted_blocks(cfg), ConfigError);
  cfg.blocks = 2;
  cfg.within_density = 1.5;
  CHECK_THROWS_AS(generate_planted_blocks(cfg), ConfigError);
  cfg.within_density = 0.5;
  cfg.investors = 0;
  CHECK_THROWS_AS(generate_planted_blocks(cfg), ConfigError);
}

TEST_CASE("blocks partition entities contiguously", "[synth]") {
  for (std::size_t n : {7u, 8u, 40u}) {
    for (std::size_t b : {1u, 2u, 3u}) {
      std::size_t prev = 0;
      for (std::size_t e = 0; e < n; ++e) {
        const std::size_t blk = synth_block_of(e, n, b);
        CHECK(blk < b);
        CHECK(blk >= prev);
        prev = blk;
      }
      CHECK(prev == b - 1);  // every block non-empty
    }
  }
}
