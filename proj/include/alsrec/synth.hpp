#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "alsrec/dataset.hpp"
#include "alsrec/error.hpp"
#include "alsrec/rng.hpp"

namespace alsrec {

// Planted block model: investors and companies are split into `blocks`
// contiguous groups; a within-block pair is included with probability
// `within_density`, a cross-block pair with probability `cross_density`.
// A desk-scale stand-in for real interaction snapshots.
struct SynthConfig {
  std::size_t investors = 0;
  std::size_t companies = 0;
  std::size_t blocks = 1;
  double within_density = 0.5;
  double cross_density = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (investors < 1 || companies < 1)
      throw ConfigError("synth: need at least one investor and one company");
    if (blocks < 1) throw ConfigError("synth: blocks must be >= 1");
    if (blocks > std::min(investors, companies))
      throw ConfigError("synth: blocks must not exceed min(investors, companies)");
    if (!(within_density >= 0.0) || within_density > 1.0 || !(cross_density >= 0.0) ||
        cross_density > 1.0)
      throw ConfigError("synth: densities must be in [0, 1]");
  }
};

// Contiguous block assignment: entity e of n falls in block e * blocks / n.
inline std::size_t synth_block_of(std::size_t entity, std::size_t count, std::size_t blocks) {
  return entity * blocks / count;
}

// One uniform draw per (investor, company) cell in row-major order, so the
// output is a pure function of the config.
inline std::vector<InteractionRecord> generate_planted_blocks(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<InteractionRecord> records;
  for (std::size_t i = 0; i < cfg.investors; ++i) {
    const std::size_t bi = synth_block_of(i, cfg.investors, cfg.blocks);
    const std::string investor = "investor_" + std::to_string(i);
    for (std::size_t c = 0; c < cfg.companies; ++c) {
      const std::size_t bc = synth_block_of(c, cfg.companies, cfg.blocks);
      const double p = (bi == bc) ? cfg.within_density : cfg.cross_density;
      if (rng.uniform() < p)
        records.push_back({investor, "company_" + std::to_string(c)});
    }
  }
  return records;
}

}  // namespace alsrec
