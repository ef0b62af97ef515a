// End-to-end library walkthrough: synthesize planted-block interactions,
// train a small model, and print masked top-5 lists for a few investors.

#include <iostream>

#include "alsrec/alsrec.hpp"

int main() {
  alsrec::SynthConfig synth;
  synth.investors = 30;
  synth.companies = 30;
  synth.blocks = 3;
  synth.within_density = 0.6;
  synth.cross_density = 0.05;
  synth.seed = 7;
  const auto dataset = alsrec::ingest(alsrec::generate_planted_blocks(synth));
  std::cout << "dataset: " << dataset.company_count() << " companies, "
            << dataset.investor_count() << " investors, " << dataset.pair_count() << " pairs\n";

  alsrec::TrainConfig cfg;
  cfg.factors = 8;
  cfg.iterations = 3;
  cfg.lambda = 0.1;
  cfg.seed = 42;
  const auto model = alsrec::train(dataset, cfg);
  std::cout << "loss trace:";
  for (double l : model.loss_trace) std::cout << ' ' << l;
  std::cout << "\n\n";

  for (alsrec::Index investor : {0u, 10u, 20u}) {
    const auto list = alsrec::top_k(model, investor, 5, dataset);
    std::cout << list.entity_id << " ->";
    for (const auto& item : list.items) std::cout << ' ' << item.id;
    std::cout << '\n';
  }
  return 0;
}
