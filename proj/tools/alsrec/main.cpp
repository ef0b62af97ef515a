// alsrec: train, apply, and evaluate latent-factor recommendation models on
// binary bipartite interaction data. One binary, five subcommands, every run
// reproducible from its seed and recorded in a JSON manifest.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "alsrec/alsrec.hpp"

namespace {

using nlohmann::ordered_json;

std::string iso8601_utc(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// FNV-1a over the whole file, as a stable fingerprint of the input data.
std::string fnv1a_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for digest: " + path);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ULL;
    }
    if (!in) break;
  }
  char hex[24];
  std::snprintf(hex, sizeof hex, "fnv1a:%016llx", static_cast<unsigned long long>(h));
  return hex;
}

// Reproducibility record emitted by every subcommand.
struct ManifestWriter {
  std::string command;
  ordered_json config = ordered_json::object();
  std::string input_digest;
  std::vector<std::string> artifacts;
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

  void write(const std::string& path) const {
    ordered_json m;
    m["command"] = command;
    m["config"] = config;
    if (!input_digest.empty()) m["input_digest"] = input_digest;
    m["artifacts"] = artifacts;
    m["started_at"] = iso8601_utc(started);
    m["finished_at"] = iso8601_utc(std::chrono::system_clock::now());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << m.dump(2) << "\n";
  }
};

unsigned resolve_thread_flag(const CLI::App* cmd, unsigned flag_value) {
  if (cmd->count("--threads") > 0) return flag_value;
  if (const char* env = std::getenv("ALSREC_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0')
      throw alsrec::ConfigError("ALSREC_THREADS is not an unsigned integer");
    return static_cast<unsigned>(v);
  }
  return flag_value;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
      throw alsrec::ConfigError(flag + ": '" + item + "' is not a non-negative integer");
    try {
      out.push_back(std::stoull(item));
    } catch (const std::out_of_range&) {
      throw alsrec::ConfigError(flag + ": '" + item + "' is out of range");
    }
  }
  if (out.empty()) throw alsrec::ConfigError(flag + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw alsrec::ConfigError(flag + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw alsrec::ConfigError(flag + ": empty list");
  return out;
}

std::string default_manifest_path(const std::string& artifact, const std::string& command) {
  if (artifact.empty() || artifact == "-") return command + ".manifest.json";
  return artifact + ".manifest.json";
}

// Shared flags for the commands that train models.
struct TrainFlags {
  std::string input;
  std::size_t factors = 0;
  std::size_t iterations = 0;
  std::size_t cg_steps = 3;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool use_transpose = false;
  double convergence_delta = -1.0;  // <0 means unset

  void add_common(CLI::App* cmd, bool single_point) {
    cmd->add_option("--input", input, "interactions CSV (investor_id,company_id[,count])")
        ->required();
    if (single_point) {
      cmd->add_option("--factors", factors, "latent factor count")
          ->required()
          ->check(CLI::PositiveNumber);
      cmd->add_option("--iterations", iterations, "training iterations")
          ->required()
          ->check(CLI::PositiveNumber);
      cmd->add_option("--lambda", lambda, "L2 regularization strength")
          ->check(CLI::NonNegativeNumber);
    }
    cmd->add_option("--cg-steps", cg_steps, "conjugate-gradient steps per row solve")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--seed", seed, "seed for all randomized behavior")->capture_default_str();
    cmd->add_option("--threads", threads,
                    "worker threads (0 = all cores; env ALSREC_THREADS as fallback)");
    cmd->add_flag("--transpose", use_transpose,
                  "swap roles: recommend investors to companies");
  }

  alsrec::TrainConfig to_config(const CLI::App* cmd) const {
    alsrec::TrainConfig cfg;
    cfg.factors = factors;
    cfg.iterations = iterations;
    cfg.cg_steps = cg_steps;
    cfg.lambda = lambda;
    cfg.seed = seed;
    cfg.threads = alsrec::resolve_threads(resolve_thread_flag(cmd, threads));
    if (convergence_delta >= 0.0) cfg.convergence_delta = convergence_delta;
    return cfg;
  }
};

int cmd_train(const CLI::App* cmd, const TrainFlags& flags, const std::string& model_out,
              const std::string& manifest_path) {
  ManifestWriter manifest;
  manifest.command = "train";
  manifest.input_digest = fnv1a_digest(flags.input);

  alsrec::InteractionDataset d = alsrec::read_interactions_csv_file(flags.input);
  if (flags.use_transpose) d = alsrec::transpose(d);

  const alsrec::TrainConfig cfg = flags.to_config(cmd);
  const alsrec::FactorModel model = alsrec::train(d, cfg);
  alsrec::save_model_file(model_out, model, d);

  manifest.config = {{"input", flags.input},
                     {"factors", cfg.factors},
                     {"iterations", cfg.iterations},
                     {"cg_steps", cfg.cg_steps},
                     {"lambda", cfg.lambda},
                     {"seed", cfg.seed},
                     {"threads", cfg.threads},
                     {"transpose", flags.use_transpose},
                     {"model_out", model_out}};
  if (cfg.convergence_delta) manifest.config["convergence_delta"] = *cfg.convergence_delta;
  manifest.artifacts = {model_out};
  manifest.write(manifest_path.empty() ? default_manifest_path(model_out, "train")
                                       : manifest_path);

  std::cerr << "trained " << d.company_count() << " companies x " << d.investor_count()
            << " investors, f=" << cfg.factors << ", final loss "
            << model.loss_trace.back() << "\n";
  return 0;
}

int cmd_recommend(const std::string& model_path, const std::string& input,
                  bool use_transpose, const std::string& entity, bool all, std::size_t k,
                  const std::string& format, const std::string& output,
                  const std::string& manifest_path) {
  if (all == !entity.empty())
    throw alsrec::ConfigError("pass exactly one of --entity <id> or --all");
  if (format != "jsonl" && format != "csv")
    throw alsrec::ConfigError("--format must be jsonl or csv");

  ManifestWriter manifest;
  manifest.command = "recommend";
  manifest.input_digest = fnv1a_digest(input);

  const alsrec::SavedModel saved = alsrec::load_model_file(model_path);
  alsrec::InteractionDataset mask = alsrec::read_interactions_csv_file(input);
  if (use_transpose) mask = alsrec::transpose(mask);
  if (mask.company_ids() != saved.company_ids || mask.investor_ids() != saved.investor_ids)
    throw std::runtime_error(
        "mask dataset does not match the model's ID tables; pass the CSV (and --transpose "
        "setting) the model was trained on");

  alsrec::FactorModel model;
  model.X = saved.X;
  model.Y = saved.Y;
  model.config.factors = saved.factors();
  model.config.iterations = 1;
  model.config.lambda = saved.lambda;
  model.config.seed = saved.seed;

  std::vector<alsrec::Index> entities;
  if (all) {
    for (alsrec::Index i = 0; i < mask.investor_count(); ++i) entities.push_back(i);
  } else {
    const auto idx = mask.find_investor(entity);
    if (!idx) throw std::runtime_error("unknown entity id: " + entity);
    entities.push_back(*idx);
  }

  std::ofstream file;
  const bool to_stdout = output.empty() || output == "-";
  if (!to_stdout) {
    file.open(output, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open output file: " + output);
  }
  std::ostream& os = to_stdout ? std::cout : file;

  if (format == "csv") alsrec::write_recommendations_csv_header(os);
  for (alsrec::Index e : entities) {
    const alsrec::RecommendationList list = alsrec::top_k(model, e, k, mask);
    if (format == "jsonl")
      alsrec::write_recommendations_jsonl(os, list);
    else
      alsrec::write_recommendations_csv(os, list);
  }
  os.flush();
  if (!os) throw std::runtime_error("failed writing recommendations");

  manifest.config = {{"model", model_path}, {"input", input},   {"transpose", use_transpose},
                     {"entity", entity},    {"all", all},       {"top_k", k},
                     {"format", format},    {"output", to_stdout ? "-" : output}};
  manifest.artifacts = to_stdout ? std::vector<std::string>{} : std::vector<std::string>{output};
  manifest.write(manifest_path.empty() ? default_manifest_path(to_stdout ? "" : output, "recommend")
                                       : manifest_path);
  return 0;
}

struct EvalFlags {
  double holdout = 0.10;
  std::size_t top_k = 10;
  std::size_t trials = 50;
  unsigned trial_workers = 1;
  bool timing = false;

  void add_common(CLI::App* cmd) {
    cmd->add_option("--holdout", holdout, "fraction of eligible investors to hide from")
        ->capture_default_str();
    cmd->add_option("--top-k", top_k, "list length a hit must appear in")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--trials", trials, "independent holdout trials")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--trial-workers", trial_workers, "trials run concurrently")
        ->capture_default_str();
    cmd->add_flag("--timing", timing, "write measured wall time into the CSV "
                                      "(off by default so output is byte-reproducible)");
  }
};

int run_eval_command(const char* name, const CLI::App* cmd, const TrainFlags& train_flags,
                     const EvalFlags& eval_flags, const alsrec::SweepGrid& grid,
                     const std::string& output, const std::string& manifest_path,
                     const ordered_json& grid_config) {
  ManifestWriter manifest;
  manifest.command = name;
  manifest.input_digest = fnv1a_digest(train_flags.input);

  alsrec::InteractionDataset d = alsrec::read_interactions_csv_file(train_flags.input);
  if (train_flags.use_transpose) d = alsrec::transpose(d);

  alsrec::EvalConfig cfg;
  cfg.holdout_fraction = eval_flags.holdout;
  cfg.top_k = eval_flags.top_k;
  cfg.trials = eval_flags.trials;
  cfg.base_seed = train_flags.seed;
  cfg.trial_workers = eval_flags.trial_workers;
  cfg.train = train_flags.to_config(cmd);
  cfg.train.factors = grid.factors.front();
  cfg.train.iterations = grid.iterations.front();
  cfg.train.lambda = grid.lambdas.front();

  const std::vector<alsrec::SweepResult> rows = alsrec::sweep(d, grid, cfg);

  std::ofstream file;
  const bool to_stdout = output.empty() || output == "-";
  if (!to_stdout) {
    file.open(output, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open output file: " + output);
  }
  std::ostream& os = to_stdout ? std::cout : file;
  alsrec::write_sweep_csv(os, rows, eval_flags.timing);
  os.flush();
  if (!os) throw std::runtime_error("failed writing sweep CSV");

  manifest.config = grid_config;
  manifest.config["input"] = train_flags.input;
  manifest.config["cg_steps"] = cfg.train.cg_steps;
  manifest.config["seed"] = cfg.base_seed;
  manifest.config["threads"] = cfg.train.threads;
  manifest.config["transpose"] = train_flags.use_transpose;
  manifest.config["holdout"] = cfg.holdout_fraction;
  manifest.config["top_k"] = cfg.top_k;
  manifest.config["trials"] = cfg.trials;
  manifest.config["trial_workers"] = cfg.trial_workers;
  manifest.config["timing"] = eval_flags.timing;
  manifest.config["output"] = to_stdout ? "-" : output;
  manifest.artifacts = to_stdout ? std::vector<std::string>{} : std::vector<std::string>{output};
  manifest.write(manifest_path.empty() ? default_manifest_path(to_stdout ? "" : output, name)
                                       : manifest_path);
  return 0;
}

int cmd_synth(std::size_t investors, std::size_t companies, std::size_t blocks, double density,
              double noise, std::uint64_t seed, const std::string& output,
              const std::string& manifest_path) {
  ManifestWriter manifest;
  manifest.command = "synth";

  alsrec::SynthConfig cfg;
  cfg.investors = investors;
  cfg.companies = companies;
  cfg.blocks = blocks;
  cfg.within_density = density;
  cfg.cross_density = noise;
  cfg.seed = seed;
  const std::vector<alsrec::InteractionRecord> records = alsrec::generate_planted_blocks(cfg);

  std::ofstream out(output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + output);
  out << "investor_id,company_id\n";
  for (const auto& r : records) out << r.investor_id << ',' << r.company_id << '\n';
  out.flush();
  if (!out) throw std::runtime_error("failed writing output file: " + output);

  manifest.config = {{"investors", investors}, {"companies", companies}, {"blocks", blocks},
                     {"density", density},     {"noise", noise},         {"seed", seed},
                     {"output", output}};
  manifest.artifacts = {output};
  manifest.write(manifest_path.empty() ? default_manifest_path(output, "synth") : manifest_path);
  std::cerr << "wrote " << records.size() << " interactions to " << output << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent-factor recommendations for bipartite interaction data"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train a factor model and save it");
  TrainFlags train_flags;
  train_flags.add_common(train_cmd, true);
  train_cmd->add_option("--convergence-delta", train_flags.convergence_delta,
                        "stop early when no factor entry moves by this much")
      ->check(CLI::NonNegativeNumber);
  std::string model_out, train_manifest;
  train_cmd->add_option("--model-out", model_out, "model file to write")->required();
  train_cmd->add_option("--manifest", train_manifest, "manifest path (default <model-out>.manifest.json)");

  // recommend
  auto* rec_cmd = app.add_subcommand("recommend", "emit masked top-k lists from a saved model");
  std::string rec_model, rec_input, rec_entity, rec_format = "jsonl", rec_output = "-", rec_manifest;
  bool rec_all = false, rec_transpose = false;
  std::size_t rec_k = 10;
  rec_cmd->add_option("--model", rec_model, "model file from `train`")->required();
  rec_cmd->add_option("--input", rec_input, "training CSV; observed pairs are masked out")->required();
  rec_cmd->add_flag("--transpose", rec_transpose, "the model was trained with --transpose");
  rec_cmd->add_option("--entity", rec_entity, "entity ID to recommend for");
  rec_cmd->add_flag("--all", rec_all, "emit lists for every entity");
  rec_cmd->add_option("--top-k", rec_k, "list length")->check(CLI::PositiveNumber)->capture_default_str();
  rec_cmd->add_option("--format", rec_format, "jsonl or csv")->capture_default_str();
  rec_cmd->add_option("--output", rec_output, "output path (- for stdout)")->capture_default_str();
  rec_cmd->add_option("--manifest", rec_manifest, "manifest path");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "holdout accuracy at one hyperparameter point");
  TrainFlags eval_train;
  EvalFlags eval_flags;
  eval_train.add_common(eval_cmd, true);
  eval_flags.add_common(eval_cmd);
  std::string eval_output = "-", eval_manifest;
  eval_cmd->add_option("--output", eval_output, "CSV path (- for stdout)")->capture_default_str();
  eval_cmd->add_option("--manifest", eval_manifest, "manifest path");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "holdout accuracy over a hyperparameter grid");
  TrainFlags sweep_train;
  EvalFlags sweep_flags;
  sweep_train.add_common(sweep_cmd, false);
  sweep_flags.add_common(sweep_cmd);
  std::string sweep_factors, sweep_iterations, sweep_lambdas = "0";
  std::string sweep_output = "-", sweep_manifest;
  sweep_cmd->add_option("--factors", sweep_factors, "comma list, e.g. 1000,1400,2400")->required();
  sweep_cmd->add_option("--iterations", sweep_iterations, "comma list, e.g. 1,2,4,8")->required();
  sweep_cmd->add_option("--lambda", sweep_lambdas, "comma list, e.g. 0,1,2.5")->capture_default_str();
  sweep_cmd->add_option("--output", sweep_output, "CSV path (- for stdout)")->capture_default_str();
  sweep_cmd->add_option("--manifest", sweep_manifest, "manifest path");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a planted-block interaction CSV");
  std::size_t sy_inv = 0, sy_comp = 0, sy_blocks = 1;
  double sy_density = 0.5, sy_noise = 0.0;
  std::uint64_t sy_seed = 0;
  std::string sy_output, sy_manifest;
  synth_cmd->add_option("--investors", sy_inv, "investor count")->required()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--companies", sy_comp, "company count")->required()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--blocks", sy_blocks, "planted block count")->capture_default_str();
  synth_cmd->add_option("--density", sy_density, "within-block pair probability")->capture_default_str();
  synth_cmd->add_option("--noise", sy_noise, "cross-block pair probability")->capture_default_str();
  synth_cmd->add_option("--seed", sy_seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--output", sy_output, "CSV file to write")->required();
  synth_cmd->add_option("--manifest", sy_manifest, "manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed())
      return cmd_train(train_cmd, train_flags, model_out, train_manifest);
    if (rec_cmd->parsed())
      return cmd_recommend(rec_model, rec_input, rec_transpose, rec_entity, rec_all, rec_k,
                           rec_format, rec_output, rec_manifest);
    if (eval_cmd->parsed()) {
      alsrec::SweepGrid grid;
      grid.factors = {eval_train.factors};
      grid.iterations = {eval_train.iterations};
      grid.lambdas = {eval_train.lambda};
      ordered_json grid_config = {{"factors", eval_train.factors},
                                  {"iterations", eval_train.iterations},
                                  {"lambda", eval_train.lambda}};
      return run_eval_command("evaluate", eval_cmd, eval_train, eval_flags, grid, eval_output,
                              eval_manifest, grid_config);
    }
    if (sweep_cmd->parsed()) {
      alsrec::SweepGrid grid;
      grid.factors = parse_size_list(sweep_factors, "--factors");
      grid.iterations = parse_size_list(sweep_iterations, "--iterations");
      grid.lambdas = parse_double_list(sweep_lambdas, "--lambda");
      for (std::size_t f : grid.factors)
        if (f == 0) throw alsrec::ConfigError("--factors: values must be >= 1");
      for (std::size_t it : grid.iterations)
        if (it == 0) throw alsrec::ConfigError("--iterations: values must be >= 1");
      for (double l : grid.lambdas)
        if (!(l >= 0.0)) throw alsrec::ConfigError("--lambda: values must be non-negative");
      ordered_json grid_config = {{"factors", grid.factors},
                                  {"iterations", grid.iterations},
                                  {"lambda", grid.lambdas}};
      return run_eval_command("sweep", sweep_cmd, sweep_train, sweep_flags, grid, sweep_output,
                              sweep_manifest, grid_config);
    }
    if (synth_cmd->parsed())
      return cmd_synth(sy_inv, sy_comp, sy_blocks, sy_density, sy_noise, sy_seed, sy_output,
                       sy_manifest);
  } catch (const alsrec::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
