// Command-line driver: data generation, training, evaluation (with the two
// ablation arms), and per-sample trace export.
//
// Exit codes: 0 success, 1 usage or contract error, 2 I/O error,
// 3 numerical divergence.

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "groundsel/checkpoint.hpp"
#include "groundsel/config.hpp"
#include "groundsel/dataset.hpp"
#include "groundsel/error.hpp"
#include "groundsel/evaluator.hpp"
#include "groundsel/model.hpp"
#include "groundsel/scenegen.hpp"
#include "groundsel/trace.hpp"
#include "groundsel/trainer.hpp"

namespace {

using namespace groundsel;

// "A..B" (inclusive) or a bare count N meaning 0..N-1.
std::vector<int64_t> parse_seed_range(const std::string& spec) {
  const auto parse_ll = [&](const std::string& s) {
    size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      throw ContractError("--seeds: cannot parse '" + spec + "'");
    }
    if (used != s.size()) throw ContractError("--seeds: cannot parse '" + spec + "'");
    return static_cast<int64_t>(v);
  };
  const size_t dots = spec.find("..");
  std::vector<int64_t> seeds;
  if (dots == std::string::npos) {
    const int64_t n = parse_ll(spec);
    if (n < 1) throw ContractError("--seeds: count must be positive, got '" + spec + "'");
    for (int64_t s = 0; s < n; ++s) seeds.push_back(s);
  } else {
    const int64_t a = parse_ll(spec.substr(0, dots));
    const int64_t b = parse_ll(spec.substr(dots + 2));
    if (b < a) throw ContractError("--seeds: empty range '" + spec + "'");
    for (int64_t s = a; s <= b; ++s) seeds.push_back(s);
  }
  return seeds;
}

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return parse_config_file(path);
}

std::vector<PreparedScene> load_prepared(const std::string& data_path, const RunConfig& rc) {
  const std::vector<Scene> scenes = read_dataset(data_path);
  return prepare_dataset(scenes, prepare_config(rc.model, rc.loss));
}

void cmd_gen_data(const std::string& seeds_spec, const std::string& out) {
  const std::vector<int64_t> seeds = parse_seed_range(seeds_spec);
  std::vector<Scene> scenes;
  scenes.reserve(seeds.size());
  int64_t unique = 0;
  for (int64_t s : seeds) {
    scenes.push_back(generate_scene(s));
    if (scenes.back().target_is_unique()) ++unique;
  }
  write_dataset(out, scenes);
  std::printf("wrote %zu scenes to %s (unique %lld, multiple %lld)\n", scenes.size(), out.c_str(),
              static_cast<long long>(unique),
              static_cast<long long>(static_cast<int64_t>(scenes.size()) - unique));
}

void cmd_train(const std::string& data, const std::string& config, const std::string& out_ckpt,
               std::string out_log) {
  if (out_log.empty()) out_log = out_ckpt + ".losses.jsonl";
  const RunConfig rc = load_run_config(config);
  const std::vector<PreparedScene> prepared = load_prepared(data, rc);
  GroundingModel model(rc.model);

  std::printf("training on %zu scenes: %lld epochs, batch %lld, lr %g / %g (refinement)\n",
              prepared.size(), static_cast<long long>(rc.train.epochs),
              static_cast<long long>(rc.train.batch_size), rc.train.lr, rc.train.tpm_lr);
  std::fflush(stdout);

  // Per-epoch loss breakdown, printed as each epoch completes.
  struct {
    int64_t epoch = 0, n = 0;
    double vg = 0, dks = 0, det = 0, lang = 0, total = 0;
  } acc;
  const auto flush_epoch = [&] {
    if (acc.n == 0) return;
    const double inv = 1.0 / static_cast<double>(acc.n);
    std::printf("epoch %lld: total %.4f  (vg %.4f, dks %.4f, det %.4f, lang %.4f; %lld steps)\n",
                static_cast<long long>(acc.epoch), acc.total * inv, acc.vg * inv, acc.dks * inv,
                acc.det * inv, acc.lang * inv, static_cast<long long>(acc.n));
    std::fflush(stdout);
  };
  const auto on_step = [&](const StepRecord& r) {
    if (r.epoch != acc.epoch) {
      flush_epoch();
      acc = {};
      acc.epoch = r.epoch;
    }
    ++acc.n;
    acc.vg += r.vg;
    acc.dks += r.dks;
    acc.det += r.det;
    acc.lang += r.lang;
    acc.total += r.total;
  };

  const TrainResult res = train_model(model, prepared, rc.train, rc.loss, on_step);
  flush_epoch();

  save_checkpoint(out_ckpt, model.params());
  write_loss_log(out_log, res);
  std::printf("checkpoint written to %s\nloss log written to %s\n", out_ckpt.c_str(),
              out_log.c_str());
}

GroundingModel restore_model(const std::string& checkpoint, const RunConfig& rc) {
  GroundingModel model(rc.model);
  load_checkpoint(checkpoint, model.params());
  return model;
}

void cmd_eval(const std::string& data, const std::string& checkpoint, const std::string& config,
              bool ablate_selection, const std::string& ablate_dks, const std::string& out) {
  const RunConfig rc = load_run_config(config);
  const std::vector<PreparedScene> prepared = load_prepared(data, rc);
  const GroundingModel model = restore_model(checkpoint, rc);
  GroundingModel::Options opt;
  opt.ablate_selection = ablate_selection;
  opt.ablate_dks_fps = (ablate_dks == "fps");

  const EvalReport rep = evaluate(model, prepared, opt);
  std::fputs(metrics_json(rep).c_str(), stdout);
  if (!out.empty()) {
    write_metrics(out, rep);
    std::printf("metrics written to %s\n", out.c_str());
  }
}

void cmd_trace(const std::string& data, const std::string& checkpoint, const std::string& config,
               int64_t sample, const std::string& out, bool ablate_selection,
               const std::string& ablate_dks) {
  const RunConfig rc = load_run_config(config);
  const std::vector<PreparedScene> prepared = load_prepared(data, rc);
  if (sample < 0 || sample >= static_cast<int64_t>(prepared.size())) {
    throw ContractError("--sample index " + std::to_string(sample) + " out of range [0, " +
                        std::to_string(prepared.size()) + ")");
  }
  const GroundingModel model = restore_model(checkpoint, rc);
  GroundingModel::Options opt;
  opt.ablate_selection = ablate_selection;
  opt.ablate_dks_fps = (ablate_dks == "fps");
  write_trace(out, model, prepared[static_cast<size_t>(sample)], opt);
  std::printf("trace written to %s\n", out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-stage 3D visual grounding on synthetic point-cloud scenes"};
  app.require_subcommand(1);

  std::string seeds_spec, out_path, data_path, config_path, checkpoint_path, log_path;
  std::string ablate_dks;
  bool ablate_selection = false;
  int64_t sample_index = 0;

  CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic scene dataset");
  gen->add_option("--seeds", seeds_spec, "Scene seeds: 'A..B' inclusive, or a count N for 0..N-1")
      ->required();
  gen->add_option("--out", out_path, "Dataset file to write")->required();

  CLI::App* train = app.add_subcommand("train", "Train a model on a dataset");
  train->add_option("--data", data_path, "Dataset file")->required();
  train->add_option("--config", config_path, "Configuration file (key = value lines)");
  train->add_option("--out-checkpoint", checkpoint_path, "Checkpoint file to write")->required();
  train->add_option("--out-log", log_path,
                    "Loss log to write (default: <out-checkpoint>.losses.jsonl)");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval->add_option("--data", data_path, "Dataset file")->required();
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval->add_option("--config", config_path, "Configuration file (must match the checkpoint)");
  eval->add_option("--out", out_path, "Metrics file to write");
  eval->add_flag("--ablate-selection", ablate_selection,
                 "Keep every keypoint through all refinement layers");
  eval->add_option("--ablate-dks", ablate_dks, "Replace the learned filter (choices: fps)")
      ->check(CLI::IsMember({"fps"}));

  CLI::App* trace = app.add_subcommand("trace", "Export one sample's pipeline walk as JSON");
  trace->add_option("--data", data_path, "Dataset file")->required();
  trace->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  trace->add_option("--config", config_path, "Configuration file (must match the checkpoint)");
  trace->add_option("--sample", sample_index, "Sample index within the dataset")->required();
  trace->add_option("--out", out_path, "Trace file to write")->required();
  trace->add_flag("--ablate-selection", ablate_selection,
                  "Keep every keypoint through all refinement layers");
  trace->add_option("--ablate-dks", ablate_dks, "Replace the learned filter (choices: fps)")
      ->check(CLI::IsMember({"fps"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // non-help parse problems are usage errors
  }

  try {
    if (gen->parsed()) {
      cmd_gen_data(seeds_spec, out_path);
    } else if (train->parsed()) {
      cmd_train(data_path, config_path, checkpoint_path, log_path);
    } else if (eval->parsed()) {
      cmd_eval(data_path, checkpoint_path, config_path, ablate_selection, ablate_dks, out_path);
    } else if (trace->parsed()) {
      cmd_trace(data_path, checkpoint_path, config_path, sample_index, out_path, ablate_selection,
                ablate_dks);
    }
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 2;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return 3;
  } catch (const ContractError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
