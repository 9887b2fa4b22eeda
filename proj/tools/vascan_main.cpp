#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

#include "vascan/checkpoint.hpp"
#include "vascan/config.hpp"
#include "vascan/dataset.hpp"
#include "vascan/pipeline.hpp"
#include "vascan/trainer.hpp"

namespace {

using nlohmann::json;

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid_argument";
  if (dynamic_cast<const std::runtime_error*>(&e)) return "runtime_error";
  return "exception";
}

int cmd_scan_run(const std::string& config_path, bool no_reident,
                 std::optional<std::uint64_t> seed,
                 const std::string& out_dir) {
  vascan::PipelineConfig cfg = vascan::load_pipeline_config(config_path);
  if (no_reident) cfg.reident_enabled = false;
  if (seed) cfg.seed = *seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  const vascan::ScanReport report = vascan::run_scan(cfg);
  json out;
  out["frames"] = report.frames.size();
  out["mean_dice"] = report.mean_dice;
  out["volume_dice"] = report.volume_dice;
  out["episodes_total"] = report.episodes_total;
  out["episodes_recovered"] = report.episodes_recovered;
  out["success_rate"] = report.success_rate;
  out["sweep_distance_mm"] = report.sweep_distance_mm;
  out["total_duration_s"] = report.total_duration_s;
  out["budget_mean_ms"] = report.budget_mean_ms;
  out["out_dir"] = report.out_dir;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_scan_ab(const std::string& config_path, int trials,
                std::optional<std::uint64_t> seed, const std::string& out_dir) {
  vascan::PipelineConfig cfg = vascan::load_pipeline_config(config_path);
  if (seed) cfg.seed = *seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  const vascan::AbSummary summary = vascan::ab_compare(cfg, trials);
  json out;
  out["trials"] = summary.trials;
  for (const auto& [name, arm] : {std::pair{"enabled", &summary.enabled},
                                  std::pair{"disabled", &summary.disabled}}) {
    out[name] = {{"mean_dice", arm->mean_dice},
                 {"sd_dice", arm->sd_dice},
                 {"mean_volume_dice", arm->mean_volume_dice},
                 {"episodes_total", arm->episodes_total},
                 {"episodes_recovered", arm->episodes_recovered}};
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_train(const std::string& variant, const std::string& data_dir,
              const std::string& out_ckpt, const std::string& out_curve,
              int fold, int res, int epochs, int batch, std::uint64_t seed,
              double lr, const std::vector<int>& widths) {
  const vascan::Dataset data = vascan::load_dataset(data_dir);
  auto [train_set, val_set] = vascan::loocv_split(data, fold);
  vascan::TrainConfig cfg;
  cfg.model.variant = variant;
  cfg.model.input_res = res;
  cfg.model.init_seed = seed;
  if (!widths.empty()) cfg.model.widths = widths;
  cfg.max_epochs = epochs;
  cfg.batch_size = batch;
  cfg.base_lr = lr;
  cfg.seed = seed;
  vascan::nn::SegNet<float> net(cfg.model);
  const vascan::TrainResult result =
      vascan::train_model(net, train_set, val_set, cfg);
  vascan::save_checkpoint(out_ckpt, net, cfg.model);
  if (!out_curve.empty()) vascan::write_loss_curve(out_curve, result.curve);
  json out;
  out["variant"] = variant;
  out["best_val_dice"] = result.best_val_dice;
  out["best_epoch"] = result.best_epoch;
  out["epochs_run"] = result.epochs_run;
  out["iterations"] = result.iterations;
  out["checkpoint"] = out_ckpt;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_dir) {
  const vascan::Dataset data = vascan::load_dataset(data_dir);
  const vascan::nn::ModelConfig mc = vascan::peek_checkpoint(checkpoint);
  vascan::nn::SegNet<float> net(mc);
  vascan::load_checkpoint(checkpoint, net);
  const double dice = vascan::mean_dice(net, data, mc.input_res);
  json out;
  out["variant"] = mc.variant;
  out["sequences"] = data.sequences.size();
  out["mean_dice"] = dice;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_phantom_gen(const std::string& config_path, const std::string& out_dir) {
  const vascan::PhantomGenConfig cfg =
      vascan::load_phantom_gen_config(config_path);
  const vascan::Dataset data = vascan::generate_phantom_dataset(cfg);
  vascan::save_dataset(out_dir, data);
  json out;
  out["sequences"] = data.sequences.size();
  out["patients"] = vascan::patient_ids(data).size();
  out["out_dir"] = out_dir;
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doppler-guided vessel scanning simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, checkpoint, variant = "dopus4";
  std::string out_ckpt = "model.ckpt", out_curve;
  bool no_reident = false;
  int trials = 10, fold = 0, res = 64, epochs = 40, batch = 16;
  double lr = 1e-4;
  std::vector<int> widths;
  std::uint64_t seed_value = 1;
  bool seed_given = false;

  CLI::App* scan = app.add_subcommand("scan", "Closed-loop sweeps");
  scan->require_subcommand(1);
  CLI::App* run = scan->add_subcommand("run", "One sweep");
  run->add_option("--config", config_path)->required();
  run->add_flag("--no-reident", no_reident);
  run->add_option("--seed", seed_value)->each([&](const std::string&) {
    seed_given = true;
  });
  run->add_option("--out", out_dir);
  CLI::App* ab = scan->add_subcommand("ab", "Paired A/B trials");
  ab->add_option("--config", config_path)->required();
  ab->add_option("--trials", trials)->required();
  ab->add_option("--seed", seed_value)->each([&](const std::string&) {
    seed_given = true;
  });
  ab->add_option("--out", out_dir);

  CLI::App* train = app.add_subcommand("train", "Train a segmenter");
  train->add_option("--variant", variant);
  train->add_option("--data", data_dir)->required();
  train->add_option("--out", out_ckpt);
  train->add_option("--curve", out_curve);
  train->add_option("--fold", fold);
  train->add_option("--res", res);
  train->add_option("--epochs", epochs);
  train->add_option("--batch", batch);
  train->add_option("--lr", lr);
  train->add_option("--widths", widths)->delimiter(',');
  train->add_option("--seed", seed_value);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--data", data_dir)->required();

  CLI::App* phantom = app.add_subcommand("phantom", "Synthetic data");
  phantom->require_subcommand(1);
  CLI::App* gen = phantom->add_subcommand("gen", "Render a dataset");
  gen->add_option("--config", config_path)->required();
  gen->add_option("--out", out_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_scan_run(config_path, no_reident,
                          seed_given ? std::optional(seed_value) : std::nullopt,
                          out_dir);
    }
    if (ab->parsed()) {
      return cmd_scan_ab(config_path, trials,
                         seed_given ? std::optional(seed_value) : std::nullopt,
                         out_dir);
    }
    if (train->parsed()) {
      return cmd_train(variant, data_dir, out_ckpt, out_curve, fold, res,
                       epochs, batch, seed_value, lr, widths);
    }
    if (eval->parsed()) return cmd_eval(checkpoint, data_dir);
    if (gen->parsed()) return cmd_phantom_gen(config_path, out_dir);
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"type", error_kind(e)}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
