#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vascan/dataset.hpp"
#include "vascan/nn/model.hpp"
#include "vascan/nn/optim.hpp"

namespace vascan {

struct TrainConfig {
  nn::ModelConfig model;
  double base_lr = 1e-4;
  int lr_halve_every = 250;  // iterations, counted as weight updates
  int batch_size = 16;
  int max_epochs = 40;
  int early_stop_patience = 15;  // epochs without validation improvement
  int tbptt_every = 4;           // frames per truncated-backprop window
  bool augment = true;
  std::uint64_t seed = 1;
};

struct CurvePoint {
  std::int64_t iteration = 0;
  double loss = 0.0;
  double lr = 0.0;
  double val_dice = 0.0;  // latest known validation dice at this update
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  double best_val_dice = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
  std::int64_t iterations = 0;
};

// Mean per-frame dice of thresholded predictions over every sequence, at
// the model's input resolution, with hidden state carried through each
// sequence and reset between them.
double mean_dice(nn::SegNet<float>& net, const Dataset& data, int input_res);

// Batches whole sequences, updates weights once per truncated-backprop
// window, validates after every epoch, stops early on stalled validation
// dice and restores the best weights seen.
TrainResult train_model(nn::SegNet<float>& net, const Dataset& train_set,
                        const Dataset& val_set, const TrainConfig& cfg);

// CSV with columns iteration, loss, lr, val_dice.
void write_loss_curve(const std::string& path,
                      const std::vector<CurvePoint>& curve);

}  // namespace vascan
