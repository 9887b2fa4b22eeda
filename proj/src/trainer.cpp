#include "vascan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "vascan/augment.hpp"
#include "vascan/common.hpp"
#include "vascan/compound.hpp"

namespace vascan {
namespace {

struct SeqGrids {
  std::vector<ImageGrid> bmode, doppler, gt;
};

SeqGrids to_model_res(const SequenceRecord& record, int res) {
  SeqGrids g;
  for (size_t i = 0; i < record.frames(); ++i) {
    g.bmode.push_back(resample(record.bmode[i], res, res, Resample::kBilinear));
    g.doppler.push_back(
        resample(record.doppler[i], res, res, Resample::kNearest));
    g.gt.push_back(resample(record.gt[i], res, res, Resample::kNearest));
  }
  return g;
}

// Stacks one frame of each batch sequence into a single-channel tensor.
nn::Tensor4<float> stack_frame(const std::vector<const SeqGrids*>& batch,
                               size_t t, const std::vector<ImageGrid> SeqGrids::*channel) {
  const int res = ((*batch[0]).*channel)[t].height();
  nn::Tensor4<float> out =
      nn::Tensor4<float>::zeros(static_cast<int>(batch.size()), 1, res, res);
  for (size_t b = 0; b < batch.size(); ++b) {
    out.at(static_cast<int>(b), 0) = ((*batch[b]).*channel)[t].data;
  }
  return out;
}

std::vector<float> snapshot_values(nn::SegNet<float>& net) {
  nn::ParamList<float> params, buffers;
  net.collect_params(params);
  net.collect_buffers(buffers);
  std::vector<float> values;
  for (const auto* list : {&params, &buffers}) {
    for (const auto& span : *list) {
      values.insert(values.end(), span.value, span.value + span.count);
    }
  }
  return values;
}

void restore_values(nn::SegNet<float>& net, const std::vector<float>& values) {
  nn::ParamList<float> params, buffers;
  net.collect_params(params);
  net.collect_buffers(buffers);
  size_t at = 0;
  for (auto* list : {&params, &buffers}) {
    for (auto& span : *list) {
      std::copy(values.begin() + at, values.begin() + at + span.count,
                span.value);
      at += static_cast<size_t>(span.count);
    }
  }
}

}  // namespace

double mean_dice(nn::SegNet<float>& net, const Dataset& data, int input_res) {
  if (data.sequences.empty()) {
    throw std::invalid_argument("cannot evaluate on an empty dataset");
  }
  double total = 0.0;
  std::int64_t frames = 0;
  for (const SequenceRecord& record : data.sequences) {
    const SeqGrids g = to_model_res(record, input_res);
    nn::SegNet<float>::State state;
    for (size_t t = 0; t < record.frames(); ++t) {
      nn::Tensor4<float> bm = nn::Tensor4<float>::zeros(1, 1, input_res, input_res);
      nn::Tensor4<float> dop = bm.zeros_like();
      bm.at(0, 0) = g.bmode[t].data;
      dop.at(0, 0) = g.doppler[t].data;
      typename nn::SegNet<float>::FrameCache cache;
      const nn::Tensor4<float> prob = net.forward(bm, dop, state, cache, false);
      ImageGrid pred = ImageGrid::zeros(input_res, input_res,
                                        g.gt[t].spacing_mm);
      pred.data = (prob.at(0, 0) > 0.5f).cast<float>();
      total += dice_score(pred, g.gt[t]);
      ++frames;
    }
  }
  return total / static_cast<double>(frames);
}

TrainResult train_model(nn::SegNet<float>& net, const Dataset& train_set,
                        const Dataset& val_set, const TrainConfig& cfg) {
  if (train_set.sequences.empty() || val_set.sequences.empty()) {
    throw std::invalid_argument("training needs non-empty train and val sets");
  }
  if (cfg.batch_size < 1 || cfg.tbptt_every < 1 || cfg.max_epochs < 1) {
    throw std::invalid_argument("degenerate training configuration");
  }
  const int res = cfg.model.input_res;
  std::vector<SeqGrids> base;
  for (const SequenceRecord& record : train_set.sequences) {
    base.push_back(to_model_res(record, res));
  }

  nn::ParamList<float> params;
  net.collect_params(params);
  nn::Adam<float> adam;
  adam.base_lr = cfg.base_lr;
  adam.halve_every = cfg.lr_halve_every;

  TrainResult result;
  double last_val = 0.0;
  std::vector<float> best;
  int stale_epochs = 0;
  std::vector<size_t> order(base.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t stop =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<SeqGrids> working;
      std::vector<const SeqGrids*> batch;
      size_t min_len = std::numeric_limits<size_t>::max();
      for (size_t i = start; i < stop; ++i) {
        if (cfg.augment) {
          SeqGrids aug = base[order[i]];
          augment_sequence(aug.bmode, aug.doppler, aug.gt,
                           sample_augment(rng));
          working.push_back(std::move(aug));
        } else {
          working.push_back(base[order[i]]);
        }
        min_len = std::min(min_len, working.back().bmode.size());
      }
      for (const SeqGrids& g : working) batch.push_back(&g);

      nn::SegNet<float>::State state;
      for (size_t w0 = 0; w0 < min_len;
           w0 += static_cast<size_t>(cfg.tbptt_every)) {
        const size_t w1 =
            std::min(min_len, w0 + static_cast<size_t>(cfg.tbptt_every));
        std::vector<nn::Tensor4<float>> bm, dop, gt;
        for (size_t t = w0; t < w1; ++t) {
          bm.push_back(stack_frame(batch, t, &SeqGrids::bmode));
          dop.push_back(stack_frame(batch, t, &SeqGrids::doppler));
          gt.push_back(stack_frame(batch, t, &SeqGrids::gt));
        }
        net.zero_grad();
        const float loss = nn::run_sequence_chunk(net, bm, dop, gt, state, true);
        const double lr = adam.current_lr();
        adam.step(params);
        ++result.iterations;
        result.curve.push_back(
            {result.iterations, static_cast<double>(loss), lr, last_val});
      }
    }
    result.epochs_run = epoch + 1;
    last_val = mean_dice(net, val_set, res);
    if (!result.curve.empty()) result.curve.back().val_dice = last_val;
    if (last_val > result.best_val_dice + 1e-9 || best.empty()) {
      result.best_val_dice = last_val;
      result.best_epoch = epoch;
      best = snapshot_values(net);
      stale_epochs = 0;
    } else if (++stale_epochs >= cfg.early_stop_patience) {
      break;
    }
  }
  restore_values(net, best);
  return result;
}

void write_loss_curve(const std::string& path,
                      const std::vector<CurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write loss curve: " + path);
  out << "iteration,loss,lr,val_dice\n";
  char line[160];
  for (const CurvePoint& p : curve) {
    std::snprintf(line, sizeof(line), "%lld,%.9g,%.9g,%.9g\n",
                  static_cast<long long>(p.iteration), p.loss, p.lr,
                  p.val_dice);
    out << line;
  }
}

}  // namespace vascan
