#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vascan/nn/convgru.hpp"
#include "vascan/nn/layers.hpp"
#include "vascan/nn/loss.hpp"

namespace vascan::nn {

// Which encoders exist, what they see, and where recurrence sits.
// The top encoder always feeds the decoder skips; the bottom encoder is a
// doppler-only stream fused at the bottleneck (skips too, when enabled).
struct VariantSpec {
  std::string name;
  bool top_uses_doppler = true;
  bool rnn_top = false;
  bool has_bottom = false;
  bool rnn_bottom = false;
  bool bottom_skips = false;

  static VariantSpec parse(const std::string& name) {
    static const std::map<std::string, VariantSpec> table = {
        {"unet_b", {"unet_b", false, false, false, false, false}},
        {"unet_bd", {"unet_bd", true, false, false, false, false}},
        {"unet_bd_rnn", {"unet_bd_rnn", true, true, false, false, false}},
        {"dopus0", {"dopus0", true, false, true, false, false}},
        {"dopus1", {"dopus1", false, true, true, true, true}},
        {"dopus2", {"dopus2", true, false, true, true, false}},
        {"dopus3", {"dopus3", false, true, true, true, false}},
        {"dopus4", {"dopus4", true, true, true, true, false}},
    };
    const auto it = table.find(name);
    if (it == table.end()) {
      throw std::invalid_argument("unknown model variant: " + name);
    }
    return it->second;
  }

  static std::vector<std::string> names() {
    return {"unet_b",  "unet_bd", "unet_bd_rnn", "dopus0",
            "dopus1", "dopus2",  "dopus3",      "dopus4"};
  }
};

struct ModelConfig {
  std::string variant = "dopus4";
  int input_res = 64;
  std::vector<int> widths = {8, 16, 32};
  bool batch_norm = true;
  int gru_kernel = 3;
  std::uint64_t init_seed = 1;
};

// conv-bn-relu twice.
template <typename S>
struct ConvBlock {
  Conv2d<S> c1, c2;
  BatchNorm2d<S> b1, b2;
  bool use_bn = true;

  struct Cache {
    typename Conv2d<S>::Cache c1, c2;
    typename BatchNorm2d<S>::Cache b1, b2;
    ReluCache<S> r1, r2;
  };

  void init(int cin, int cout, bool bn, std::mt19937_64& rng) {
    use_bn = bn;
    c1.init(cin, cout, 3, rng);
    c2.init(cout, cout, 3, rng);
    b1.init(cout);
    b2.init(cout);
  }

  Tensor4<S> forward(const Tensor4<S>& x, bool training, Cache& cache) {
    Tensor4<S> y = c1.forward(x, cache.c1);
    if (use_bn) y = b1.forward(y, training, cache.b1);
    y = relu_forward(y, cache.r1);
    y = c2.forward(y, cache.c2);
    if (use_bn) y = b2.forward(y, training, cache.b2);
    return relu_forward(y, cache.r2);
  }

  Tensor4<S> backward(const Tensor4<S>& dy, Cache& cache) {
    Tensor4<S> d = relu_backward(dy, cache.r2);
    if (use_bn) d = b2.backward(d, cache.b2);
    d = c2.backward(d, cache.c2);
    d = relu_backward(d, cache.r1);
    if (use_bn) d = b1.backward(d, cache.b1);
    return c1.backward(d, cache.c1);
  }

  void collect_params(ParamList<S>& out, const std::string& prefix) {
    c1.collect_params(out, prefix + ".c1");
    if (use_bn) b1.collect_params(out, prefix + ".b1");
    c2.collect_params(out, prefix + ".c2");
    if (use_bn) b2.collect_params(out, prefix + ".b2");
  }

  void collect_buffers(ParamList<S>& out, const std::string& prefix) {
    if (use_bn) {
      b1.collect_buffers(out, prefix + ".b1");
      b2.collect_buffers(out, prefix + ".b2");
    }
  }

  static double min_margin(const Cache& cache) {
    return std::min(relu_min_margin(cache.r1), relu_min_margin(cache.r2));
  }

  static std::uint64_t pattern(const Cache& cache, std::uint64_t h) {
    return relu_pattern(cache.r2, relu_pattern(cache.r1, h));
  }

  void zero_grad() {
    c1.zero_grad();
    c2.zero_grad();
    b1.zero_grad();
    b2.zero_grad();
  }
};

template <typename S>
struct Encoder {
  std::vector<ConvBlock<S>> blocks;  // one per level, pooling in between

  struct Cache {
    std::vector<typename ConvBlock<S>::Cache> blocks;
    std::vector<PoolCache> pools;
  };

  void init(int cin, const std::vector<int>& widths, bool bn,
            std::mt19937_64& rng) {
    blocks.resize(widths.size());
    int c = cin;
    for (size_t l = 0; l < widths.size(); ++l) {
      blocks[l].init(c, widths[l], bn, rng);
      c = widths[l];
    }
  }

  // skips gets the pre-pool output of every level except the deepest.
  Tensor4<S> forward(const Tensor4<S>& x, bool training, Cache& cache,
                     std::vector<Tensor4<S>>& skips) {
    const size_t levels = blocks.size();
    cache.blocks.resize(levels);
    cache.pools.resize(levels - 1);
    skips.clear();
    Tensor4<S> cur = x;
    for (size_t l = 0; l < levels; ++l) {
      cur = blocks[l].forward(cur, training, cache.blocks[l]);
      if (l + 1 < levels) {
        skips.push_back(cur);
        cur = maxpool2_forward(cur, cache.pools[l]);
      }
    }
    return cur;
  }

  // dskips may be null when no gradient flows into this encoder's skips.
  Tensor4<S> backward(const Tensor4<S>& d_bottleneck,
                      const std::vector<Tensor4<S>>* dskips, Cache& cache) {
    const size_t levels = blocks.size();
    Tensor4<S> d = blocks[levels - 1].backward(d_bottleneck,
                                               cache.blocks[levels - 1]);
    for (size_t l = levels - 1; l-- > 0;) {
      d = maxpool2_backward(d, cache.pools[l]);
      if (dskips != nullptr) accumulate(d, (*dskips)[l]);
      d = blocks[l].backward(d, cache.blocks[l]);
    }
    return d;
  }

  void collect_params(ParamList<S>& out, const std::string& prefix) {
    for (size_t l = 0; l < blocks.size(); ++l) {
      blocks[l].collect_params(out, prefix + ".l" + std::to_string(l));
    }
  }
  void collect_buffers(ParamList<S>& out, const std::string& prefix) {
    for (size_t l = 0; l < blocks.size(); ++l) {
      blocks[l].collect_buffers(out, prefix + ".l" + std::to_string(l));
    }
  }
  void zero_grad() {
    for (auto& b : blocks) b.zero_grad();
  }

  static double min_margin(const Cache& cache) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : cache.blocks) m = std::min(m, ConvBlock<S>::min_margin(b));
    for (const auto& p : cache.pools) m = std::min(m, p.min_margin);
    return m;
  }

  static std::uint64_t pattern(const Cache& cache, std::uint64_t h) {
    for (const auto& b : cache.blocks) h = ConvBlock<S>::pattern(b, h);
    for (const auto& p : cache.pools) h = pool_pattern(p, h);
    return h;
  }
};

template <typename S>
struct Decoder {
  std::vector<Conv2d<S>> up_convs;     // level l: widths[l+1] -> widths[l]
  std::vector<ConvBlock<S>> blocks;    // level l: concat -> widths[l]
  std::vector<int> widths;
  bool bottom_skips = false;

  struct Cache {
    std::vector<typename Conv2d<S>::Cache> up;
    std::vector<typename ConvBlock<S>::Cache> blocks;
  };

  void init(const std::vector<int>& widths_, bool with_bottom_skips, bool bn,
            std::mt19937_64& rng) {
    widths = widths_;
    bottom_skips = with_bottom_skips;
    const size_t levels = widths.size() - 1;
    up_convs.resize(levels);
    blocks.resize(levels);
    for (size_t l = 0; l < levels; ++l) {
      up_convs[l].init(widths[l + 1], widths[l], 3, rng);
      const int cat = widths[l] * (with_bottom_skips ? 3 : 2);
      blocks[l].init(cat, widths[l], bn, rng);
    }
  }

  Tensor4<S> forward(const Tensor4<S>& deep,
                     const std::vector<Tensor4<S>>& top_skips,
                     const std::vector<Tensor4<S>>& bot_skips, bool training,
                     Cache& cache) {
    const size_t levels = up_convs.size();
    cache.up.resize(levels);
    cache.blocks.resize(levels);
    Tensor4<S> cur = deep;
    for (size_t l = levels; l-- > 0;) {
      cur = upsample2_forward(cur);
      cur = up_convs[l].forward(cur, cache.up[l]);
      Tensor4<S> cat = concat_channels(top_skips[l], cur);
      if (bottom_skips) cat = concat_channels(bot_skips[l], cat);
      cur = blocks[l].forward(cat, training, cache.blocks[l]);
    }
    return cur;
  }

  // Returns the gradient on the bottleneck input and fills per-level skip
  // gradients (bottom only when enabled).
  Tensor4<S> backward(const Tensor4<S>& dy, Cache& cache,
                      std::vector<Tensor4<S>>& d_top_skips,
                      std::vector<Tensor4<S>>& d_bot_skips) {
    const size_t levels = up_convs.size();
    d_top_skips.resize(levels);
    d_bot_skips.resize(levels);
    Tensor4<S> d = dy;
    for (size_t l = 0; l < levels; ++l) {
      Tensor4<S> dcat = blocks[l].backward(d, cache.blocks[l]);
      if (bottom_skips) {
        Tensor4<S> rest;
        split_channels(dcat, widths[l], d_bot_skips[l], rest);
        dcat = std::move(rest);
      }
      Tensor4<S> dup;
      split_channels(dcat, widths[l], d_top_skips[l], dup);
      dup = up_convs[l].backward(dup, cache.up[l]);
      d = upsample2_backward(dup);
    }
    return d;
  }

  void collect_params(ParamList<S>& out, const std::string& prefix) {
    for (size_t l = 0; l < up_convs.size(); ++l) {
      up_convs[l].collect_params(out, prefix + ".up" + std::to_string(l));
      blocks[l].collect_params(out, prefix + ".b" + std::to_string(l));
    }
  }
  void collect_buffers(ParamList<S>& out, const std::string& prefix) {
    for (size_t l = 0; l < blocks.size(); ++l) {
      blocks[l].collect_buffers(out, prefix + ".b" + std::to_string(l));
    }
  }
  void zero_grad() {
    for (auto& u : up_convs) u.zero_grad();
    for (auto& b : blocks) b.zero_grad();
  }

  static double min_margin(const Cache& cache) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : cache.blocks) m = std::min(m, ConvBlock<S>::min_margin(b));
    return m;
  }

  static std::uint64_t pattern(const Cache& cache, std::uint64_t h) {
    for (const auto& b : cache.blocks) h = ConvBlock<S>::pattern(b, h);
    return h;
  }
};

// Dual-encoder recurrent segmentation network. The forward pass consumes
// one frame and carries the GRU hidden states in State; backward walks one
// cached frame and threads hidden-state gradients across frames.
template <typename S>
class SegNet {
 public:
  struct State {
    Tensor4<S> h_top, h_bottom;
    bool valid = false;
  };

  struct FrameCache {
    typename Encoder<S>::Cache enc_top, enc_bottom;
    std::vector<Tensor4<S>> top_skips, bottom_skips;
    typename ConvGru<S>::Cache gru_top, gru_bottom;
    typename Conv2d<S>::Cache fusion;
    typename Decoder<S>::Cache dec;
    typename Conv2d<S>::Cache head;
    Tensor4<S> prob;
  };

  explicit SegNet(const ModelConfig& cfg)
      : cfg_(cfg), spec_(VariantSpec::parse(cfg.variant)) {
    if (cfg.widths.size() < 2) {
      throw std::invalid_argument("model needs at least two levels");
    }
    std::mt19937_64 rng(cfg.init_seed);
    enc_top_.init(spec_.top_uses_doppler ? 2 : 1, cfg.widths, cfg.batch_norm,
                  rng);
    if (spec_.has_bottom) {
      enc_bottom_.init(1, cfg.widths, cfg.batch_norm, rng);
    }
    const int cb = cfg.widths.back();
    if (spec_.rnn_top) gru_top_.init(cb, cb, cfg.gru_kernel, rng);
    if (spec_.rnn_bottom) gru_bottom_.init(cb, cb, cfg.gru_kernel, rng);
    if (spec_.has_bottom) fusion_.init(2 * cb, cb, 1, rng);
    decoder_.init(cfg.widths, spec_.bottom_skips, cfg.batch_norm, rng);
    head_.init(cfg.widths.front(), 1, 1, rng);
  }

  const ModelConfig& config() const { return cfg_; }
  const VariantSpec& spec() const { return spec_; }

  Tensor4<S> forward(const Tensor4<S>& bmode, const Tensor4<S>& doppler,
                     State& state, FrameCache& cache, bool training) {
    if (!bmode.same_shape(doppler)) {
      throw std::invalid_argument("b-mode/doppler tensor shape mismatch");
    }
    const Tensor4<S> top_in =
        spec_.top_uses_doppler ? concat_channels(bmode, doppler) : bmode;
    Tensor4<S> top_feat =
        enc_top_.forward(top_in, training, cache.enc_top, cache.top_skips);
    Tensor4<S> bottom_feat;
    if (spec_.has_bottom) {
      bottom_feat = enc_bottom_.forward(doppler, training, cache.enc_bottom,
                                        cache.bottom_skips);
    }
    if (!state.valid) {
      if (spec_.rnn_top) {
        state.h_top = Tensor4<S>::zeros(top_feat.n, top_feat.c, top_feat.h,
                                        top_feat.w);
      }
      if (spec_.rnn_bottom) {
        state.h_bottom = Tensor4<S>::zeros(bottom_feat.n, bottom_feat.c,
                                           bottom_feat.h, bottom_feat.w);
      }
      state.valid = true;
    }
    if (spec_.rnn_top) {
      top_feat = gru_top_.forward(top_feat, state.h_top, cache.gru_top);
      state.h_top = top_feat;
    }
    if (spec_.rnn_bottom) {
      bottom_feat =
          gru_bottom_.forward(bottom_feat, state.h_bottom, cache.gru_bottom);
      state.h_bottom = bottom_feat;
    }
    Tensor4<S> fused = top_feat;
    if (spec_.has_bottom) {
      fused = fusion_.forward(concat_channels(top_feat, bottom_feat),
                              cache.fusion);
    }
    Tensor4<S> dec = decoder_.forward(fused, cache.top_skips,
                                      cache.bottom_skips, training, cache.dec);
    const Tensor4<S> logits = head_.forward(dec, cache.head);
    return sigmoid_forward(logits, cache.prob);
  }

  // dh_top / dh_bottom carry hidden-state gradients between frames: on
  // entry the gradient flowing back from the next frame (empty tensors for
  // the chunk's last frame), on exit the gradient for the previous frame.
  void backward(FrameCache& cache, const Tensor4<S>& dprob, Tensor4<S>& dh_top,
                Tensor4<S>& dh_bottom) {
    const Tensor4<S> dlogits = sigmoid_backward(dprob, cache.prob);
    Tensor4<S> ddec = head_.backward(dlogits, cache.head);
    std::vector<Tensor4<S>> d_top_skips, d_bot_skips;
    Tensor4<S> dfused = decoder_.backward(ddec, cache.dec, d_top_skips,
                                          d_bot_skips);
    Tensor4<S> d_top_feat, d_bottom_feat;
    if (spec_.has_bottom) {
      const Tensor4<S> dcat = fusion_.backward(dfused, cache.fusion);
      split_channels(dcat, cfg_.widths.back(), d_top_feat, d_bottom_feat);
    } else {
      d_top_feat = dfused;
    }
    Tensor4<S> d_top_bottleneck;
    if (spec_.rnn_top) {
      if (!dh_top.empty()) accumulate(d_top_feat, dh_top);
      d_top_bottleneck = gru_top_.backward(d_top_feat, cache.gru_top, dh_top);
    } else {
      d_top_bottleneck = std::move(d_top_feat);
    }
    Tensor4<S> d_bottom_bottleneck;
    if (spec_.has_bottom) {
      if (spec_.rnn_bottom) {
        if (!dh_bottom.empty()) accumulate(d_bottom_feat, dh_bottom);
        d_bottom_bottleneck =
            gru_bottom_.backward(d_bottom_feat, cache.gru_bottom, dh_bottom);
      } else {
        d_bottom_bottleneck = std::move(d_bottom_feat);
      }
    }
    enc_top_.backward(d_top_bottleneck, &d_top_skips, cache.enc_top);
    if (spec_.has_bottom) {
      enc_bottom_.backward(d_bottom_bottleneck,
                           spec_.bottom_skips ? &d_bot_skips : nullptr,
                           cache.enc_bottom);
    }
  }

  void collect_params(ParamList<S>& out) {
    enc_top_.collect_params(out, "enc_top");
    if (spec_.has_bottom) enc_bottom_.collect_params(out, "enc_bottom");
    if (spec_.rnn_top) gru_top_.collect_params(out, "gru_top");
    if (spec_.rnn_bottom) gru_bottom_.collect_params(out, "gru_bottom");
    if (spec_.has_bottom) fusion_.collect_params(out, "fusion");
    decoder_.collect_params(out, "decoder");
    head_.collect_params(out, "head");
  }

  void collect_buffers(ParamList<S>& out) {
    enc_top_.collect_buffers(out, "enc_top");
    if (spec_.has_bottom) enc_bottom_.collect_buffers(out, "enc_bottom");
    decoder_.collect_buffers(out, "decoder");
  }

  std::int64_t param_count() {
    ParamList<S> params;
    collect_params(params);
    return total_param_count(params);
  }

  // Distance of this frame's closest activation to a ReLU or pooling
  // non-smoothness; finite-difference probes need it well above the step.
  double frame_min_margin(const FrameCache& cache) const {
    double m = std::min(Encoder<S>::min_margin(cache.enc_top),
                        Decoder<S>::min_margin(cache.dec));
    if (spec_.has_bottom) {
      m = std::min(m, Encoder<S>::min_margin(cache.enc_bottom));
    }
    return m;
  }

  // Hash of every kink decision taken this frame. A parameter probe that
  // leaves the hash unchanged did not cross any non-smooth point.
  std::uint64_t frame_pattern(const FrameCache& cache, std::uint64_t h) const {
    h = Encoder<S>::pattern(cache.enc_top, h);
    if (spec_.has_bottom) h = Encoder<S>::pattern(cache.enc_bottom, h);
    return Decoder<S>::pattern(cache.dec, h);
  }

  void zero_grad() {
    enc_top_.zero_grad();
    if (spec_.has_bottom) enc_bottom_.zero_grad();
    if (spec_.rnn_top) gru_top_.zero_grad();
    if (spec_.rnn_bottom) gru_bottom_.zero_grad();
    if (spec_.has_bottom) fusion_.zero_grad();
    decoder_.zero_grad();
    head_.zero_grad();
  }

 private:
  ModelConfig cfg_;
  VariantSpec spec_;
  Encoder<S> enc_top_, enc_bottom_;
  ConvGru<S> gru_top_, gru_bottom_;
  Conv2d<S> fusion_;
  Decoder<S> decoder_;
  Conv2d<S> head_;
};

// Forward (and optionally backward) over a span of consecutive frames as
// one truncated-backpropagation window. Loss is the frame-mean soft dice;
// hidden-state gradients stop at the window start.
template <typename S>
S run_sequence_chunk(SegNet<S>& net, const std::vector<Tensor4<S>>& bmode,
                     const std::vector<Tensor4<S>>& doppler,
                     const std::vector<Tensor4<S>>& target,
                     typename SegNet<S>::State& state, bool do_backward,
                     double* min_kink_margin = nullptr,
                     std::uint64_t* kink_pattern = nullptr) {
  const size_t k = bmode.size();
  if (k == 0 || doppler.size() != k || target.size() != k) {
    throw std::invalid_argument("chunk frame lists disagree");
  }
  std::vector<typename SegNet<S>::FrameCache> caches(k);
  std::vector<Tensor4<S>> dprobs(k);
  S loss = 0;
  for (size_t t = 0; t < k; ++t) {
    const Tensor4<S> prob =
        net.forward(bmode[t], doppler[t], state, caches[t], true);
    Tensor4<S>* grad = do_backward ? &dprobs[t] : nullptr;
    loss += soft_dice_loss(prob, target[t], grad);
    if (min_kink_margin != nullptr) {
      *min_kink_margin =
          std::min(*min_kink_margin, net.frame_min_margin(caches[t]));
    }
    if (kink_pattern != nullptr) {
      *kink_pattern = net.frame_pattern(caches[t], *kink_pattern);
    }
  }
  loss /= static_cast<S>(k);
  if (do_backward) {
    Tensor4<S> dh_top, dh_bottom;
    const S inv_k = S(1) / static_cast<S>(k);
    for (size_t t = k; t-- > 0;) {
      for (auto& p : dprobs[t].planes) p *= inv_k;
      net.backward(caches[t], dprobs[t], dh_top, dh_bottom);
    }
  }
  return loss;
}

}  // namespace vascan::nn
