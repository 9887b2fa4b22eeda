#pragma once

#include "vascan/nn/layers.hpp"

namespace vascan::nn {

// Convolutional GRU cell:
//   z = sigmoid(Wz * [x, h]),  r = sigmoid(Wr * [x, h])
//   h~ = tanh(Wh * [x, r . h]),  h' = (1 - z) . h + z . h~
// All three convolutions share kernel size and map cin + ch -> ch.
template <typename S>
struct ConvGru {
  int cin = 0, ch = 0;
  Conv2d<S> conv_z, conv_r, conv_h;

  struct Cache {
    typename Conv2d<S>::Cache cz, cr, chh;
    Tensor4<S> z, r, hcand, h_prev;
  };

  void init(int cin_, int ch_, int k, std::mt19937_64& rng) {
    cin = cin_;
    ch = ch_;
    if (k % 2 == 0) throw std::invalid_argument("gru kernel must be odd");
    conv_z.init(cin + ch, ch, k, rng);
    conv_r.init(cin + ch, ch, k, rng);
    conv_h.init(cin + ch, ch, k, rng);
  }

  Tensor4<S> forward(const Tensor4<S>& x, const Tensor4<S>& h_prev,
                     Cache& cache) {
    if (x.c != cin || h_prev.c != ch || x.h != h_prev.h || x.w != h_prev.w) {
      throw std::invalid_argument("gru input/state shape mismatch");
    }
    cache.h_prev = h_prev;
    const Tensor4<S> xh = concat_channels(x, h_prev);
    Tensor4<S> az = conv_z.forward(xh, cache.cz);
    Tensor4<S> ar = conv_r.forward(xh, cache.cr);
    cache.z = az.zeros_like();
    cache.r = ar.zeros_like();
    for (size_t i = 0; i < az.planes.size(); ++i) {
      cache.z.planes[i] = S(1) / (S(1) + (-az.planes[i]).exp());
      cache.r.planes[i] = S(1) / (S(1) + (-ar.planes[i]).exp());
    }
    Tensor4<S> rh = h_prev.zeros_like();
    for (size_t i = 0; i < rh.planes.size(); ++i) {
      rh.planes[i] = cache.r.planes[i] * h_prev.planes[i];
    }
    const Tensor4<S> xrh = concat_channels(x, rh);
    Tensor4<S> ah = conv_h.forward(xrh, cache.chh);
    cache.hcand = ah.zeros_like();
    for (size_t i = 0; i < ah.planes.size(); ++i) {
      cache.hcand.planes[i] = ah.planes[i].tanh();
    }
    Tensor4<S> h = h_prev.zeros_like();
    for (size_t i = 0; i < h.planes.size(); ++i) {
      h.planes[i] = (S(1) - cache.z.planes[i]) * h_prev.planes[i] +
                    cache.z.planes[i] * cache.hcand.planes[i];
    }
    return h;
  }

  // dh is the gradient on the new state; returns the gradient on x and
  // writes the gradient on the previous state.
  Tensor4<S> backward(const Tensor4<S>& dh, Cache& cache, Tensor4<S>& dh_prev) {
    Tensor4<S> dz = dh.zeros_like();
    Tensor4<S> dhc = dh.zeros_like();
    dh_prev = dh.zeros_like();
    for (size_t i = 0; i < dh.planes.size(); ++i) {
      dz.planes[i] = dh.planes[i] *
                     (cache.hcand.planes[i] - cache.h_prev.planes[i]);
      dhc.planes[i] = dh.planes[i] * cache.z.planes[i];
      dh_prev.planes[i] = dh.planes[i] * (S(1) - cache.z.planes[i]);
    }
    // Candidate branch through tanh and conv_h.
    Tensor4<S> dah = dhc.zeros_like();
    for (size_t i = 0; i < dah.planes.size(); ++i) {
      dah.planes[i] = dhc.planes[i] *
                      (S(1) - cache.hcand.planes[i].square());
    }
    const Tensor4<S> dxrh = conv_h.backward(dah, cache.chh);
    Tensor4<S> dx, drh;
    split_channels(dxrh, cin, dx, drh);
    Tensor4<S> dr = drh.zeros_like();
    for (size_t i = 0; i < drh.planes.size(); ++i) {
      dr.planes[i] = drh.planes[i] * cache.h_prev.planes[i];
      dh_prev.planes[i] += drh.planes[i] * cache.r.planes[i];
    }
    // Gate branches through the logistic derivatives.
    Tensor4<S> daz = dz.zeros_like();
    Tensor4<S> dar = dr.zeros_like();
    for (size_t i = 0; i < dz.planes.size(); ++i) {
      daz.planes[i] = dz.planes[i] * cache.z.planes[i] *
                      (S(1) - cache.z.planes[i]);
      dar.planes[i] = dr.planes[i] * cache.r.planes[i] *
                      (S(1) - cache.r.planes[i]);
    }
    const Tensor4<S> dxh_z = conv_z.backward(daz, cache.cz);
    const Tensor4<S> dxh_r = conv_r.backward(dar, cache.cr);
    Tensor4<S> dx2, dh2;
    split_channels(dxh_z, cin, dx2, dh2);
    accumulate(dx, dx2);
    accumulate(dh_prev, dh2);
    split_channels(dxh_r, cin, dx2, dh2);
    accumulate(dx, dx2);
    accumulate(dh_prev, dh2);
    return dx;
  }

  void collect_params(ParamList<S>& out, const std::string& prefix) {
    conv_z.collect_params(out, prefix + ".z");
    conv_r.collect_params(out, prefix + ".r");
    conv_h.collect_params(out, prefix + ".h");
  }

  void zero_grad() {
    conv_z.zero_grad();
    conv_r.zero_grad();
    conv_h.zero_grad();
  }
};

}  // namespace vascan::nn
