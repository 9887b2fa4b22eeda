#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

#include "vascan/common.hpp"
#include "vascan/nn/tensor.hpp"

namespace vascan::nn {

// Stride-1 convolution with symmetric zero padding (same-size output for
// odd kernels with pad = k / 2). Forward and backward walk the kernel taps
// as shifted whole-plane multiply-accumulates.
template <typename S>
struct Conv2d {
  int cin = 0, cout = 0, k = 3, pad = 1;
  std::vector<Plane<S>> weight;  // cout * cin planes of k x k
  Vector<S> bias;
  std::vector<Plane<S>> grad_weight;
  Vector<S> grad_bias;

  struct Cache {
    std::vector<Plane<S>> xpad;  // n * cin padded inputs
    int n = 0, h = 0, w = 0;
  };

  void init(int cin_, int cout_, int k_, std::mt19937_64& rng) {
    cin = cin_;
    cout = cout_;
    k = k_;
    pad = k_ / 2;
    weight.assign(static_cast<size_t>(cout) * cin, Plane<S>::Zero(k, k));
    grad_weight = weight;
    bias = Vector<S>::Zero(cout);
    grad_bias = bias;
    const double scale = std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
    for (auto& wpl : weight) {
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          wpl(i, j) = static_cast<S>(vascan::normal01(rng) * scale);
        }
      }
    }
  }

  Plane<S>& w(int co, int ci) { return weight[static_cast<size_t>(co) * cin + ci]; }
  const Plane<S>& w(int co, int ci) const {
    return weight[static_cast<size_t>(co) * cin + ci];
  }
  Plane<S>& gw(int co, int ci) {
    return grad_weight[static_cast<size_t>(co) * cin + ci];
  }

  Tensor4<S> forward(const Tensor4<S>& x, Cache& cache) const {
    if (x.c != cin) throw std::invalid_argument("conv input channel mismatch");
    const int h = x.h, w_ = x.w;
    cache.n = x.n;
    cache.h = h;
    cache.w = w_;
    cache.xpad.assign(static_cast<size_t>(x.n) * cin,
                      Plane<S>::Zero(h + 2 * pad, w_ + 2 * pad));
    for (int ni = 0; ni < x.n; ++ni) {
      for (int ci = 0; ci < cin; ++ci) {
        cache.xpad[static_cast<size_t>(ni) * cin + ci].block(pad, pad, h, w_) =
            x.at(ni, ci);
      }
    }
    Tensor4<S> y = Tensor4<S>::zeros(x.n, cout, h, w_);
    for (int ni = 0; ni < x.n; ++ni) {
      for (int co = 0; co < cout; ++co) {
        Plane<S>& acc = y.at(ni, co);
        acc.setConstant(bias(co));
        for (int ci = 0; ci < cin; ++ci) {
          const Plane<S>& xp = cache.xpad[static_cast<size_t>(ni) * cin + ci];
          const Plane<S>& wp = w(co, ci);
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              acc += wp(ky, kx) * xp.block(ky, kx, h, w_);
            }
          }
        }
      }
    }
    return y;
  }

  Tensor4<S> backward(const Tensor4<S>& dy, const Cache& cache) {
    const int h = cache.h, w_ = cache.w;
    std::vector<Plane<S>> dxpad(static_cast<size_t>(cache.n) * cin,
                                Plane<S>::Zero(h + 2 * pad, w_ + 2 * pad));
    for (int ni = 0; ni < cache.n; ++ni) {
      for (int co = 0; co < cout; ++co) {
        const Plane<S>& dyp = dy.at(ni, co);
        grad_bias(co) += dyp.sum();
        for (int ci = 0; ci < cin; ++ci) {
          const Plane<S>& xp = cache.xpad[static_cast<size_t>(ni) * cin + ci];
          Plane<S>& dxp = dxpad[static_cast<size_t>(ni) * cin + ci];
          Plane<S>& gwp = gw(co, ci);
          const Plane<S>& wp = w(co, ci);
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              gwp(ky, kx) += (xp.block(ky, kx, h, w_) * dyp).sum();
              dxp.block(ky, kx, h, w_) += wp(ky, kx) * dyp;
            }
          }
        }
      }
    }
    Tensor4<S> dx = Tensor4<S>::zeros(cache.n, cin, h, w_);
    for (int ni = 0; ni < cache.n; ++ni) {
      for (int ci = 0; ci < cin; ++ci) {
        dx.at(ni, ci) =
            dxpad[static_cast<size_t>(ni) * cin + ci].block(pad, pad, h, w_);
      }
    }
    return dx;
  }

  void collect_params(ParamList<S>& out, const std::string& prefix) {
    for (int co = 0; co < cout; ++co) {
      for (int ci = 0; ci < cin; ++ci) {
        out.push_back({w(co, ci).data(), gw(co, ci).data(),
                       static_cast<std::int64_t>(k) * k,
                       prefix + ".w" + std::to_string(co) + "_" +
                           std::to_string(ci)});
      }
    }
    out.push_back({bias.data(), grad_bias.data(), cout, prefix + ".b"});
  }

  void zero_grad() {
    for (auto& g : grad_weight) g.setZero();
    grad_bias.setZero();
  }
};

// Spatial batch normalisation. Training mode normalises over (n, h, w) per
// channel with biased variance and refreshes the running stats; eval mode
// applies the stored statistics.
template <typename S>
struct BatchNorm2d {
  int ch = 0;
  S eps = static_cast<S>(1e-5);
  S momentum = static_cast<S>(0.1);
  Vector<S> gamma, beta, grad_gamma, grad_beta;
  Vector<S> running_mean, running_var;

  struct Cache {
    Tensor4<S> xhat;
    Vector<S> inv_std;
    bool training = false;
  };

  void init(int channels) {
    ch = channels;
    gamma = Vector<S>::Ones(ch);
    beta = Vector<S>::Zero(ch);
    grad_gamma = Vector<S>::Zero(ch);
    grad_beta = Vector<S>::Zero(ch);
    running_mean = Vector<S>::Zero(ch);
    running_var = Vector<S>::Ones(ch);
  }

  Tensor4<S> forward(const Tensor4<S>& x, bool training, Cache& cache) {
    if (x.c != ch) throw std::invalid_argument("batchnorm channel mismatch");
    cache.training = training;
    cache.xhat = Tensor4<S>::zeros(x.n, x.c, x.h, x.w);
    cache.inv_std = Vector<S>::Zero(ch);
    Tensor4<S> y = Tensor4<S>::zeros(x.n, x.c, x.h, x.w);
    const S m = static_cast<S>(x.n) * x.h * x.w;
    for (int ci = 0; ci < ch; ++ci) {
      S mean, var;
      if (training) {
        S sum = 0, sq = 0;
        for (int ni = 0; ni < x.n; ++ni) {
          sum += x.at(ni, ci).sum();
          sq += x.at(ni, ci).square().sum();
        }
        mean = sum / m;
        var = sq / m - mean * mean;
        if (var < 0) var = 0;  // numeric guard
        running_mean(ci) = (1 - momentum) * running_mean(ci) + momentum * mean;
        running_var(ci) = (1 - momentum) * running_var(ci) + momentum * var;
      } else {
        mean = running_mean(ci);
        var = running_var(ci);
      }
      const S inv = S(1) / std::sqrt(var + eps);
      cache.inv_std(ci) = inv;
      for (int ni = 0; ni < x.n; ++ni) {
        cache.xhat.at(ni, ci) = (x.at(ni, ci) - mean) * inv;
        y.at(ni, ci) = gamma(ci) * cache.xhat.at(ni, ci) + beta(ci);
      }
    }
    return y;
  }

  Tensor4<S> backward(const Tensor4<S>& dy, const Cache& cache) {
    Tensor4<S> dx = Tensor4<S>::zeros(dy.n, dy.c, dy.h, dy.w);
    const S m = static_cast<S>(dy.n) * dy.h * dy.w;
    for (int ci = 0; ci < ch; ++ci) {
      S sum_dy = 0, sum_dy_xhat = 0;
      for (int ni = 0; ni < dy.n; ++ni) {
        sum_dy += dy.at(ni, ci).sum();
        sum_dy_xhat += (dy.at(ni, ci) * cache.xhat.at(ni, ci)).sum();
      }
      grad_beta(ci) += sum_dy;
      grad_gamma(ci) += sum_dy_xhat;
      const S g = gamma(ci) * cache.inv_std(ci);
      if (cache.training) {
        for (int ni = 0; ni < dy.n; ++ni) {
          dx.at(ni, ci) = g * (dy.at(ni, ci) - sum_dy / m -
                               cache.xhat.at(ni, ci) * (sum_dy_xhat / m));
        }
      } else {
        for (int ni = 0; ni < dy.n; ++ni) dx.at(ni, ci) = g * dy.at(ni, ci);
      }
    }
    return dx;
  }

  void collect_params(ParamList<S>& out, const std::string& prefix) {
    out.push_back({gamma.data(), grad_gamma.data(), ch, prefix + ".gamma"});
    out.push_back({beta.data(), grad_beta.data(), ch, prefix + ".beta"});
  }

  // Running statistics: serialised but never trained or perturbed.
  void collect_buffers(ParamList<S>& out, const std::string& prefix) {
    out.push_back({running_mean.data(), nullptr, ch, prefix + ".rmean"});
    out.push_back({running_var.data(), nullptr, ch, prefix + ".rvar"});
  }

  void zero_grad() {
    grad_gamma.setZero();
    grad_beta.setZero();
  }
};

template <typename S>
struct ReluCache {
  Tensor4<S> x;  // pre-activation, kept for the gate and for kink margins
};

template <typename S>
Tensor4<S> relu_forward(const Tensor4<S>& x, ReluCache<S>& cache) {
  cache.x = x;
  Tensor4<S> y = Tensor4<S>::zeros(x.n, x.c, x.h, x.w);
  for (size_t i = 0; i < x.planes.size(); ++i) {
    y.planes[i] = x.planes[i].max(S(0));
  }
  return y;
}

template <typename S>
Tensor4<S> relu_backward(const Tensor4<S>& dy, const ReluCache<S>& cache) {
  Tensor4<S> dx = Tensor4<S>::zeros(dy.n, dy.c, dy.h, dy.w);
  for (size_t i = 0; i < dy.planes.size(); ++i) {
    dx.planes[i] = dy.planes[i] * (cache.x.planes[i] > S(0)).template cast<S>();
  }
  return dx;
}

// Distance of the closest pre-activation to the ReLU kink. Finite
// differencing is only valid on instances where this is well above the
// probe step.
template <typename S>
double relu_min_margin(const ReluCache<S>& cache) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : cache.x.planes) {
    m = std::min(m, static_cast<double>(p.abs().minCoeff()));
  }
  return m;
}

inline std::uint64_t mix_pattern(std::uint64_t h, std::uint64_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

// Folds the side of the kink taken by every pre-activation into a running
// hash. Two forward passes with equal hashes stayed inside the same linear
// region of every ReLU, so a finite difference between them differentiates
// a smooth function.
template <typename S>
std::uint64_t relu_pattern(const ReluCache<S>& cache, std::uint64_t h) {
  for (const auto& p : cache.x.planes) {
    for (int i = 0; i < p.rows(); ++i) {
      for (int j = 0; j < p.cols(); ++j) {
        h = mix_pattern(h, p(i, j) > S(0) ? 1u : 0u);
      }
    }
  }
  return h;
}

using IndexPlane = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic,
                                Eigen::RowMajor>;

struct PoolCache {
  std::vector<IndexPlane> argmax;  // winner slot 0..3 within each 2x2 cell
  int n = 0, c = 0;
  double min_margin = 0.0;  // smallest winner-vs-runner-up gap seen
};

template <typename S>
Tensor4<S> maxpool2_forward(const Tensor4<S>& x, PoolCache& cache) {
  if (x.h % 2 != 0 || x.w % 2 != 0) {
    throw std::invalid_argument("maxpool needs even spatial dims");
  }
  const int oh = x.h / 2, ow = x.w / 2;
  cache.n = x.n;
  cache.c = x.c;
  cache.argmax.assign(x.planes.size(), IndexPlane::Zero(oh, ow));
  cache.min_margin = std::numeric_limits<double>::infinity();
  Tensor4<S> y = Tensor4<S>::zeros(x.n, x.c, oh, ow);
  for (size_t p = 0; p < x.planes.size(); ++p) {
    const Plane<S>& xp = x.planes[p];
    Plane<S>& yp = y.planes[p];
    IndexPlane& am = cache.argmax[p];
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        S cell[4] = {xp(2 * i, 2 * j), xp(2 * i, 2 * j + 1),
                     xp(2 * i + 1, 2 * j), xp(2 * i + 1, 2 * j + 1)};
        int slot = 0;
        for (int s = 1; s < 4; ++s) {
          if (cell[s] > cell[slot]) slot = s;
        }
        S runner_up = std::numeric_limits<S>::lowest();
        for (int s = 0; s < 4; ++s) {
          if (s != slot) runner_up = std::max(runner_up, cell[s]);
        }
        cache.min_margin = std::min(
            cache.min_margin, static_cast<double>(cell[slot] - runner_up));
        yp(i, j) = cell[slot];
        am(i, j) = slot;
      }
    }
  }
  return y;
}

template <typename S>
Tensor4<S> maxpool2_backward(const Tensor4<S>& dy, const PoolCache& cache) {
  Tensor4<S> dx = Tensor4<S>::zeros(dy.n, dy.c, dy.h * 2, dy.w * 2);
  for (size_t p = 0; p < dy.planes.size(); ++p) {
    const Plane<S>& dyp = dy.planes[p];
    Plane<S>& dxp = dx.planes[p];
    const IndexPlane& am = cache.argmax[p];
    for (int i = 0; i < dy.h; ++i) {
      for (int j = 0; j < dy.w; ++j) {
        const int slot = am(i, j);
        dxp(2 * i + slot / 2, 2 * j + slot % 2) = dyp(i, j);
      }
    }
  }
  return dx;
}

inline std::uint64_t pool_pattern(const PoolCache& cache, std::uint64_t h) {
  for (const auto& am : cache.argmax) {
    for (int i = 0; i < am.rows(); ++i) {
      for (int j = 0; j < am.cols(); ++j) {
        h = mix_pattern(h, static_cast<std::uint64_t>(am(i, j)));
      }
    }
  }
  return h;
}

template <typename S>
Tensor4<S> upsample2_forward(const Tensor4<S>& x) {
  Tensor4<S> y = Tensor4<S>::zeros(x.n, x.c, x.h * 2, x.w * 2);
  for (size_t p = 0; p < x.planes.size(); ++p) {
    const Plane<S>& xp = x.planes[p];
    Plane<S>& yp = y.planes[p];
    for (int i = 0; i < x.h; ++i) {
      for (int j = 0; j < x.w; ++j) {
        yp.block(2 * i, 2 * j, 2, 2).setConstant(xp(i, j));
      }
    }
  }
  return y;
}

template <typename S>
Tensor4<S> upsample2_backward(const Tensor4<S>& dy) {
  Tensor4<S> dx = Tensor4<S>::zeros(dy.n, dy.c, dy.h / 2, dy.w / 2);
  for (size_t p = 0; p < dy.planes.size(); ++p) {
    const Plane<S>& dyp = dy.planes[p];
    Plane<S>& dxp = dx.planes[p];
    for (int i = 0; i < dx.h; ++i) {
      for (int j = 0; j < dx.w; ++j) {
        dxp(i, j) = dyp.block(2 * i, 2 * j, 2, 2).sum();
      }
    }
  }
  return dx;
}

template <typename S>
Tensor4<S> sigmoid_forward(const Tensor4<S>& x, Tensor4<S>& cache_y) {
  Tensor4<S> y = Tensor4<S>::zeros(x.n, x.c, x.h, x.w);
  for (size_t i = 0; i < x.planes.size(); ++i) {
    y.planes[i] = S(1) / (S(1) + (-x.planes[i]).exp());
  }
  cache_y = y;
  return y;
}

template <typename S>
Tensor4<S> sigmoid_backward(const Tensor4<S>& dy, const Tensor4<S>& cache_y) {
  Tensor4<S> dx = Tensor4<S>::zeros(dy.n, dy.c, dy.h, dy.w);
  for (size_t i = 0; i < dy.planes.size(); ++i) {
    dx.planes[i] = dy.planes[i] * cache_y.planes[i] * (S(1) - cache_y.planes[i]);
  }
  return dx;
}

}  // namespace vascan::nn
