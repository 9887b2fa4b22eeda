#pragma once

#include <stdexcept>

#include "vascan/nn/tensor.hpp"

namespace vascan::nn {

// Soft dice loss with +1 smoothing in numerator and denominator:
//   L = 1 - (2 sum(p y) + 1) / (sum(p^2) + sum(y^2) + 1)
// averaged over batch items. p is the sigmoid output, y the binary target.
template <typename S>
S soft_dice_loss(const Tensor4<S>& pred, const Tensor4<S>& target,
                 Tensor4<S>* grad_pred = nullptr) {
  if (!pred.same_shape(target)) {
    throw std::invalid_argument("loss shape mismatch");
  }
  if (grad_pred != nullptr) *grad_pred = pred.zeros_like();
  S loss = 0;
  for (int ni = 0; ni < pred.n; ++ni) {
    S inter = 0, p2 = 0, y2 = 0;
    for (int ci = 0; ci < pred.c; ++ci) {
      inter += (pred.at(ni, ci) * target.at(ni, ci)).sum();
      p2 += pred.at(ni, ci).square().sum();
      y2 += target.at(ni, ci).square().sum();
    }
    const S num = 2 * inter + 1;
    const S den = p2 + y2 + 1;
    loss += 1 - num / den;
    if (grad_pred != nullptr) {
      // dL/dp = -(2 y den - num 2 p) / den^2, scaled by the batch mean.
      const S inv_n = S(1) / pred.n;
      for (int ci = 0; ci < pred.c; ++ci) {
        grad_pred->at(ni, ci) =
            -inv_n *
            (2 * target.at(ni, ci) * den - num * 2 * pred.at(ni, ci)) /
            (den * den);
      }
    }
  }
  return loss / pred.n;
}

}  // namespace vascan::nn
