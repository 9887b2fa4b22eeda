#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vascan::nn {

template <typename S>
using Plane = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Dense NCHW activation tensor stored as per-(item, channel) planes.
template <typename S>
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<Plane<S>> planes;

  static Tensor4 zeros(int n, int c, int h, int w) {
    Tensor4 t;
    t.n = n;
    t.c = c;
    t.h = h;
    t.w = w;
    t.planes.assign(static_cast<size_t>(n) * c, Plane<S>::Zero(h, w));
    return t;
  }

  Plane<S>& at(int ni, int ci) {
    return planes[static_cast<size_t>(ni) * c + ci];
  }
  const Plane<S>& at(int ni, int ci) const {
    return planes[static_cast<size_t>(ni) * c + ci];
  }

  bool empty() const { return planes.empty(); }
  bool same_shape(const Tensor4& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  Tensor4 zeros_like() const { return zeros(n, c, h, w); }
};

template <typename S>
Tensor4<S> concat_channels(const Tensor4<S>& a, const Tensor4<S>& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) {
    throw std::invalid_argument("concat_channels shape mismatch");
  }
  Tensor4<S> out = Tensor4<S>::zeros(a.n, a.c + b.c, a.h, a.w);
  for (int ni = 0; ni < a.n; ++ni) {
    for (int ci = 0; ci < a.c; ++ci) out.at(ni, ci) = a.at(ni, ci);
    for (int ci = 0; ci < b.c; ++ci) out.at(ni, a.c + ci) = b.at(ni, ci);
  }
  return out;
}

// Splits the gradient of a channel concatenation back into the two parts.
template <typename S>
void split_channels(const Tensor4<S>& d, int c_first, Tensor4<S>& da,
                    Tensor4<S>& db) {
  da = Tensor4<S>::zeros(d.n, c_first, d.h, d.w);
  db = Tensor4<S>::zeros(d.n, d.c - c_first, d.h, d.w);
  for (int ni = 0; ni < d.n; ++ni) {
    for (int ci = 0; ci < c_first; ++ci) da.at(ni, ci) = d.at(ni, ci);
    for (int ci = c_first; ci < d.c; ++ci) db.at(ni, ci - c_first) = d.at(ni, ci);
  }
}

template <typename S>
void accumulate(Tensor4<S>& into, const Tensor4<S>& from) {
  if (!into.same_shape(from)) {
    throw std::invalid_argument("accumulate shape mismatch");
  }
  for (size_t i = 0; i < into.planes.size(); ++i) into.planes[i] += from.planes[i];
}

// Flat view over one parameter (or buffer) array and its gradient slot.
template <typename S>
struct ParamSpan {
  S* value = nullptr;
  S* grad = nullptr;
  std::int64_t count = 0;
  std::string name;
};

template <typename S>
using ParamList = std::vector<ParamSpan<S>>;

template <typename S>
std::int64_t total_param_count(const ParamList<S>& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.count;
  return n;
}

}  // namespace vascan::nn
