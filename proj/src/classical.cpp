#include "vascan/classical.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "vascan/common.hpp"

namespace vascan {
namespace {

struct Window {
  int r0, r1, c0, c1;  // half-open row/col range
};

Window window_around(const Eigen::Vector2d& center_px, double half,
                     int height, int width) {
  const int cx = static_cast<int>(std::lround(center_px.x()));
  const int cy = static_cast<int>(std::lround(center_px.y()));
  const int h = std::max(4, static_cast<int>(std::ceil(half)));
  Window w;
  w.r0 = std::max(0, cy - h);
  w.r1 = std::min(height, cy + h + 1);
  w.c0 = std::max(0, cx - h);
  w.c1 = std::min(width, cx + h + 1);
  return w;
}

// Mean intensity over the one-pixel border of the window.
double border_mean(const PlaneT<float>& img, const Window& w) {
  double sum = 0.0;
  int count = 0;
  for (int c = w.c0; c < w.c1; ++c) {
    sum += img(w.r0, c) + img(w.r1 - 1, c);
    count += 2;
  }
  for (int r = w.r0 + 1; r < w.r1 - 1; ++r) {
    sum += img(r, w.c0) + img(r, w.c1 - 1);
    count += 2;
  }
  return count > 0 ? sum / count : 0.0;
}

// Darkest pixel within a small disk around the proposal centre; the
// Doppler blob can be a little off the lumen's intensity minimum.
Eigen::Vector2i seed_pixel(const PlaneT<float>& img, const Window& w,
                           const Eigen::Vector2d& center_px) {
  const int cx = static_cast<int>(std::lround(center_px.x()));
  const int cy = static_cast<int>(std::lround(center_px.y()));
  Eigen::Vector2i best(-1, -1);
  float best_val = std::numeric_limits<float>::infinity();
  for (int r = std::max(w.r0, cy - 2); r < std::min(w.r1, cy + 3); ++r) {
    for (int c = std::max(w.c0, cx - 2); c < std::min(w.c1, cx + 3); ++c) {
      if (img(r, c) < best_val) {
        best_val = img(r, c);
        best = {r, c};
      }
    }
  }
  return best;
}

std::vector<Eigen::Vector2i> flood_dark(const PlaneT<float>& img,
                                        const Window& w,
                                        const Eigen::Vector2i& seed,
                                        float threshold, size_t cap) {
  std::vector<Eigen::Vector2i> region;
  PlaneT<float> visited = PlaneT<float>::Zero(w.r1 - w.r0, w.c1 - w.c0);
  std::vector<Eigen::Vector2i> stack{seed};
  visited(seed.x() - w.r0, seed.y() - w.c0) = 1.0f;
  while (!stack.empty()) {
    const Eigen::Vector2i p = stack.back();
    stack.pop_back();
    region.push_back(p);
    if (region.size() > cap) return {};  // runaway flood, reject
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int r = p.x() + dr, c = p.y() + dc;
        if (r < w.r0 || r >= w.r1 || c < w.c0 || c >= w.c1) continue;
        if (visited(r - w.r0, c - w.c0) != 0.0f) continue;
        if (img(r, c) >= threshold) continue;
        visited(r - w.r0, c - w.c0) = 1.0f;
        stack.push_back({r, c});
      }
    }
  }
  return region;
}

void paint_moment_ellipse(const std::vector<Eigen::Vector2i>& region,
                          PlaneT<float>& out) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : region) mean += p.cast<double>();
  mean /= static_cast<double>(region.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : region) {
    const Eigen::Vector2d d = p.cast<double>() - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(region.size());
  // A filled ellipse with semi-axes (a, b) has axis variances (a^2/4,
  // b^2/4), so the fitted boundary is the quadratic form at level 4.
  if (cov.determinant() < 1e-9) {
    for (const auto& p : region) out(p.x(), p.y()) = 1.0f;
    return;
  }
  const Eigen::Matrix2d inv = cov.inverse();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const double reach = 2.0 * std::sqrt(es.eigenvalues().maxCoeff()) + 1.0;
  const int r0 = std::max(0, static_cast<int>(std::floor(mean.x() - reach)));
  const int r1 = std::min<int>(out.rows(),
                               static_cast<int>(std::ceil(mean.x() + reach)) + 1);
  const int c0 = std::max(0, static_cast<int>(std::floor(mean.y() - reach)));
  const int c1 = std::min<int>(out.cols(),
                               static_cast<int>(std::ceil(mean.y() + reach)) + 1);
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) {
      const Eigen::Vector2d d(r - mean.x(), c - mean.y());
      if (d.dot(inv * d) <= 4.0) out(r, c) = 1.0f;
    }
  }
}

}  // namespace

ImageGrid classical_segment(const DuplexFrame& frame,
                            const ClassicalParams& params) {
  const ImageGrid& bm = frame.bmode;
  if (bm.empty() || bm.height() != frame.doppler.height() ||
      bm.width() != frame.doppler.width()) {
    throw std::invalid_argument("bmode and doppler dimensions disagree");
  }
  ImageGrid out = ImageGrid::zeros(bm.height(), bm.width(), bm.spacing_mm);
  const std::vector<FlowContour> proposals =
      extract_centers(frame.doppler, params.proposal);
  for (const FlowContour& p : proposals) {
    const double half = params.window_radii *
                        std::max(p.radius_px,
                                 mm_to_px(params.proposal.min_radius_mm,
                                          bm.spacing_mm));
    const Window w = window_around(p.center_px, half, bm.height(), bm.width());
    if (w.r1 - w.r0 < 3 || w.c1 - w.c0 < 3) continue;
    const Eigen::Vector2i seed = seed_pixel(bm.data, w, p.center_px);
    if (seed.x() < 0) continue;
    const double surround = border_mean(bm.data, w);
    const double lumen = bm.data(seed.x(), seed.y());
    if (surround - lumen < 0.02) continue;  // no contrast to threshold on
    const float cut = static_cast<float>(
        lumen + params.threshold_blend * (surround - lumen));
    const double cap_r = params.max_region_radii *
                         std::max<double>(p.radius_px, half / params.window_radii);
    const size_t cap =
        static_cast<size_t>(std::ceil(kPi * cap_r * cap_r)) + 16;
    const std::vector<Eigen::Vector2i> region =
        flood_dark(bm.data, w, seed, cut, cap);
    if (region.size() < 4) continue;
    paint_moment_ellipse(region, out.data);
  }
  return out;
}

}  // namespace vascan
