#include "vascan/augment.hpp"

#include <cmath>
#include <stdexcept>

#include "vascan/common.hpp"

namespace vascan {

AugmentParams sample_augment(std::mt19937_64& rng) {
  AugmentParams p;
  p.shift_h_frac = uniform(rng, -0.01, 0.01);
  p.shift_v_frac = uniform(rng, -0.01, 0.01);
  p.rot_deg = uniform(rng, -15.0, 15.0);
  p.scale = uniform(rng, 0.8, 1.2);
  p.hflip = uniform01(rng) < 0.5;
  return p;
}

ImageGrid warp_image(const ImageGrid& img, const AugmentParams& params,
                     Resample mode) {
  if (img.empty()) throw std::invalid_argument("cannot warp an empty image");
  if (!(params.scale > 0.0)) {
    throw std::invalid_argument("augmentation scale must be positive");
  }
  const int h = img.height(), w = img.width();
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double tx = params.shift_h_frac * w;
  const double ty = params.shift_v_frac * h;
  const double a = deg_to_rad(params.rot_deg);
  const double cos_a = std::cos(a), sin_a = std::sin(a);
  ImageGrid out = ImageGrid::zeros(h, w, img.spacing_mm);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      // Invert shift, rotation, scale, flip to find the source sample.
      double x = c - cx - tx;
      double y = r - cy - ty;
      const double rx = cos_a * x + sin_a * y;
      const double ry = -sin_a * x + cos_a * y;
      x = rx / params.scale;
      y = ry / params.scale;
      if (params.hflip) x = -x;
      const double sx = x + cx;
      const double sy = y + cy;
      if (mode == Resample::kNearest) {
        const long ix = std::lround(sx);
        const long iy = std::lround(sy);
        if (ix >= 0 && ix < w && iy >= 0 && iy < h) {
          out.data(r, c) = img.data(iy, ix);
        }
      } else {
        const int x0 = static_cast<int>(std::floor(sx));
        const int y0 = static_cast<int>(std::floor(sy));
        const double fx = sx - x0, fy = sy - y0;
        double acc = 0.0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int xs = x0 + dx, ys = y0 + dy;
            if (xs < 0 || xs >= w || ys < 0 || ys >= h) continue;
            const double wgt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
            acc += wgt * img.data(ys, xs);
          }
        }
        out.data(r, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

void augment_sequence(std::vector<ImageGrid>& bmode,
                      std::vector<ImageGrid>& doppler,
                      std::vector<ImageGrid>& masks,
                      const AugmentParams& params) {
  if (bmode.size() != doppler.size() || bmode.size() != masks.size()) {
    throw std::invalid_argument("sequence channel lengths disagree");
  }
  for (size_t i = 0; i < bmode.size(); ++i) {
    bmode[i] = warp_image(bmode[i], params, Resample::kBilinear);
    doppler[i] = warp_image(doppler[i], params, Resample::kNearest);
    masks[i] = warp_image(masks[i], params, Resample::kNearest);
  }
}

}  // namespace vascan
