#pragma once

#include <Eigen/Dense>
#include <string>

#include "vascan/pose.hpp"

namespace vascan {

template <typename S>
using PlaneT = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A single-channel image on a square-pixel grid. rows() is the depth axis
// (v), cols() the lateral axis (u); spacing is millimetres per pixel.
template <typename S>
struct ImageGridT {
  PlaneT<S> data;
  S spacing_mm = S(1);

  int height() const { return static_cast<int>(data.rows()); }
  int width() const { return static_cast<int>(data.cols()); }
  bool empty() const { return data.size() == 0; }

  static ImageGridT zeros(int height, int width, S spacing_mm) {
    ImageGridT g;
    g.data = PlaneT<S>::Zero(height, width);
    g.spacing_mm = spacing_mm;
    return g;
  }
};

using ImageGrid = ImageGridT<float>;

// Interleaved colour frame as three planes, values in [0, 1].
struct RgbImage {
  PlaneT<float> r, g, b;
  float spacing_mm = 1.0f;

  int height() const { return static_cast<int>(r.rows()); }
  int width() const { return static_cast<int>(r.cols()); }
};

struct DuplexFrame {
  ImageGrid bmode;    // grayscale, [0, 1]
  ImageGrid doppler;  // binary flow mask, {0, 1}
  double timestamp_s = 0.0;
  ProbePose pose;
  int frame_index = 0;
};

inline double px_to_mm(double px, double spacing_mm) { return px * spacing_mm; }
inline double mm_to_px(double mm, double spacing_mm) { return mm / spacing_mm; }

// Hue in degrees [0, 360), saturation and value on the byte scale [0, 255].
struct HsvPixel {
  float h, s, v;
};

HsvPixel rgb_to_hsv(float r, float g, float b);

// Colour-flow pixels are the saturated, non-dark ones: s >= s_min and
// v >= v_min on the byte scale. Gray pixels have s == 0 and never pass.
struct DopplerThresholds {
  float s_min = 100.0f;
  float v_min = 20.0f;
};

ImageGrid extract_doppler_mask(const RgbImage& frame,
                               const DopplerThresholds& th = {});

enum class Resample { kBilinear, kNearest };

// Resizes to the target grid and rescales spacing by the height ratio.
// kNearest preserves binarity and must be used for masks.
ImageGrid resample(const ImageGrid& img, int target_w, int target_h,
                   Resample mode);

DuplexFrame resample_frame(const DuplexFrame& frame, int target_w,
                           int target_h);

// Throws std::invalid_argument on dimension mismatches, non-binary doppler
// values, non-finite or negative timestamps, or an inconsistent pose.
void validate(const DuplexFrame& frame);

// 8-bit binary PGM round trip. Masks are stored as {0, 255} and reload
// bit-exactly; intensity images quantise to the byte grid on save.
void save_pgm(const std::string& path, const ImageGrid& img);
ImageGrid load_pgm(const std::string& path, float spacing_mm);

}  // namespace vascan
