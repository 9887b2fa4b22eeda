#include "vascan/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace vascan {

HsvPixel rgb_to_hsv(float r, float g, float b) {
  const float mx = std::max({r, g, b});
  const float mn = std::min({r, g, b});
  const float delta = mx - mn;
  HsvPixel out{0.0f, 0.0f, mx * 255.0f};
  if (mx > 0.0f) out.s = delta / mx * 255.0f;
  if (delta > 0.0f) {
    float h;
    if (mx == r) {
      h = 60.0f * std::fmod((g - b) / delta, 6.0f);
    } else if (mx == g) {
      h = 60.0f * ((b - r) / delta + 2.0f);
    } else {
      h = 60.0f * ((r - g) / delta + 4.0f);
    }
    if (h < 0.0f) h += 360.0f;
    out.h = h;
  }
  return out;
}

static void check_rgb(const RgbImage& frame) {
  if (frame.r.size() == 0) throw std::invalid_argument("empty colour frame");
  if (frame.g.rows() != frame.r.rows() || frame.g.cols() != frame.r.cols() ||
      frame.b.rows() != frame.r.rows() || frame.b.cols() != frame.r.cols()) {
    throw std::invalid_argument("colour channel dimensions disagree");
  }
  const auto in_range = [](const PlaneT<float>& p) {
    return p.isFinite().all() && (p >= 0.0f).all() && (p <= 1.0f).all();
  };
  if (!in_range(frame.r) || !in_range(frame.g) || !in_range(frame.b)) {
    throw std::invalid_argument("colour intensities outside [0, 1]");
  }
}

ImageGrid extract_doppler_mask(const RgbImage& frame,
                               const DopplerThresholds& th) {
  check_rgb(frame);
  ImageGrid mask = ImageGrid::zeros(frame.height(), frame.width(),
                                    frame.spacing_mm);
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      const HsvPixel p = rgb_to_hsv(frame.r(y, x), frame.g(y, x), frame.b(y, x));
      if (p.s >= th.s_min && p.v >= th.v_min) mask.data(y, x) = 1.0f;
    }
  }
  return mask;
}

ImageGrid resample(const ImageGrid& img, int target_w, int target_h,
                   Resample mode) {
  if (img.empty()) throw std::invalid_argument("resample of empty image");
  if (target_w <= 0 || target_h <= 0) {
    throw std::invalid_argument("resample target must be positive");
  }
  const int sw = img.width();
  const int sh = img.height();
  ImageGrid out;
  out.data.resize(target_h, target_w);
  out.spacing_mm = static_cast<float>(
      static_cast<double>(img.spacing_mm) * sh / target_h);

  const double sx = static_cast<double>(sw) / target_w;
  const double sy = static_cast<double>(sh) / target_h;
  for (int y = 0; y < target_h; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < target_w; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      if (mode == Resample::kNearest) {
        const int iy = std::clamp(static_cast<int>(std::floor(src_y + 0.5)), 0,
                                  sh - 1);
        const int ix = std::clamp(static_cast<int>(std::floor(src_x + 0.5)), 0,
                                  sw - 1);
        out.data(y, x) = img.data(iy, ix);
      } else {
        const double cy = std::clamp(src_y, 0.0, static_cast<double>(sh - 1));
        const double cx = std::clamp(src_x, 0.0, static_cast<double>(sw - 1));
        const int y0 = static_cast<int>(std::floor(cy));
        const int x0 = static_cast<int>(std::floor(cx));
        const int y1 = std::min(y0 + 1, sh - 1);
        const int x1 = std::min(x0 + 1, sw - 1);
        const double fy = cy - y0;
        const double fx = cx - x0;
        const double v =
            (1.0 - fy) * ((1.0 - fx) * img.data(y0, x0) + fx * img.data(y0, x1)) +
            fy * ((1.0 - fx) * img.data(y1, x0) + fx * img.data(y1, x1));
        out.data(y, x) = static_cast<float>(v);
      }
    }
  }
  return out;
}

DuplexFrame resample_frame(const DuplexFrame& frame, int target_w,
                           int target_h) {
  DuplexFrame out = frame;
  out.bmode = resample(frame.bmode, target_w, target_h, Resample::kBilinear);
  out.doppler = resample(frame.doppler, target_w, target_h, Resample::kNearest);
  return out;
}

void validate(const DuplexFrame& frame) {
  if (frame.bmode.empty()) throw std::invalid_argument("empty b-mode grid");
  if (frame.doppler.height() != frame.bmode.height() ||
      frame.doppler.width() != frame.bmode.width()) {
    throw std::invalid_argument("doppler/b-mode dimensions disagree");
  }
  if (frame.bmode.spacing_mm <= 0.0f ||
      frame.doppler.spacing_mm != frame.bmode.spacing_mm) {
    throw std::invalid_argument("inconsistent pixel spacing");
  }
  if (!frame.bmode.data.isFinite().all() ||
      (frame.bmode.data < 0.0f).any() || (frame.bmode.data > 1.0f).any()) {
    throw std::invalid_argument("b-mode intensities outside [0, 1]");
  }
  if (((frame.doppler.data != 0.0f) && (frame.doppler.data != 1.0f)).any()) {
    throw std::invalid_argument("doppler mask is not binary");
  }
  if (!std::isfinite(frame.timestamp_s) || frame.timestamp_s < 0.0) {
    throw std::invalid_argument("bad frame timestamp");
  }
  validate(frame.pose);
}

void save_pgm(const std::string& path, const ImageGrid& img) {
  if (img.empty()) throw std::invalid_argument("cannot save empty image");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<size_t>(img.width()));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const float v = std::clamp(img.data(y, x), 0.0f, 1.0f);
      row[static_cast<size_t>(x)] =
          static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw std::runtime_error("short write: " + path);
}

ImageGrid load_pgm(const std::string& path, float spacing_mm) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::string magic;
  f >> magic;
  if (magic != "P5") throw std::runtime_error("not a binary PGM: " + path);
  const auto next_int = [&f, &path]() {
    // Skips whitespace and '#' comment lines between header fields.
    for (;;) {
      const int c = f.peek();
      if (c == std::char_traits<char>::eof()) {
        break;
      } else if (c == '#') {
        std::string line;
        std::getline(f, line);
      } else if (std::isspace(c)) {
        f.get();
      } else {
        break;
      }
    }
    int value = 0;
    if (!(f >> value)) throw std::runtime_error("truncated PGM header: " + path);
    return value;
  };
  const int w = next_int();
  const int h = next_int();
  const int maxval = next_int();
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw std::runtime_error("unsupported PGM header: " + path);
  }
  f.get();  // single whitespace before raster
  ImageGrid img = ImageGrid::zeros(h, w, spacing_mm);
  std::vector<std::uint8_t> row(static_cast<size_t>(w));
  for (int y = 0; y < h; ++y) {
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size()));
    if (!f) throw std::runtime_error("truncated PGM raster: " + path);
    for (int x = 0; x < w; ++x) {
      img.data(y, x) = static_cast<float>(row[static_cast<size_t>(x)]) / 255.0f;
    }
  }
  return img;
}

}  // namespace vascan
