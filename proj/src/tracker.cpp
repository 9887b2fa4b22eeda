#include "vascan/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace vascan {

namespace {

bool circle_contains(const MinCircle& c, const Eigen::Vector2d& p) {
  return (p - c.center).norm() <= c.radius + 1e-7 * (1.0 + c.radius);
}

MinCircle circle_from_two(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return {0.5 * (a + b), 0.5 * (a - b).norm()};
}

MinCircle circle_from_three(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                            const Eigen::Vector2d& c) {
  const Eigen::Vector2d ab = b - a;
  const Eigen::Vector2d ac = c - a;
  const double d = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
  if (std::abs(d) < 1e-12) {
    // Collinear: widest pairwise circle covers all three.
    MinCircle best = circle_from_two(a, b);
    for (const MinCircle& cand : {circle_from_two(a, c), circle_from_two(b, c)}) {
      if (cand.radius > best.radius) best = cand;
    }
    return best;
  }
  const double ab2 = ab.squaredNorm();
  const double ac2 = ac.squaredNorm();
  const Eigen::Vector2d centre =
      a + Eigen::Vector2d(ac.y() * ab2 - ab.y() * ac2,
                          ab.x() * ac2 - ac.x() * ab2) / d;
  return {centre, (centre - a).norm()};
}

}  // namespace

MinCircle min_enclosing_circle(const std::vector<Eigen::Vector2d>& points) {
  if (points.empty()) {
    throw std::invalid_argument("min_enclosing_circle of empty point set");
  }
  // Welzl's incremental scheme on a deterministically shuffled copy.
  std::vector<Eigen::Vector2d> pts = points;
  std::mt19937_64 rng(0x5eedc19c1eULL ^ pts.size());
  for (size_t i = pts.size(); i > 1; --i) {
    std::swap(pts[i - 1], pts[rng() % i]);
  }
  MinCircle c{pts[0], 0.0};
  for (size_t i = 1; i < pts.size(); ++i) {
    if (circle_contains(c, pts[i])) continue;
    c = {pts[i], 0.0};
    for (size_t j = 0; j < i; ++j) {
      if (circle_contains(c, pts[j])) continue;
      c = circle_from_two(pts[i], pts[j]);
      for (size_t k = 0; k < j; ++k) {
        if (!circle_contains(c, pts[k])) {
          c = circle_from_three(pts[i], pts[j], pts[k]);
        }
      }
    }
  }
  return c;
}

std::vector<FlowContour> extract_centers(const ImageGrid& doppler,
                                         const TrackerParams& params) {
  if (doppler.empty()) throw std::invalid_argument("empty doppler mask");
  const int h = doppler.height();
  const int w = doppler.width();
  std::vector<char> seen(static_cast<size_t>(h) * w, 0);
  std::vector<FlowContour> out;
  std::vector<int> stack;
  std::vector<Eigen::Vector2d> component;

  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      const size_t idx0 = static_cast<size_t>(y0) * w + x0;
      if (seen[idx0] || doppler.data(y0, x0) == 0.0f) continue;
      // Flood fill with 8-connectivity from the first unvisited pixel in
      // scanline order, which fixes the output ordering.
      component.clear();
      stack.clear();
      stack.push_back(static_cast<int>(idx0));
      seen[idx0] = 1;
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int y = idx / w;
        const int x = idx % w;
        component.emplace_back(static_cast<double>(x), static_cast<double>(y));
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = y + dy;
            const int nx = x + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            const size_t nidx = static_cast<size_t>(ny) * w + nx;
            if (!seen[nidx] && doppler.data(ny, nx) != 0.0f) {
              seen[nidx] = 1;
              stack.push_back(static_cast<int>(nidx));
            }
          }
        }
      }
      const MinCircle mec = min_enclosing_circle(component);
      FlowContour contour;
      contour.center_px = mec.center;
      contour.radius_px = mec.radius;
      contour.radius_mm = px_to_mm(mec.radius, doppler.spacing_mm);
      contour.pixel_count = static_cast<int>(component.size());
      if (contour.radius_mm > params.min_radius_mm) out.push_back(contour);
    }
  }
  return out;
}

std::vector<double> center_distances(const Eigen::Vector2d& previous_px,
                                     const std::vector<FlowContour>& centers) {
  std::vector<double> d(centers.size());
  for (size_t i = 0; i < centers.size(); ++i) {
    d[i] = (centers[i].center_px - previous_px).norm();
  }
  return d;
}

void update_tracker(TrackerState& state, const std::vector<FlowContour>& centers,
                    const TrackerParams& params) {
  std::vector<char> claimed(centers.size(), 0);
  for (TrackObject& obj : state.objects) {
    const Eigen::Vector2d prev = obj.history.back().center_px;
    bool matched = false;
    if (!centers.empty()) {
      const std::vector<double> d = center_distances(prev, centers);
      const size_t best = static_cast<size_t>(
          std::min_element(d.begin(), d.end()) - d.begin());
      if (d[best] <= params.max_match_dist_px) {
        obj.history.push_back({centers[best].center_px, CenterLabel::kNew});
        claimed[best] = 1;
        matched = true;
      }
    }
    if (!matched) obj.history.push_back({prev, CenterLabel::kCopied});
  }
  for (size_t i = 0; i < centers.size(); ++i) {
    if (claimed[i]) continue;
    TrackObject obj;
    obj.id = state.next_id++;
    obj.created_at_frame = state.frame_count;
    obj.history.push_back({centers[i].center_px, CenterLabel::kNew});
    state.objects.push_back(std::move(obj));
  }
  ++state.frame_count;
}

}  // namespace vascan
