#include "pwacert/svg.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace pwacert::svg {

std::vector<Segment> marching_squares(const std::function<double(const Vec&)>& field,
                                      const Vec& lo, const Vec& hi, int resolution) {
  if (lo.size() != 2) throw std::invalid_argument("marching_squares: 2D only");
  const int nx = resolution, ny = resolution;
  Mat grid(nx + 1, ny + 1);
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j) {
      Vec p(2);
      p << lo(0) + (hi(0) - lo(0)) * i / nx, lo(1) + (hi(1) - lo(1)) * j / ny;
      grid(i, j) = field(p);
    }

  std::vector<Segment> segs;
  auto world = [&](double i, double j) {
    Vec p(2);
    p << lo(0) + (hi(0) - lo(0)) * i / nx, lo(1) + (hi(1) - lo(1)) * j / ny;
    return p;
  };
  auto interp = [](double a, double b) { return a / (a - b); };

  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      double bl = grid(i, j), br = grid(i + 1, j), tl = grid(i, j + 1), tr = grid(i + 1, j + 1);
      if (!std::isfinite(bl) || !std::isfinite(br) || !std::isfinite(tl) || !std::isfinite(tr))
        continue;
      int c = (bl >= 0) | ((br >= 0) << 1) | ((tr >= 0) << 2) | ((tl >= 0) << 3);
      if (c == 0 || c == 15) continue;
      // edge crossing points
      Vec bottom = world(i + interp(bl, br), j);
      Vec top = world(i + interp(tl, tr), j + 1);
      Vec left = world(i, j + interp(bl, tl));
      Vec right = world(i + 1, j + interp(br, tr));
      switch (c) {
        case 1: case 14: segs.push_back({left, bottom}); break;
        case 2: case 13: segs.push_back({bottom, right}); break;
        case 3: case 12: segs.push_back({left, right}); break;
        case 4: case 11: segs.push_back({top, right}); break;
        case 6: case 9: segs.push_back({bottom, top}); break;
        case 7: case 8: segs.push_back({left, top}); break;
        case 5:
          segs.push_back({left, top});
          segs.push_back({bottom, right});
          break;
        case 10:
          segs.push_back({left, bottom});
          segs.push_back({top, right});
          break;
        default: break;
      }
    }
  return segs;
}

void write_svg(const std::string& path, const std::vector<LevelSetLayer>& layers, const Vec& lo,
               const Vec& hi, int pixels) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  const double w = hi(0) - lo(0), h = hi(1) - lo(1);
  const double scale = pixels / std::max(w, h);
  const int W = static_cast<int>(std::lround(w * scale));
  const int H = static_cast<int>(std::lround(h * scale));
  auto px = [&](const Vec& p) {
    return std::make_pair((p(0) - lo(0)) * scale, (hi(1) - p(1)) * scale);
  };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  int y = 16;
  for (const auto& layer : layers) {
    os << "<g stroke=\"" << layer.color << "\" stroke-width=\"" << layer.stroke_width
       << "\" fill=\"none\">\n";
    for (const auto& [a, b] : layer.segments) {
      auto [x1, y1] = px(a);
      auto [x2, y2] = px(b);
      os << "<polyline points=\"" << x1 << "," << y1 << " " << x2 << "," << y2 << "\"/>\n";
    }
    os << "</g>\n";
    if (!layer.label.empty()) {
      os << "<text x=\"8\" y=\"" << y << "\" fill=\"" << layer.color
         << "\" font-size=\"12\" font-family=\"monospace\">" << layer.label << "</text>\n";
      y += 16;
    }
  }
  os << "</svg>\n";
}

}  // namespace pwacert::svg
