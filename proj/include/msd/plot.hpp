// Copyright 2026 The msd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MSD_PLOT_HPP
#define MSD_PLOT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "msd/geometry.hpp"
#include "msd/metrics.hpp"
#include "msd/raster.hpp"
#include "msd/worldsim.hpp"

namespace msd::plot {

struct Color {
  uint8_t r = 0, g = 0, b = 0;
};

constexpr Color kBlack{0, 0, 0};
constexpr Color kWhite{255, 255, 255};
constexpr Color kBlue{70, 120, 255};
constexpr Color kRed{235, 60, 50};
constexpr Color kGray{90, 90, 90};
constexpr Color kDimYellow{150, 140, 60};

class Image {
 public:
  Image(int w, int h, Color fill = {20, 20, 24}) : w_(w), h_(h) {
    rgb_.assign(static_cast<size_t>(w) * h * 3, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) set(x, y, fill);
    }
  }

  int width() const { return w_; }
  int height() const { return h_; }
  const std::vector<uint8_t>& rgb() const { return rgb_; }

  void set(int x, int y, Color c) {
    if (x < 0 || x >= w_ || y < 0 || y >= h_) return;
    const size_t i = (static_cast<size_t>(y) * w_ + x) * 3;
    rgb_[i] = c.r;
    rgb_[i + 1] = c.g;
    rgb_[i + 2] = c.b;
  }

  void blend(int x, int y, Color c, double a) {
    if (x < 0 || x >= w_ || y < 0 || y >= h_) return;
    const size_t i = (static_cast<size_t>(y) * w_ + x) * 3;
    rgb_[i] = static_cast<uint8_t>(rgb_[i] * (1 - a) + c.r * a);
    rgb_[i + 1] = static_cast<uint8_t>(rgb_[i + 1] * (1 - a) + c.g * a);
    rgb_[i + 2] = static_cast<uint8_t>(rgb_[i + 2] * (1 - a) + c.b * a);
  }

  void line(int x0, int y0, int x1, int y1, Color c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void fill_rect(int x0, int y0, int w, int h, Color c) {
    for (int y = y0; y < y0 + h; ++y) {
      for (int x = x0; x < x0 + w; ++x) set(x, y, c);
    }
  }

 private:
  int w_, h_;
  std::vector<uint8_t> rgb_;
};

// ---------------------------------------------------------------------------
// 3x5 bitmap font (digits, uppercase, a few symbols)

namespace detail {

inline const std::map<char, std::array<uint8_t, 5>>& font() {
  static const std::map<char, std::array<uint8_t, 5>> glyphs = {
      {'0', {0b111, 0b101, 0b101, 0b101, 0b111}},
      {'1', {0b010, 0b110, 0b010, 0b010, 0b111}},
      {'2', {0b111, 0b001, 0b111, 0b100, 0b111}},
      {'3', {0b111, 0b001, 0b111, 0b001, 0b111}},
      {'4', {0b101, 0b101, 0b111, 0b001, 0b001}},
      {'5', {0b111, 0b100, 0b111, 0b001, 0b111}},
      {'6', {0b111, 0b100, 0b111, 0b101, 0b111}},
      {'7', {0b111, 0b001, 0b001, 0b010, 0b010}},
      {'8', {0b111, 0b101, 0b111, 0b101, 0b111}},
      {'9', {0b111, 0b101, 0b111, 0b001, 0b111}},
      {'.', {0b000, 0b000, 0b000, 0b000, 0b010}},
      {',', {0b000, 0b000, 0b000, 0b010, 0b100}},
      {'-', {0b000, 0b000, 0b111, 0b000, 0b000}},
      {'+', {0b000, 0b010, 0b111, 0b010, 0b000}},
      {'=', {0b000, 0b111, 0b000, 0b111, 0b000}},
      {'/', {0b001, 0b001, 0b010, 0b100, 0b100}},
      {'%', {0b101, 0b001, 0b010, 0b100, 0b101}},
      {'[', {0b011, 0b010, 0b010, 0b010, 0b011}},
      {']', {0b110, 0b010, 0b010, 0b010, 0b110}},
      {'(', {0b001, 0b010, 0b010, 0b010, 0b001}},
      {')', {0b100, 0b010, 0b010, 0b010, 0b100}},
      {':', {0b000, 0b010, 0b000, 0b010, 0b000}},
      {' ', {0b000, 0b000, 0b000, 0b000, 0b000}},
      {'A', {0b010, 0b101, 0b111, 0b101, 0b101}},
      {'B', {0b110, 0b101, 0b110, 0b101, 0b110}},
      {'C', {0b011, 0b100, 0b100, 0b100, 0b011}},
      {'D', {0b110, 0b101, 0b101, 0b101, 0b110}},
      {'E', {0b111, 0b100, 0b111, 0b100, 0b111}},
      {'F', {0b111, 0b100, 0b111, 0b100, 0b100}},
      {'G', {0b011, 0b100, 0b101, 0b101, 0b011}},
      {'H', {0b101, 0b101, 0b111, 0b101, 0b101}},
      {'I', {0b111, 0b010, 0b010, 0b010, 0b111}},
      {'J', {0b001, 0b001, 0b001, 0b101, 0b010}},
      {'K', {0b101, 0b110, 0b100, 0b110, 0b101}},
      {'L', {0b100, 0b100, 0b100, 0b100, 0b111}},
      {'M', {0b101, 0b111, 0b111, 0b101, 0b101}},
      {'N', {0b101, 0b111, 0b111, 0b111, 0b101}},
      {'O', {0b010, 0b101, 0b101, 0b101, 0b010}},
      {'P', {0b110, 0b101, 0b110, 0b100, 0b100}},
      {'Q', {0b010, 0b101, 0b101, 0b110, 0b011}},
      {'R', {0b110, 0b101, 0b110, 0b110, 0b101}},
      {'S', {0b011, 0b100, 0b010, 0b001, 0b110}},
      {'T', {0b111, 0b010, 0b010, 0b010, 0b010}},
      {'U', {0b101, 0b101, 0b101, 0b101, 0b111}},
      {'V', {0b101, 0b101, 0b101, 0b101, 0b010}},
      {'W', {0b101, 0b101, 0b111, 0b111, 0b101}},
      {'X', {0b101, 0b101, 0b010, 0b101, 0b101}},
      {'Y', {0b101, 0b101, 0b010, 0b010, 0b010}},
      {'Z', {0b111, 0b001, 0b010, 0b100, 0b111}},
  };
  return glyphs;
}

}  // namespace detail

/// Draws uppercase text with the built-in 3x5 font; unknown characters are
/// skipped. Returns the x position after the last glyph.
inline int draw_text(Image& img, int x, int y, const std::string& text, Color c,
                     int scale = 1) {
  const auto& glyphs = detail::font();
  for (char raw : text) {
    const char ch = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
    const auto it = glyphs.find(ch);
    if (it != glyphs.end()) {
      for (int row = 0; row < 5; ++row) {
        for (int col = 0; col < 3; ++col) {
          if (it->second[static_cast<size_t>(row)] & (0b100 >> col)) {
            img.fill_rect(x + col * scale, y + row * scale, scale, scale, c);
          }
        }
      }
    }
    x += 4 * scale;
  }
  return x;
}

// ---------------------------------------------------------------------------
// PNG writer (stored-deflate blocks; no external compression dependency)

namespace detail {

inline uint32_t crc32(const uint8_t* data, size_t len, uint32_t crc = 0xffffffffu) {
  static uint32_t table[256];
  static bool init = false;
  if (!init) {
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    init = true;
  }
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
  return crc;
}

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

inline void put_chunk(std::vector<uint8_t>& out, const char* type,
                      const std::vector<uint8_t>& payload) {
  put_u32(out, static_cast<uint32_t>(payload.size()));
  std::vector<uint8_t> body(type, type + 4);
  body.insert(body.end(), payload.begin(), payload.end());
  out.insert(out.end(), body.begin(), body.end());
  put_u32(out, crc32(body.data(), body.size()) ^ 0xffffffffu);
}

}  // namespace detail

inline void write_png(const std::filesystem::path& path, const Image& img) {
  std::vector<uint8_t> raw;  // filter byte 0 per scanline
  raw.reserve(static_cast<size_t>(img.height()) * (1 + 3 * img.width()));
  for (int y = 0; y < img.height(); ++y) {
    raw.push_back(0);
    const uint8_t* row = img.rgb().data() + static_cast<size_t>(y) * img.width() * 3;
    raw.insert(raw.end(), row, row + static_cast<size_t>(img.width()) * 3);
  }

  // zlib stream with stored (uncompressed) deflate blocks
  std::vector<uint8_t> z;
  z.push_back(0x78);
  z.push_back(0x01);
  size_t off = 0;
  while (off < raw.size()) {
    const size_t n = std::min<size_t>(65535, raw.size() - off);
    const bool last = off + n == raw.size();
    z.push_back(last ? 1 : 0);
    z.push_back(static_cast<uint8_t>(n & 0xff));
    z.push_back(static_cast<uint8_t>(n >> 8));
    z.push_back(static_cast<uint8_t>(~n & 0xff));
    z.push_back(static_cast<uint8_t>((~n >> 8) & 0xff));
    z.insert(z.end(), raw.begin() + static_cast<long>(off),
             raw.begin() + static_cast<long>(off + n));
    off += n;
  }
  uint32_t a = 1, b = 0;
  for (uint8_t v : raw) {
    a = (a + v) % 65521;
    b = (b + a) % 65521;
  }
  detail::put_u32(z, (b << 16) | a);

  std::vector<uint8_t> png = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<uint8_t> ihdr;
  detail::put_u32(ihdr, static_cast<uint32_t>(img.width()));
  detail::put_u32(ihdr, static_cast<uint32_t>(img.height()));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace
  detail::put_chunk(png, "IHDR", ihdr);
  detail::put_chunk(png, "IDAT", z);
  detail::put_chunk(png, "IEND", {});

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(png.data()),
            static_cast<std::streamsize>(png.size()));
}

// ---------------------------------------------------------------------------
// BEV scene panels

struct BevPanelStyle {
  int pixels_per_meter = 6;
  int header_px = 12;
};

/// Renders one BEV panel: drivable area, lane centerlines, current-sweep
/// LiDAR occupancy, ground-truth boxes and futures in blue, detections and
/// predicted waypoints in red.
inline Image render_bev_panel(const sim::SensorFrame& frame,
                              const std::vector<metrics::Detection>& detections,
                              const raster::GridSpec& grid, const std::string& title,
                              const BevPanelStyle& style = {}) {
  const int s = style.pixels_per_meter;
  const int w = grid.cols() * static_cast<int>(grid.cell_m * s);
  const int h = grid.rows() * static_cast<int>(grid.cell_m * s);
  Image img(w, h + style.header_px);

  const auto to_px = [&](const geom::Vec2& p, int& x, int& y) {
    x = static_cast<int>(std::lround((p.x + 0.5 * grid.length_m) * s));
    y = style.header_px + h - 1 -
        static_cast<int>(std::lround((p.y + 0.5 * grid.width_m) * s));
  };

  // drivable area fill
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const geom::Vec2 p{static_cast<double>(x) / s - 0.5 * grid.length_m,
                         (h - 1.0 - y) / s - 0.5 * grid.width_m};
      if (geom::point_in_polygon(p, frame.map.drivable_area)) {
        img.set(x, y + style.header_px, {38, 38, 44});
      }
    }
  }
  for (const auto& lane : frame.map.lane_centerlines) {
    for (size_t i = 0; i + 1 < lane.size(); ++i) {
      int x0, y0, x1, y1;
      to_px(lane[i], x0, y0);
      to_px(lane[i + 1], x1, y1);
      img.line(x0, y0, x1, y1, kDimYellow);
    }
  }

  // current LiDAR sweep
  if (!frame.lidar_sweeps.empty()) {
    for (const auto& p : frame.lidar_sweeps.back().points) {
      int x, y;
      to_px({p.x, p.y}, x, y);
      img.set(x, y, {210, 210, 210});
    }
  }

  const auto draw_box = [&](const geom::OrientedBox& box, Color c) {
    const auto corners = box.corners();
    for (int e = 0; e < 4; ++e) {
      int x0, y0, x1, y1;
      to_px(corners[static_cast<size_t>(e)], x0, y0);
      to_px(corners[static_cast<size_t>((e + 1) % 4)], x1, y1);
      img.line(x0, y0, x1, y1, c);
    }
  };

  for (const auto& lab : frame.labels) {
    draw_box(lab.box, kBlue);
    int px, py;
    to_px(lab.box.center, px, py);
    for (const auto& wp : lab.future) {
      int x, y;
      to_px(wp, x, y);
      img.line(px, py, x, y, Color{50, 80, 160});
      px = x;
      py = y;
    }
  }
  for (const auto& det : detections) {
    draw_box(det.box, kRed);
    int px, py;
    to_px(det.box.center, px, py);
    for (const auto& wp : det.waypoints) {
      int x, y;
      to_px(wp, x, y);
      img.line(px, py, x, y, Color{160, 60, 50});
      px = x;
      py = y;
    }
  }

  // SDV marker
  int cx, cy;
  to_px({0, 0}, cx, cy);
  img.fill_rect(cx - 2, cy - 2, 5, 5, kWhite);

  draw_text(img, 4, 3, title, kWhite);
  return img;
}

inline Image hstack(const std::vector<Image>& panels, int gap = 2) {
  int w = gap * (static_cast<int>(panels.size()) - 1);
  int h = 0;
  for (const auto& p : panels) {
    w += p.width();
    h = std::max(h, p.height());
  }
  Image out(w, h, kBlack);
  int x0 = 0;
  for (const auto& p : panels) {
    for (int y = 0; y < p.height(); ++y) {
      for (int x = 0; x < p.width(); ++x) {
        const size_t i = (static_cast<size_t>(y) * p.width() + x) * 3;
        out.set(x0 + x, y, {p.rgb()[i], p.rgb()[i + 1], p.rgb()[i + 2]});
      }
    }
    x0 += p.width() + gap;
  }
  return out;
}

// ---------------------------------------------------------------------------
// line plots

struct Series {
  std::string name;
  std::vector<double> x, y;
  Color color;
};

/// Minimal line plot with axes, tick labels and a legend.
inline Image line_plot(const std::vector<Series>& series, const std::string& title,
                       int width = 520, int height = 360) {
  Image img(width, height, {250, 250, 250});
  const int ml = 52, mr = 14, mt = 26, mb = 34;
  const int pw = width - ml - mr, ph = height - mt - mb;

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (double v : s.x) {
      xmin = std::min(xmin, v);
      xmax = std::max(xmax, v);
    }
    for (double v : s.y) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
  }
  if (ymin > ymax) {
    ymin = 0;
    ymax = 1;
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  const double pad = std::max(1e-12, (ymax - ymin) * 0.08);
  ymin -= pad;
  ymax += pad;

  const auto px = [&](double x) {
    return ml + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * pw));
  };
  const auto py = [&](double y) {
    return mt + ph - static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * ph));
  };

  img.line(ml, mt, ml, mt + ph, kBlack);
  img.line(ml, mt + ph, ml + pw, mt + ph, kBlack);
  char buf[32];
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    const int ypix = py(y);
    img.line(ml - 3, ypix, ml, ypix, kBlack);
    std::snprintf(buf, sizeof(buf), "%.3g", y);
    draw_text(img, 4, ypix - 2, buf, kBlack);
  }
  for (int i = 0; i <= 4; ++i) {
    const double x = xmin + (xmax - xmin) * i / 4.0;
    const int xpix = px(x);
    img.line(xpix, mt + ph, xpix, mt + ph + 3, kBlack);
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    draw_text(img, xpix - 6, mt + ph + 8, buf, kBlack);
  }

  int legend_x = ml + 8;
  for (const auto& s : series) {
    for (size_t i = 0; i + 1 < s.x.size(); ++i) {
      img.line(px(s.x[i]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i + 1]), s.color);
      img.fill_rect(px(s.x[i]) - 1, py(s.y[i]) - 1, 3, 3, s.color);
    }
    if (!s.x.empty()) {
      img.fill_rect(px(s.x.back()) - 1, py(s.y.back()) - 1, 3, 3, s.color);
    }
    img.fill_rect(legend_x, mt - 14, 8, 8, s.color);
    legend_x = draw_text(img, legend_x + 11, mt - 13, s.name, kBlack) + 12;
  }
  draw_text(img, ml + 8, 4, title, kBlack);
  return img;
}

}  // namespace msd::plot

#endif  // MSD_PLOT_HPP
