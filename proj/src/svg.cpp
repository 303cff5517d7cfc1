#include <array>
#include "rgd/svg.hpp"

#include <cmath>
#include <fstream>

#include "rgd/errors.hpp"

namespace rgd {

namespace {

constexpr int kW = 640;
constexpr int kH = 640;
constexpr int kPad = 48;

struct Mapper {
  double lo_x, hi_x, lo_y, hi_y;
  double px(double x) const { return kPad + (x - lo_x) / (hi_x - lo_x) * (kW - 2 * kPad); }
  double py(double y) const { return kH - kPad - (y - lo_y) / (hi_y - lo_y) * (kH - 2 * kPad); }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void open_svg(std::ofstream& out) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kW
      << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH
      << "\" fill=\"white\"/>\n";
}

void axes(std::ofstream& out) {
  out << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kW - 2 * kPad
      << "\" height=\"" << kH - 2 * kPad
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
}

// marching squares on one cell; appends 0..2 segments
void cell_segments(double x0, double x1, double y0, double y1, double f00, double f10,
                   double f01, double f11, double level,
                   std::vector<std::array<double, 4>>& segs) {
  const int idx = (f00 > level ? 1 : 0) | (f10 > level ? 2 : 0) | (f11 > level ? 4 : 0) |
                  (f01 > level ? 8 : 0);
  if (idx == 0 || idx == 15) return;
  auto lerp = [&](double a, double b, double fa, double fb) {
    const double t = (level - fa) / (fb - fa);
    return a + t * (b - a);
  };
  // edge midpoints with linear interpolation
  const double bx = lerp(x0, x1, f00, f10), by = y0;              // bottom
  const double tx = lerp(x0, x1, f01, f11), ty = y1;              // top
  const double lx = x0, ly = lerp(y0, y1, f00, f01);              // left
  const double rx = x1, ry = lerp(y0, y1, f10, f11);              // right
  auto add = [&](double ax, double ay, double cx, double cy) {
    segs.push_back({ax, ay, cx, cy});
  };
  switch (idx) {
    case 1: case 14: add(lx, ly, bx, by); break;
    case 2: case 13: add(bx, by, rx, ry); break;
    case 3: case 12: add(lx, ly, rx, ry); break;
    case 4: case 11: add(tx, ty, rx, ry); break;
    case 5: add(lx, ly, tx, ty); add(bx, by, rx, ry); break;
    case 6: case 9: add(bx, by, tx, ty); break;
    case 7: case 8: add(lx, ly, tx, ty); break;
    case 10: add(lx, ly, bx, by); add(tx, ty, rx, ry); break;
    default: break;
  }
}

}  // namespace

void write_design_scatter_svg(const std::filesystem::path& path,
                              const std::function<double(double, double)>& field, double lo,
                              double hi, const std::vector<double>& levels,
                              const std::vector<ScatterGroup>& groups) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open svg for writing: " + path.string());
  const Mapper m{lo, hi, lo, hi};

  const int n = 160;
  MatrixXd grid(n + 1, n + 1);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      grid(i, j) = field(lo + (hi - lo) * i / n, lo + (hi - lo) * j / n);

  open_svg(out);
  axes(out);
  for (std::size_t li = 0; li < levels.size(); ++li) {
    std::vector<std::array<double, 4>> segs;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x0 = lo + (hi - lo) * i / n, x1 = lo + (hi - lo) * (i + 1) / n;
        const double y0 = lo + (hi - lo) * j / n, y1 = lo + (hi - lo) * (j + 1) / n;
        cell_segments(x0, x1, y0, y1, grid(i, j), grid(i + 1, j), grid(i, j + 1),
                      grid(i + 1, j + 1), levels[li], segs);
      }
    out << "<g stroke=\"#b0b8c4\" stroke-width=\"1\" opacity=\"0.8\">\n";
    for (const auto& s : segs)
      out << "<line x1=\"" << num(m.px(s[0])) << "\" y1=\"" << num(m.py(s[1])) << "\" x2=\""
          << num(m.px(s[2])) << "\" y2=\"" << num(m.py(s[3])) << "\"/>\n";
    out << "</g>\n";
  }

  double ly = kPad + 16;
  for (const auto& g : groups) {
    out << "<g fill=\"" << g.color << "\" opacity=\"0.75\">\n";
    for (const auto& [x, y] : g.points) {
      if (x < lo || x > hi || y < lo || y > hi) continue;
      out << "<circle cx=\"" << num(m.px(x)) << "\" cy=\"" << num(m.py(y))
          << "\" r=\"3\"/>\n";
    }
    out << "</g>\n";
    out << "<circle cx=\"" << kW - kPad - 130 << "\" cy=\"" << ly - 4 << "\" r=\"4\" fill=\""
        << g.color << "\"/>\n"
        << "<text x=\"" << kW - kPad - 120 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"13\">" << g.label << "</text>\n";
    ly += 18;
  }
  out << "</svg>\n";
  if (!out) throw ConfigError("svg write failed: " + path.string());
}

void write_trajectory_svg(const std::filesystem::path& path, const MatrixXd& ratios,
                          const std::string& y_label) {
  if (ratios.rows() == 0 || ratios.cols() == 0) throw ConfigError("no trajectories to plot");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open svg for writing: " + path.string());

  double lo = ratios.minCoeff(), hi = ratios.maxCoeff();
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double span = hi - lo;
  lo -= 0.05 * span;
  hi += 0.05 * span;
  const Mapper m{0.0, static_cast<double>(ratios.cols() - 1), lo, hi};

  open_svg(out);
  axes(out);
  auto polyline = [&](const VectorXd& row, const std::string& style) {
    out << "<polyline fill=\"none\" " << style << " points=\"";
    for (Eigen::Index j = 0; j < row.size(); ++j)
      out << num(m.px(static_cast<double>(j))) << "," << num(m.py(row[j])) << " ";
    out << "\"/>\n";
  };
  const Eigen::Index show = std::min<Eigen::Index>(ratios.rows(), 24);
  for (Eigen::Index i = 0; i < show; ++i)
    polyline(ratios.row(i), "stroke=\"#9ecae1\" stroke-width=\"1\" opacity=\"0.6\"");
  const VectorXd mean = ratios.colwise().mean();
  polyline(mean, "stroke=\"#08519c\" stroke-width=\"2.5\"");
  out << "<text x=\"" << kPad << "\" y=\"" << kPad - 12
      << "\" font-family=\"sans-serif\" font-size=\"14\">" << y_label
      << " across reverse steps</text>\n";
  out << "</svg>\n";
  if (!out) throw ConfigError("svg write failed: " + path.string());
}

}  // namespace rgd
