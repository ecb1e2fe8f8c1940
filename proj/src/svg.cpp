#include "ttevolve/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ttevolve/csv.hpp"

namespace ttv {
namespace {

constexpr double kW = 720, kH = 480;
constexpr double kL = 72, kR = 24, kT = 40, kB = 52;  // margins
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

// round tick positions: roughly `want` multiples of 1/2/5 * 10^k in [lo, hi]
std::vector<double> ticks(double lo, double hi, int want = 5) {
  const double span = hi - lo;
  double step = std::pow(10.0, std::floor(std::log10(span / want)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (span / (step * m) <= want + 1) {
      step *= m;
      break;
    }
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step)
    out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  return out;
}

}  // namespace

void write_svg_plot(const std::string& path, const PlotSpec& spec) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  auto usable = [&](double vx, double vy) {
    return std::isfinite(vx) && std::isfinite(vy) && (!spec.logy || vy > 0);
  };
  long long npts = 0;
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size()) throw StructuralError("plot series length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      ++npts;
      xlo = std::min(xlo, s.x[i]), xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]), yhi = std::max(yhi, s.y[i]);
    }
  }
  if (npts == 0) throw StructuralError("plot has no finite points");
  if (spec.has_href && !spec.logy) ylo = std::min(ylo, spec.href), yhi = std::max(yhi, spec.href);
  if (spec.has_href && spec.logy && spec.href > 0)
    ylo = std::min(ylo, spec.href), yhi = std::max(yhi, spec.href);
  if (xhi <= xlo) xlo -= 0.5, xhi += 0.5;
  if (spec.logy) {
    ylo = std::log10(ylo), yhi = std::log10(yhi);
  }
  if (yhi <= ylo) ylo -= 0.5, yhi += 0.5;
  const double ypad = 0.06 * (yhi - ylo);
  ylo -= ypad, yhi += ypad;

  auto px = [&](double v) { return kL + (v - xlo) / (xhi - xlo) * (kW - kL - kR); };
  auto py = [&](double v) {
    if (spec.logy) v = std::log10(v);
    return kH - kB - (v - ylo) / (yhi - ylo) * (kH - kT - kB);
  };

  std::ofstream os(path, std::ios::binary);
  if (!os) throw StructuralError("cannot write '" + path + "'");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  os << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"15\">"
     << esc(spec.title) << "</text>\n";

  // axes, ticks, grid
  os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (double t : ticks(xlo, xhi)) {
    const double X = px(t);
    os << "<line x1=\"" << fmt(X) << "\" y1=\"" << kT << "\" x2=\"" << fmt(X) << "\" y2=\""
       << kH - kB << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << fmt(X) << "\" y=\"" << kH - kB + 16 << "\" text-anchor=\"middle\">"
       << fmt(t, "%.6g") << "</text>\n";
  }
  for (double t : ticks(ylo, yhi)) {
    const double Y = kH - kB - (t - ylo) / (yhi - ylo) * (kH - kT - kB);
    os << "<line x1=\"" << kL << "\" y1=\"" << fmt(Y) << "\" x2=\"" << kW - kR << "\" y2=\""
       << fmt(Y) << "\" stroke=\"#e0e0e0\"/>\n";
    const double label = spec.logy ? std::pow(10.0, t) : t;
    os << "<text x=\"" << kL - 6 << "\" y=\"" << fmt(Y + 4) << "\" text-anchor=\"end\">"
       << fmt(label, spec.logy ? "%.1e" : "%.6g") << "</text>\n";
  }
  os << "</g>\n";
  os << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR << "\" height=\""
     << kH - kT - kB << "\" fill=\"none\" stroke=\"#333\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 14
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
     << esc(spec.xlabel) << "</text>\n";
  os << "<text x=\"18\" y=\"" << kH / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        "transform=\"rotate(-90 18 "
     << kH / 2 << ")\">" << esc(spec.ylabel) << "</text>\n";

  if (spec.has_href && (!spec.logy || spec.href > 0)) {
    const double Y = py(spec.href);
    os << "<line x1=\"" << kL << "\" y1=\"" << fmt(Y) << "\" x2=\"" << kW - kR << "\" y2=\""
       << fmt(Y) << "\" stroke=\"#555\" stroke-dasharray=\"7,4\"/>\n";
  }

  int ci = 0;
  double ly = kT + 16;
  for (const auto& s : spec.series) {
    const char* color = kColors[ci % 6];
    std::string d;
    bool pen_down = false;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) {
        pen_down = false;
        continue;
      }
      d += (pen_down ? " L" : " M") + fmt(px(s.x[i])) + " " + fmt(py(s.y[i]));
      pen_down = true;
    }
    if (!d.empty()) {
      os << "<path d=\"" << d.substr(1) << "\" fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"1.6\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
      if (npts == 1)
        os << "<circle cx=\"" << fmt(px(s.x[0])) << "\" cy=\"" << fmt(py(s.y[0]))
           << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    if (!s.label.empty()) {
      os << "<line x1=\"" << kW - kR - 130 << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
         << kW - kR - 106 << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color
         << "\" stroke-width=\"1.6\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
      os << "<text x=\"" << kW - kR - 100 << "\" y=\"" << fmt(ly)
         << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(s.label) << "</text>\n";
      ly += 16;
    }
    ++ci;
  }
  os << "</svg>\n";
}

void plot_csv(const std::string& csv_path, const std::string& out_path) {
  const CsvTable t = CsvTable::read(csv_path);
  if (t.rows.empty()) throw StructuralError("trace '" + csv_path + "' has no rows");

  double href = 0;
  bool has_href = false;
  for (const auto& c : t.comments) {
    const auto pos = c.find("reference_energy=");
    if (pos != std::string::npos) {
      href = std::stod(c.substr(pos + 17));
      has_href = true;
    }
  }

  PlotSpec spec;
  auto column = [&](int ci) {
    std::vector<double> v(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) v[r] = t.number(r, ci);
    return v;
  };

  const int it = t.column_index("iteration");
  const int esym = t.column_index("E_symmetric");
  const int grid = t.column_index("grid");
  if (esym >= 0 && it >= 0) {
    spec.title = "energy trace";
    spec.xlabel = "iteration";
    spec.ylabel = "energy";
    spec.series.push_back({"symmetric", column(it), column(esym), false});
    const int emix = t.column_index("E_mixed");
    if (emix >= 0) spec.series.push_back({"mixed", column(it), column(emix), false});
    spec.has_href = has_href;
    spec.href = href;
  } else if (grid >= 0) {
    const int ref = t.column_index("reference");
    const int den = t.column_index("density");
    if (ref < 0 || den < 0) throw StructuralError("marginal table needs reference and density");
    spec.title = "marginal";
    spec.xlabel = "x";
    spec.ylabel = "density";
    spec.series.push_back({"reference", column(grid), column(ref), true});
    spec.series.push_back({"estimate", column(grid), column(den), false});
  } else if (it >= 0) {
    bool any = false;
    for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
      if (t.columns[ci].rfind("err_mode", 0) != 0) continue;
      spec.series.push_back({t.columns[ci], column(it), column(static_cast<int>(ci)), false});
      any = true;
    }
    if (!any) throw StructuralError("trace '" + csv_path + "' has no plottable columns");
    spec.title = "marginal error trace";
    spec.xlabel = "iteration";
    spec.ylabel = "relative error";
    spec.logy = true;
  } else {
    throw StructuralError("trace '" + csv_path + "' has no plottable columns");
  }
  write_svg_plot(out_path, spec);
}

}  // namespace ttv
