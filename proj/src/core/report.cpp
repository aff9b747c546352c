#include "degradelab/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <system_error>

#include "degradelab/error.hpp"

namespace degradelab {

RunSummary summarize_log(const std::string& name, const TrainLog& log) {
  RunSummary s;
  s.name = name;
  s.iterations = static_cast<int>(log.records.size());
  if (log.records.empty()) return s;
  const std::size_t n = log.records.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  int count = 0;
  for (std::size_t i = n - tail; i < n; ++i) {
    const auto& r = log.records[i];
    if (!std::isfinite(r.l_data) || !std::isfinite(r.l_adv) ||
        !std::isfinite(r.l_f)) {
      continue;
    }
    s.l_data += r.l_data;
    s.l_adv += r.l_adv;
    s.l_f += r.l_f;
    ++count;
  }
  if (count > 0) {
    s.l_data /= count;
    s.l_adv /= count;
    s.l_f /= count;
  }
  for (const auto& r : log.records) {
    if (!r.similarity) continue;
    s.final_similarity = r.similarity;
    if (!s.best_similarity || *r.similarity > *s.best_similarity) {
      s.best_similarity = r.similarity;
    }
  }
  return s;
}

namespace {

using Rgb = std::array<double, 3>;

void put(Image& im, int x, int y, const Rgb& color) {
  if (x < 0 || y < 0 || x >= im.width || y >= im.height) return;
  for (int c = 0; c < 3; ++c) im.at(c, y, x) = color[c];
}

void line(Image& im, int x0, int y0, int x1, int y1, const Rgb& color) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    put(im, x0, y0, color);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) { err += dy; x0 += sx; }
    if (e2 <= dx) { err += dx; y0 += sy; }
  }
}

struct Series {
  std::vector<double> x, y;
  Rgb color;
};

void draw_panel(Image& im, int top, int width, int height, const Series& s) {
  constexpr int margin = 12;
  const Rgb axis{96, 96, 96};
  const Rgb grid{225, 225, 225};
  const int x0 = margin, x1 = width - margin;
  const int y0 = top + margin, y1 = top + height - margin;
  for (int g = 1; g < 4; ++g) {
    const int gy = y0 + (y1 - y0) * g / 4;
    line(im, x0, gy, x1, gy, grid);
  }
  line(im, x0, y1, x1, y1, axis);
  line(im, x0, y0, x0, y1, axis);
  if (s.x.empty()) return;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : s.y) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) return;
  if (hi - lo < 1e-12) { lo -= 0.5; hi += 0.5; }
  const double xmin = s.x.front();
  const double xspan = std::max(1.0, s.x.back() - xmin);
  auto px = [&](double x) {
    return x0 + static_cast<int>(std::lround((x - xmin) / xspan * (x1 - x0)));
  };
  auto py = [&](double y) {
    return y1 - static_cast<int>(std::lround((y - lo) / (hi - lo) * (y1 - y0)));
  };
  bool have = false;
  int lx = 0, ly = 0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (!std::isfinite(s.y[i])) { have = false; continue; }
    const int cx = px(s.x[i]), cy = py(s.y[i]);
    if (have) line(im, lx, ly, cx, cy, s.color); else put(im, cx, cy, s.color);
    lx = cx; ly = cy; have = true;
  }
}

}  // namespace

Image plot_log(const TrainLog& log, int panel_width, int panel_height) {
  if (panel_width < 32 || panel_height < 32) throw_invalid("plot panel too small");
  std::vector<Series> panels(3);
  panels[0].color = {31, 119, 180};
  panels[1].color = {214, 39, 40};
  panels[2].color = {44, 160, 44};
  Series sim;
  sim.color = {148, 103, 189};
  for (const auto& r : log.records) {
    const double it = r.iter;
    panels[0].x.push_back(it); panels[0].y.push_back(r.l_data);
    panels[1].x.push_back(it); panels[1].y.push_back(r.l_adv);
    panels[2].x.push_back(it); panels[2].y.push_back(r.l_f);
    if (r.similarity) { sim.x.push_back(it); sim.y.push_back(*r.similarity); }
  }
  if (!sim.x.empty()) panels.push_back(sim);
  Image im(panel_height * static_cast<int>(panels.size()), panel_width,
           ValueDomain::Byte, 255.0);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    draw_panel(im, static_cast<int>(p) * panel_height, panel_width, panel_height,
               panels[p]);
  }
  return im;
}

std::vector<RunSummary> render_report(
    const std::vector<std::filesystem::path>& logs,
    const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  // Runs usually live in their own folder as log.csv, so name them by folder
  // when the file stems collide.
  auto run_name = [&](const std::filesystem::path& p) {
    const std::string stem = p.stem().string();
    int same = 0;
    for (const auto& q : logs) same += q.stem() == p.stem();
    const std::string parent = p.parent_path().filename().string();
    return (same > 1 && !parent.empty()) ? parent + "_" + stem : stem;
  };
  std::vector<RunSummary> out;
  for (const auto& path : logs) {
    const TrainLog log = TrainLog::read_csv(path);
    const std::string name = run_name(path);
    save_png(plot_log(log), out_dir / (name + ".png"));
    out.push_back(summarize_log(name, log));
  }

  auto opt = [](const std::optional<double>& v) {
    std::ostringstream os;
    if (v) os << std::fixed << std::setprecision(4) << *v;
    return os.str();
  };
  std::ofstream csv(out_dir / "summary.csv");
  std::ofstream md(out_dir / "summary.md");
  if (!csv || !md) throw_io("cannot write summary in " + out_dir.string());
  csv << "run,iterations,l_data,l_adv,l_f,final_similarity,best_similarity\n";
  md << "| run | iterations | l_data | l_adv | l_f | final similarity | best similarity |\n"
     << "|---|---|---|---|---|---|---|\n";
  for (const auto& s : out) {
    std::ostringstream nums;
    nums << std::setprecision(6) << s.l_data << ',' << s.l_adv << ',' << s.l_f;
    csv << s.name << ',' << s.iterations << ',' << nums.str() << ','
        << opt(s.final_similarity) << ',' << opt(s.best_similarity) << '\n';
    md << std::setprecision(6) << "| " << s.name << " | " << s.iterations
       << " | " << s.l_data << " | " << s.l_adv << " | " << s.l_f << " | "
       << opt(s.final_similarity) << " | " << opt(s.best_similarity) << " |\n";
  }
  return out;
}

}  // namespace degradelab
