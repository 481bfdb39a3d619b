#include "icbf/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace icbf {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

}  // namespace

void write_csv(const TrajectoryLog& log, const std::string& path) {
  std::string out;
  out.reserve(log.records.size() * 220 + 128);
  out +=
      "t,px,py,vx,vy,phat_x,phat_y,ud_x,ud_y,u_x,u_y,lam1,lam2,h_raw,"
      "h_smooth_or_cross,h_r,psi,step_ms\n";
  for (const auto& r : log.records) {
    out += fmt(r.t);
    for (const double v : {r.x.p.x(), r.x.p.y(), r.x.v.x(), r.x.v.y(), r.p_hat.x(),
                           r.p_hat.y(), r.u_d.x(), r.u_d.y(), r.u.x(), r.u.y(), r.lam1,
                           r.lam2, r.h_raw, r.h_main, r.h_r, r.psi, r.step_ms}) {
      out += ',';
      out += fmt(v);
    }
    out += '\n';
  }
  write_atomic(path, out);
}

void write_summary_json(const TrajectoryLog& log, const RunManifest& manifest,
                        const std::string& path) {
  nlohmann::json j;
  j["scenario"] = manifest.scenario;
  j["config_digest"] = manifest.config_digest;
  j["tool_version"] = manifest.tool_version;
  j["baseline"] = log.baseline;
  j["records"] = log.records.size();
  const RunSummary& s = log.summary;
  j["min_h_r"] = s.min_h_r;
  j["min_lam"] = s.min_lam;
  j["max_lam"] = s.max_lam;
  j["max_u_norm"] = s.max_u_norm;
  j["max_correction"] = s.max_correction;
  j["min_audit"] = s.min_audit;
  j["min_gap"] = s.min_gap;
  j["mean_step_ms"] = s.mean_step_ms;
  if (s.violation_time) j["violation_time"] = *s.violation_time;
  j["aborted"] = s.aborted;
  if (s.aborted) {
    j["violation_step"] = s.violation_step;
    j["abort_reason"] = s.abort_reason;
  }
  write_atomic(path, j.dump(2) + "\n");
}

FieldBounds plot_bounds(const TrajectoryLog& log, const ScenarioConfig& cfg) {
  double x0 = cfg.x0.p.x(), x1 = cfg.x0.p.x();
  double y0 = cfg.x0.p.y(), y1 = cfg.x0.p.y();
  const auto grow = [&](const Vec2& p) {
    x0 = std::min(x0, p.x());
    x1 = std::max(x1, p.x());
    y0 = std::min(y0, p.y());
    y1 = std::max(y1, p.y());
  };
  for (const auto& b : cfg.beacons.positions) grow(b);
  grow(cfg.goal.p);
  for (const auto& r : log.records) grow(r.x.p);
  const double span = std::max({x1 - x0, y1 - y0, 1.0});
  const double pad = 0.2 * span;
  // Square the viewport around the content.
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  const double half = 0.5 * span + pad;
  return {cx - half, cx + half, cy - half, cy + half};
}

namespace {

struct WorldMap {
  FieldBounds b;
  double w, h;
  double px(double x) const { return (x - b.x0) / (b.x1 - b.x0) * w; }
  double py(double y) const { return h - (y - b.y0) / (b.y1 - b.y0) * h; }
};

// Marching-squares segments of the level set `level` on the cell-centered grid.
void contour_segments(const FieldGrid& g, double level, std::ostringstream& svg,
                      const WorldMap& map, const char* stroke) {
  const auto val = [&](int i, int j) { return g.lam_min[g.idx(i, j)]; };
  const auto interp = [&](double xa, double ya, double va, double xb, double yb,
                          double vb, double& x, double& y) {
    const double t = (level - va) / (vb - va);
    x = xa + t * (xb - xa);
    y = ya + t * (yb - ya);
  };
  svg << "<path fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.6\" d=\"";
  for (int j = 0; j + 1 < g.ny; ++j) {
    for (int i = 0; i + 1 < g.nx; ++i) {
      const double v00 = val(i, j), v10 = val(i + 1, j);
      const double v01 = val(i, j + 1), v11 = val(i + 1, j + 1);
      if (std::isnan(v00) || std::isnan(v10) || std::isnan(v01) || std::isnan(v11))
        continue;
      const double x0 = g.cell_x(i), x1c = g.cell_x(i + 1);
      const double y0 = g.cell_y(j), y1c = g.cell_y(j + 1);
      int mask = 0;
      if (v00 >= level) mask |= 1;
      if (v10 >= level) mask |= 2;
      if (v11 >= level) mask |= 4;
      if (v01 >= level) mask |= 8;
      if (mask == 0 || mask == 15) continue;

      double ex[4], ey[4];
      int ne = 0;
      if ((mask & 1) != ((mask >> 1) & 1))
        interp(x0, y0, v00, x1c, y0, v10, ex[ne], ey[ne]), ++ne;
      if (((mask >> 1) & 1) != ((mask >> 2) & 1))
        interp(x1c, y0, v10, x1c, y1c, v11, ex[ne], ey[ne]), ++ne;
      if (((mask >> 2) & 1) != ((mask >> 3) & 1))
        interp(x1c, y1c, v11, x0, y1c, v01, ex[ne], ey[ne]), ++ne;
      if (((mask >> 3) & 1) != (mask & 1))
        interp(x0, y1c, v01, x0, y0, v00, ex[ne], ey[ne]), ++ne;
      for (int e = 0; e + 1 < ne; e += 2) {
        svg << "M" << fmt(map.px(ex[e])) << " " << fmt(map.py(ey[e])) << "L"
            << fmt(map.px(ex[e + 1])) << " " << fmt(map.py(ey[e + 1]));
      }
    }
  }
  svg << "\"/>\n";
}

}  // namespace

void write_svg_trajectory(const TrajectoryLog& log, const ScenarioConfig& cfg,
                          const FieldGrid& grid, const std::string& path) {
  const WorldMap map{grid.bounds, 640.0, 640.0};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
         "viewBox=\"0 0 640 640\">\n";
  svg << "<rect width=\"640\" height=\"640\" fill=\"white\"/>\n";

  // Heat map of lambda_min, normalized over finite cells.
  double vmax = 0.0;
  for (const double v : grid.lam_min)
    if (std::isfinite(v)) vmax = std::max(vmax, v);
  if (vmax <= 0.0) vmax = 1.0;
  const double cw = map.w / grid.nx, ch = map.h / grid.ny;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const double v = grid.lam_min[grid.idx(i, j)];
      if (std::isnan(v)) continue;
      const int shade = 255 - static_cast<int>(200.0 * std::sqrt(v / vmax));
      svg << "<rect x=\"" << fmt(i * cw) << "\" y=\"" << fmt(map.h - (j + 1) * ch)
          << "\" width=\"" << fmt(cw + 0.5) << "\" height=\"" << fmt(ch + 0.5)
          << "\" fill=\"rgb(" << shade << "," << shade << "," << shade << ")\"/>\n";
    }
  }

  contour_segments(grid, cfg.barrier.lambda_s, svg, map, "#d62728");

  for (const auto& b : cfg.beacons.positions) {
    svg << "<circle cx=\"" << fmt(map.px(b.x())) << "\" cy=\"" << fmt(map.py(b.y()))
        << "\" r=\"5\" fill=\"#1f1f1f\"/>\n";
  }

  // Trajectory decimated to at most ~2000 points.
  const size_t stride = std::max<size_t>(1, log.records.size() / 2000);
  svg << "<polyline fill=\"none\" stroke=\"" << (log.baseline ? "#7f7f7f" : "#1f77b4")
      << "\" stroke-width=\"2\"" << (log.baseline ? " stroke-dasharray=\"6 4\"" : "")
      << " points=\"";
  for (size_t k = 0; k < log.records.size(); k += stride) {
    const auto& p = log.records[k].x.p;
    svg << fmt(map.px(p.x())) << "," << fmt(map.py(p.y())) << " ";
  }
  if (!log.records.empty()) {
    const auto& p = log.records.back().x.p;
    svg << fmt(map.px(p.x())) << "," << fmt(map.py(p.y()));
  }
  svg << "\"/>\n";

  const Vec2 s0 = cfg.x0.p, gp = cfg.goal.p;
  svg << "<circle cx=\"" << fmt(map.px(s0.x())) << "\" cy=\"" << fmt(map.py(s0.y()))
      << "\" r=\"6\" fill=\"#1f77b4\"/>\n";
  svg << "<path stroke=\"#2ca02c\" stroke-width=\"3\" d=\"M" << fmt(map.px(gp.x()) - 7)
      << " " << fmt(map.py(gp.y()) - 7) << "L" << fmt(map.px(gp.x()) + 7) << " "
      << fmt(map.py(gp.y()) + 7) << "M" << fmt(map.px(gp.x()) - 7) << " "
      << fmt(map.py(gp.y()) + 7) << "L" << fmt(map.px(gp.x()) + 7) << " "
      << fmt(map.py(gp.y()) - 7) << "\"/>\n";

  svg << "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
      << cfg.name << (log.baseline ? " (baseline)" : "") << "</text>\n";
  svg << "</svg>\n";
  write_atomic(path, svg.str());
}

void write_svg_barriers(const TrajectoryLog& log, const ScenarioConfig& cfg,
                        const std::string& path) {
  const double w = 720.0, h = 360.0, ml = 60.0, mb = 30.0, mt = 16.0, mr = 12.0;
  double lo = 0.0, hi = 0.0;
  for (const auto& r : log.records) {
    for (const double v : {r.h_raw, r.h_main, r.h_r}) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi <= lo) hi = lo + 1.0;
  const double t1 = log.records.empty() ? 1.0 : log.records.back().t;
  const auto X = [&](double t) { return ml + t / std::max(t1, 1e-12) * (w - ml - mr); };
  const auto Y = [&](double v) {
    return (h - mb) - (v - lo) / (hi - lo) * (h - mb - mt);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  svg << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << fmt(Y(0.0)) << "\" x2=\"" << (w - mr)
      << "\" y2=\"" << fmt(Y(0.0)) << "\" stroke=\"#aaaaaa\" stroke-width=\"1\"/>\n";

  struct Series {
    const char* color;
    const char* label;
    double StepRecord::* member;
  };
  const Series series[] = {
      {"#9467bd", "h_raw", &StepRecord::h_raw},
      {"#ff7f0e", cfg.barrier.method == BarrierMethod::Analytic ? "h_smooth" : "h_gap",
       &StepRecord::h_main},
      {"#1f77b4", "h_r", &StepRecord::h_r},
  };
  const size_t stride = std::max<size_t>(1, log.records.size() / 2400);
  double lx = ml + 8;
  for (const auto& sr : series) {
    svg << "<polyline fill=\"none\" stroke=\"" << sr.color
        << "\" stroke-width=\"1.5\" points=\"";
    for (size_t k = 0; k < log.records.size(); k += stride) {
      const double v = log.records[k].*(sr.member);
      if (!std::isfinite(v)) continue;
      svg << fmt(X(log.records[k].t)) << "," << fmt(Y(v)) << " ";
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << fmt(lx) << "\" y=\"" << (mt + 2) << "\" fill=\"" << sr.color
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << sr.label << "</text>\n";
    lx += 90;
  }
  svg << "<text x=\"" << (w / 2 - 10) << "\" y=\"" << (h - 8)
      << "\" font-family=\"sans-serif\" font-size=\"12\">t [s]</text>\n";
  svg << "</svg>\n";
  write_atomic(path, svg.str());
}

}  // namespace icbf
