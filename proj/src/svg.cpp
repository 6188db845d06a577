#include "tommy/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tommy/error.hpp"
#include "tommy/eval.hpp"

namespace tommy::svg {

namespace {

const char* kRoomColors[] = {"#b7e4b0", "#b0c8e4", "#e4b0b0", "#e4ddb0",
                             "#d0b0e4"};
const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string f2(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

struct Canvas {
  std::ostringstream body;
  int w, h;
  Canvas(int w_, int h_) : w(w_), h(h_) {}
  void rect(double x, double y, double rw, double rh, const std::string& fill,
            const std::string& stroke = "none") {
    body << "<rect x='" << f2(x) << "' y='" << f2(y) << "' width='" << f2(rw)
         << "' height='" << f2(rh) << "' fill='" << fill << "' stroke='"
         << stroke << "'/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill,
              const std::string& stroke = "none") {
    body << "<circle cx='" << f2(x) << "' cy='" << f2(y) << "' r='" << f2(r)
         << "' fill='" << fill << "' stroke='" << stroke << "'/>\n";
  }
  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke, const std::string& dash = "") {
    body << "<line x1='" << f2(x1) << "' y1='" << f2(y1) << "' x2='" << f2(x2)
         << "' y2='" << f2(y2) << "' stroke='" << stroke << "'";
    if (!dash.empty()) body << " stroke-dasharray='" << dash << "'";
    body << "/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 11) {
    body << "<text x='" << f2(x) << "' y='" << f2(y) << "' font-size='" << size
         << "' font-family='sans-serif'>" << s << "</text>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& stroke) {
    body << "<polyline fill='none' stroke='" << stroke << "' points='";
    for (const auto& [x, y] : pts) body << f2(x) << "," << f2(y) << " ";
    body << "'/>\n";
  }
  std::string str() const {
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w
       << "' height='" << h << "'>\n<rect width='100%' height='100%' "
       << "fill='white'/>\n"
       << body.str() << "</svg>\n";
    return os.str();
  }
};

std::string heat_color(double v) {
  // white -> orange -> dark red
  double t = std::clamp(v, 0.0, 1.0);
  int r = 255;
  int g = static_cast<int>(245 * (1.0 - t * 0.8));
  int b = static_cast<int>(235 * (1.0 - t));
  std::ostringstream os;
  os << "rgb(" << r << "," << g << "," << b << ")";
  return os.str();
}

}  // namespace

std::string render_world(const env::GridWorld& w) {
  const int cell = 24;
  Canvas c(w.width * cell + 20, w.height * cell + 20);
  for (int y = 0; y < w.height; ++y)
    for (int x = 0; x < w.width; ++x) {
      env::Pos p{x, y};
      int room = w.room_of(p);
      std::string fill = "#666666";  // wall
      if (room >= 0)
        fill = room == w.lit_room ? "#fff8d0" : "#d8d8d8";
      c.rect(10 + x * cell, 10 + y * cell, cell - 1, cell - 1, fill);
    }
  static const char* obj_colors[] = {"#cc2222", "#22aa22", "#2244cc",
                                     "#ccaa22"};
  for (const env::Object& o : w.objects) {
    double cx = 10 + o.pos.x * cell + cell / 2.0;
    double cy = 10 + o.pos.y * cell + cell / 2.0;
    std::string fill = obj_colors[o.color % 4];
    switch (o.kind) {
      case env::ObjKind::ball:
        c.circle(cx, cy, cell * 0.3, fill);
        break;
      case env::ObjKind::key:
        c.rect(cx - 3, cy - cell * 0.35, 6, cell * 0.7, fill);
        break;
      case env::ObjKind::box:
        c.rect(cx - cell * 0.32, cy - cell * 0.32, cell * 0.64, cell * 0.64,
               "none", fill);
        break;
      case env::ObjKind::goal:
        c.rect(cx - cell * 0.4, cy - cell * 0.4, cell * 0.8, cell * 0.8,
               "#8f8");
        break;
    }
  }
  // actor as a triangle pointing along its facing
  {
    double cx = 10 + w.actor.x * cell + cell / 2.0;
    double cy = 10 + w.actor.y * cell + cell / 2.0;
    env::Pos fw = env::forward_of(w.facing);
    double tipx = cx + fw.x * cell * 0.35, tipy = cy + fw.y * cell * 0.35;
    env::Pos rt = env::right_of(w.facing);
    c.body << "<polygon points='" << f2(tipx) << "," << f2(tipy) << " "
           << f2(cx - fw.x * cell * 0.25 + rt.x * cell * 0.25) << ","
           << f2(cy - fw.y * cell * 0.25 + rt.y * cell * 0.25) << " "
           << f2(cx - fw.x * cell * 0.25 - rt.x * cell * 0.25) << ","
           << f2(cy - fw.y * cell * 0.25 - rt.y * cell * 0.25)
           << "' fill='#222288'/>\n";
  }
  return c.str();
}

std::string render_memory_attention(const AttentionDump& dump) {
  size_t n_q = dump.weights.size();
  size_t n_s = dump.slots.size();
  if (n_q == 0 || n_s == 0) return Canvas(100, 40).str();
  const double cw = std::max(2.0, 900.0 / static_cast<double>(n_s));
  const double rh = 18.0;
  const double left = 60, top = 30;
  Canvas c(static_cast<int>(left + cw * n_s + 40),
           static_cast<int>(top + rh * (n_q + 1) + 60));
  double wmax = 1e-12;
  for (const auto& row : dump.weights)
    for (double v : row) wmax = std::max(wmax, v);
  // room bands
  for (size_t s = 0; s < n_s; ++s)
    c.rect(left + s * cw, top - 12, cw, 8,
           kRoomColors[dump.slot_rooms[s] % 5]);
  for (size_t m = 0; m < n_q; ++m) {
    for (size_t s = 0; s < n_s; ++s)
      c.rect(left + s * cw, top + m * rh, cw, rh - 1,
             heat_color(dump.weights[m][s] / wmax));
    c.text(6, top + m * rh + rh - 5, "q@" + std::to_string(dump.query_times[m]));
    // peak weight per past trajectory, earliest on ties
    int traj = -1;
    size_t start = 0;
    for (size_t s = 0; s <= n_s; ++s) {
      if (s < n_s && dump.slots[s].traj == traj) continue;
      if (traj >= 0) {
        size_t best = start;
        for (size_t k = start; k < s; ++k)
          if (dump.weights[m][k] > dump.weights[m][best]) best = k;
        c.circle(left + best * cw + cw / 2, top + m * rh + rh / 2, 2.2,
                 "#cc0000");
      }
      if (s < n_s) {
        traj = dump.slots[s].traj;
        start = s;
      }
    }
  }
  // pickup markers, one dashed line per past trajectory
  for (size_t s = 0; s < n_s; ++s) {
    const MemorySlot& slot = dump.slots[s];
    if (slot.t == dump.past_pickup_steps[static_cast<size_t>(slot.traj)])
      c.line(left + s * cw + cw / 2, top - 14, left + s * cw + cw / 2,
             top + rh * n_q, "#000000", "3,2");
  }
  c.text(left, static_cast<double>(top + rh * n_q + 24),
         "memory slots (past trajectories, room-coded); red dots mark peak "
         "weights, dashes mark pickups");
  return c.str();
}

std::string render_current_attention(const AttentionDump& dump) {
  size_t n = dump.select_cos.size();
  if (n == 0) return Canvas(100, 40).str();
  const double cw = std::max(3.0, 900.0 / static_cast<double>(n));
  const double left = 50, top = 20, plot_h = 140;
  Canvas c(static_cast<int>(left + cw * n + 40),
           static_cast<int>(top + plot_h + 80));
  double lo = dump.select_cos[0], hi = dump.select_cos[0];
  for (double v : dump.select_cos) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo < 1e-9) hi = lo + 1e-9;
  auto ypos = [&](double v) {
    return top + plot_h - (v - lo) / (hi - lo) * plot_h;
  };
  for (size_t t = 0; t < n; ++t)
    c.rect(left + t * cw, top + plot_h + 6, cw, 8,
           kRoomColors[dump.cur_rooms[t] % 5]);
  std::vector<std::pair<double, double>> pts;
  for (size_t t = 0; t < n; ++t)
    pts.emplace_back(left + t * cw + cw / 2, ypos(dump.select_cos[t]));
  c.polyline(pts, "#444444");
  // purple: top-M selected events; red: refocused ranks (alpha order)
  std::vector<size_t> order(dump.alpha.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return dump.alpha[a] > dump.alpha[b]; });
  for (size_t m = 0; m < dump.query_times.size(); ++m) {
    double x = left + dump.query_times[m] * cw + cw / 2;
    double y = ypos(dump.select_cos[static_cast<size_t>(dump.query_times[m])]);
    c.circle(x, y, 5.0, "none", "#8833cc");
  }
  for (size_t rank = 0; rank < order.size(); ++rank) {
    size_t m = order[rank];
    double x = left + dump.query_times[m] * cw + cw / 2;
    double y = ypos(dump.select_cos[static_cast<size_t>(dump.query_times[m])]);
    double r = 7.0 + 2.0 * (1.0 - static_cast<double>(rank) /
                                      std::max<size_t>(1, order.size()));
    c.circle(x, y, r, "none", "#cc2222");
    c.text(x - 3, y - r - 2, std::to_string(order.size() - rank), 9);
  }
  if (dump.cur_pickup_step >= 0)
    c.line(left + dump.cur_pickup_step * cw + cw / 2, top,
           left + dump.cur_pickup_step * cw + cw / 2, top + plot_h, "#000000",
           "3,2");
  c.text(left, top + plot_h + 34,
         "cosine(z, h_t) over the current trajectory; purple = top-M, red = "
         "re-focused rank");
  return c.str();
}

namespace {

struct Frame {
  Canvas c;
  double left = 60, top = 20, w = 420, h = 220;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  Frame(double xmin_, double xmax_, double ymin_, double ymax_)
      : c(560, 320), xmin(xmin_), xmax(xmax_), ymin(ymin_), ymax(ymax_) {
    c.line(left, top, left, top + h, "#000");
    c.line(left, top + h, left + w, top + h, "#000");
  }
  double X(double x) const {
    return left + (x - xmin) / (xmax - xmin + 1e-12) * w;
  }
  double Y(double y) const {
    return top + h - (y - ymin) / (ymax - ymin + 1e-12) * h;
  }
};

}  // namespace

std::string render_pref_by_room(const std::vector<MetricsReport>& reports) {
  int max_room = 0;
  for (const MetricsReport& r : reports)
    for (const RoomBucket& b : r.pref_by_room) max_room = std::max(max_room, b.room);
  Frame f(-0.5, max_room + 0.5, 0.0, 1.05);
  f.c.text(f.left, 14, "preference accuracy by room at query time");
  for (int room = 0; room <= max_room; ++room)
    f.c.text(f.X(room) - 4, f.top + f.h + 14, std::to_string(room + 1));
  for (double y = 0; y <= 1.001; y += 0.25)
    f.c.text(f.left - 34, f.Y(y) + 4, f2(y));
  for (size_t i = 0; i < reports.size(); ++i) {
    const std::string color = kSeriesColors[i % 4];
    std::vector<std::pair<double, double>> pts;
    for (const RoomBucket& b : reports[i].pref_by_room) {
      pts.emplace_back(f.X(b.room), f.Y(b.mean));
      f.c.line(f.X(b.room), f.Y(b.mean - b.stdev), f.X(b.room),
               f.Y(b.mean + b.stdev), color);
    }
    f.c.polyline(pts, color);
    f.c.text(f.left + f.w - 120, f.top + 16 + 14 * static_cast<double>(i),
             reports[i].model_id);
    f.c.rect(f.left + f.w - 134, f.top + 8 + 14 * static_cast<double>(i), 10,
             10, color);
  }
  return f.c.str();
}

std::string render_action_groups(const std::vector<MetricsReport>& reports) {
  Frame f(-0.5, kActionGroups - 0.5, 0.0, 1.05);
  f.c.text(f.left, 14, "next-action accuracy by action group");
  for (int g = 0; g < kActionGroups; ++g)
    f.c.text(f.X(g) - 20, f.top + f.h + 14, action_group_name(g));
  double bw = 24;
  for (size_t i = 0; i < reports.size(); ++i) {
    const std::string color = kSeriesColors[i % 4];
    for (const GroupBucket& b : reports[i].action_groups) {
      double x = f.X(b.group) + (static_cast<double>(i) -
                                 static_cast<double>(reports.size()) / 2.0) *
                                    bw;
      f.c.rect(x, f.Y(b.mean), bw - 3, f.Y(0) - f.Y(b.mean), color);
      f.c.line(x + bw / 2, f.Y(b.mean - b.stdev), x + bw / 2,
               f.Y(b.mean + b.stdev), "#333");
    }
    f.c.text(f.left + f.w - 120, f.top + 16 + 14 * static_cast<double>(i),
             reports[i].model_id);
    f.c.rect(f.left + f.w - 134, f.top + 8 + 14 * static_cast<double>(i), 10,
             10, color);
  }
  return f.c.str();
}

std::string render_sr_jsd(const std::vector<MetricsReport>& reports) {
  double ymax = 0.0;
  for (const MetricsReport& r : reports)
    for (const GammaBucket& b : r.sr_jsd)
      ymax = std::max(ymax, b.mean + b.stdev);
  ymax = std::max(ymax, 0.1) * 1.1;
  int n_g = reports.empty() ? 3 : static_cast<int>(reports[0].sr_jsd.size());
  Frame f(-0.5, n_g - 0.5, 0.0, ymax);
  f.c.text(f.left, 14, "successor-representation JSD (nats, lower is better)");
  for (int g = 0; g < n_g; ++g)
    f.c.text(f.X(g) - 22, f.top + f.h + 14,
             reports.empty() ? std::to_string(g)
                             : "g=" + f2(reports[0].sr_jsd[static_cast<size_t>(g)].gamma));
  double bw = 24;
  for (size_t i = 0; i < reports.size(); ++i) {
    const std::string color = kSeriesColors[i % 4];
    for (size_t g = 0; g < reports[i].sr_jsd.size(); ++g) {
      const GammaBucket& b = reports[i].sr_jsd[g];
      double x = f.X(static_cast<double>(g)) +
                 (static_cast<double>(i) -
                  static_cast<double>(reports.size()) / 2.0) *
                     bw;
      f.c.rect(x, f.Y(b.mean), bw - 3, f.Y(0) - f.Y(b.mean), color);
      f.c.line(x + bw / 2, f.Y(std::max(0.0, b.mean - b.stdev)), x + bw / 2,
               f.Y(b.mean + b.stdev), "#333");
    }
    f.c.text(f.left + f.w - 120, f.top + 16 + 14 * static_cast<double>(i),
             reports[i].model_id);
    f.c.rect(f.left + f.w - 134, f.top + 8 + 14 * static_cast<double>(i), 10,
             10, color);
  }
  return f.c.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

}  // namespace tommy::svg
