#pragma once

// SVG Gantt chart of a schedule map: one lane per core, one box per entry.

#include <algorithm>
#include <set>
#include <sstream>
#include <string>

#include "dagsched/model.hpp"

namespace dagsched {

struct GanttStyle {
  double px_per_tick = 12.0;
  double lane_height = 28.0;
  double margin_left = 64.0;
  double margin_top = 24.0;
  double margin_bottom = 36.0;
};

inline std::string render_gantt(const ScheduleMap& mp, const TaskSet& ts, const GanttStyle& style = {}) {
  static constexpr const char* palette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                            "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  const Tick horizon = std::max<Tick>(ts.hyperperiod, [&] {
    Tick t = 0;
    for (const auto& lane : mp.cores)
      for (const auto& e : lane) t = std::max(t, e.finish);
    return t;
  }());
  const double width = style.margin_left + static_cast<double>(horizon) * style.px_per_tick + 16.0;
  const double plot_h = static_cast<double>(mp.num_cores()) * style.lane_height;
  const double height = style.margin_top + plot_h + style.margin_bottom;
  auto x_of = [&](Tick t) { return style.margin_left + static_cast<double>(t) * style.px_per_tick; };
  auto color = [&](DagId id) {
    return palette[static_cast<std::size_t>(id > 0 ? id - 1 : 0) % (sizeof palette / sizeof *palette)];
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"monospace\" font-size=\"10\">\n";

  // Axes
  const double axis_y = style.margin_top + plot_h;
  os << "<line class=\"axis\" x1=\"" << x_of(0) << "\" y1=\"" << axis_y << "\" x2=\"" << x_of(horizon) << "\" y2=\""
     << axis_y << "\" stroke=\"black\"/>\n";
  os << "<line class=\"axis\" x1=\"" << x_of(0) << "\" y1=\"" << style.margin_top << "\" x2=\"" << x_of(0)
     << "\" y2=\"" << axis_y << "\" stroke=\"black\"/>\n";
  const Tick step = std::max<Tick>(1, horizon / 20);
  for (Tick t = 0; t <= horizon; t += step) {
    os << "<text class=\"tick\" x=\"" << x_of(t) << "\" y=\"" << axis_y + 14 << "\" text-anchor=\"middle\">" << t
       << "</text>\n";
  }

  // Deadline gridlines at multiples of every period
  for (const auto& d : ts.dags) {
    for (Tick t = d.period(); t <= ts.hyperperiod; t += d.period()) {
      os << "<line class=\"deadline\" data-dag=\"" << d.dag_id() << "\" x1=\"" << x_of(t) << "\" y1=\""
         << style.margin_top << "\" x2=\"" << x_of(t) << "\" y2=\"" << axis_y << "\" stroke=\"" << color(d.dag_id())
         << "\" stroke-dasharray=\"3,3\"/>\n";
    }
  }

  for (std::size_t c = 0; c < mp.num_cores(); ++c) {
    const double y = style.margin_top + static_cast<double>(c) * style.lane_height;
    os << "<g class=\"lane\" data-core=\"" << c << "\">\n";
    os << "<text x=\"4\" y=\"" << y + style.lane_height / 2 + 4 << "\">core " << c << "</text>\n";
    auto lane = mp.cores[c];
    std::sort(lane.begin(), lane.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    for (const auto& e : lane) {
      const double x = x_of(e.start);
      const double w = static_cast<double>(e.finish - e.start) * style.px_per_tick;
      os << "<rect class=\"job\" x=\"" << x << "\" y=\"" << y + 2 << "\" width=\"" << w << "\" height=\""
         << style.lane_height - 4 << "\" fill=\"" << color(e.dag_id) << "\" stroke=\"black\"><title>dag " << e.dag_id
         << " node " << e.node_id << " job " << e.job << " [" << e.start << "," << e.finish << ")</title></rect>\n";
      os << "<text class=\"label\" x=\"" << x + w / 2 << "\" y=\"" << y + style.lane_height / 2 + 4
         << "\" text-anchor=\"middle\">" << e.dag_id << "." << e.node_id << "</text>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace dagsched
