#include "ap/eval/plot.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ap::eval {

void write_bg_profile_plot(const std::filesystem::path& dir, const std::string& stem,
                           const std::vector<ProfileGroup>& groups) {
  if (groups.empty()) throw std::invalid_argument("plot: no groups");
  std::size_t steps = 0;
  for (const auto& g : groups) {
    if (g.records.empty()) throw std::invalid_argument("plot: group " + g.label + " is empty");
    for (const auto& r : g.records) {
      if (steps == 0) steps = r.size();
      if (r.size() != steps) throw std::invalid_argument("plot: records differ in length");
    }
  }
  std::filesystem::create_directories(dir);
  const auto dat = dir / (stem + ".dat");
  std::ofstream os(dat);
  if (!os) throw std::runtime_error("cannot write " + dat.string());
  os << "# t_h";
  for (const auto& g : groups) os << ' ' << g.label << "_mean " << g.label << "_lo " << g.label << "_hi";
  os << '\n';
  const auto& t = groups.front().records.front().t;
  for (std::size_t k = 0; k < steps; ++k) {
    os << t[k] / 60.0;
    for (const auto& g : groups) {
      double mean = 0.0, sq = 0.0;
      for (const auto& r : g.records) mean += r.bg[k];
      mean /= static_cast<double>(g.records.size());
      for (const auto& r : g.records) sq += (r.bg[k] - mean) * (r.bg[k] - mean);
      const double sd = std::sqrt(sq / static_cast<double>(g.records.size()));
      os << ' ' << mean << ' ' << mean - sd << ' ' << mean + sd;
    }
    os << '\n';
  }

  std::ofstream gp(dir / (stem + ".gp"));
  gp << "set terminal pngcairo size 1000,600\n"
     << "set output '" << stem << ".png'\n"
     << "set xlabel 'time (h)'\nset ylabel 'BG (mg/dL)'\n"
     << "set key outside right\n"
     << "set arrow from graph 0, first 70 to graph 1, first 70 nohead dt 2\n"
     << "set arrow from graph 0, first 180 to graph 1, first 180 nohead dt 2\n"
     << "plot ";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::size_t c = 2 + 3 * i;
    if (i > 0) gp << ", \\\n     ";
    gp << "'" << stem << ".dat' using 1:" << c + 1 << ":" << c + 2 << " with filledcurves fs transparent solid 0.2 lc "
       << i + 1 << " notitle, \\\n     '" << stem << ".dat' using 1:" << c << " with lines lw 2 lc " << i + 1
       << " title '" << groups[i].label << "'";
  }
  gp << '\n';
}

}  // namespace ap::eval
