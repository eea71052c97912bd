#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mudinet/geometry.hpp"

namespace mudinet {

// Scene description text format, one record per line, lengths in meters:
//   bounds x0 y0 x1 y1
//   tx x y
//   wall ax ay bx by
//   region cx cy sx sy [truncation]      (truncation defaults to 3)
// '#' starts a comment; blank lines are ignored.

inline Scene parse_scene(std::istream& in) {
  Scene scene;
  bool have_tx = false;
  bool have_bounds = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string kind;
    if (!(fields >> kind)) continue;
    auto want = [&](int n, double* out) {
      for (int i = 0; i < n; ++i) {
        if (!(fields >> out[i])) {
          throw std::runtime_error("scene line " + std::to_string(line_no) +
                                   ": record '" + kind + "' needs " + std::to_string(n) +
                                   " numeric fields");
        }
      }
    };
    if (kind == "wall") {
      double v[4];
      want(4, v);
      scene.walls.push_back({{v[0], v[1]}, {v[2], v[3]}});
    } else if (kind == "tx") {
      double v[2];
      want(2, v);
      scene.tx = {v[0], v[1]};
      have_tx = true;
    } else if (kind == "region") {
      double v[4];
      want(4, v);
      ScattererRegion r{{v[0], v[1]}, v[2], v[3], 3.0};
      double trunc;
      if (fields >> trunc) r.truncation = trunc;
      scene.regions.push_back(r);
    } else if (kind == "bounds") {
      double v[4];
      want(4, v);
      scene.bounds = {{v[0], v[1]}, {v[2], v[3]}};
      have_bounds = true;
    } else {
      throw std::runtime_error("scene line " + std::to_string(line_no) +
                               ": unknown record '" + kind + "'");
    }
  }
  if (!have_bounds) throw std::runtime_error("scene: missing 'bounds' record");
  if (!have_tx) throw std::runtime_error("scene: missing 'tx' record");
  validate_scene(scene);
  return scene;
}

inline std::string write_scene(const Scene& scene) {
  std::ostringstream out;
  out.precision(17);
  out << "bounds " << scene.bounds.lo.x << ' ' << scene.bounds.lo.y << ' '
      << scene.bounds.hi.x << ' ' << scene.bounds.hi.y << '\n';
  out << "tx " << scene.tx.x << ' ' << scene.tx.y << '\n';
  for (const auto& w : scene.walls) {
    out << "wall " << w.a.x << ' ' << w.a.y << ' ' << w.b.x << ' ' << w.b.y << '\n';
  }
  for (const auto& r : scene.regions) {
    out << "region " << r.center.x << ' ' << r.center.y << ' ' << r.sigma_x << ' '
        << r.sigma_y << ' ' << r.truncation << '\n';
  }
  return out.str();
}

inline Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file: " + path);
  return parse_scene(in);
}

inline void save_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene file: " + path);
  out << write_scene(scene);
}

// Empty room, bounds only; trajectories are confined by the bounds check.
inline Scene make_open_scene(double width = 20.0, double height = 20.0) {
  Scene s;
  s.bounds = {{0.0, 0.0}, {width, height}};
  s.tx = {width / 2.0, height / 2.0};
  return s;
}

inline Scene make_single_wall_scene() {
  Scene s;
  s.bounds = {{-10.0, -10.0}, {10.0, 10.0}};
  s.tx = {1.0, 0.0};
  s.walls.push_back({{0.0, 2.0}, {4.0, 2.0}});
  return s;
}

// 10 m x 8 m rectangular room with an interior partition at x = 5 leaving a
// 1 m doorway, plus a wall stub in the far room. Transmitter and doorway sit
// off the room's symmetry axes so distinct positions produce distinct
// multipath geometry.
inline Scene make_two_room_scene() {
  Scene s;
  s.bounds = {{0.0, 0.0}, {10.0, 8.0}};
  s.tx = {2.0, 2.8};
  s.walls.push_back({{0.0, 0.0}, {10.0, 0.0}});
  s.walls.push_back({{10.0, 0.0}, {10.0, 8.0}});
  s.walls.push_back({{10.0, 8.0}, {0.0, 8.0}});
  s.walls.push_back({{0.0, 8.0}, {0.0, 0.0}});
  s.walls.push_back({{5.0, 0.0}, {5.0, 5.0}});
  s.walls.push_back({{5.0, 6.0}, {5.0, 8.0}});
  s.walls.push_back({{7.5, 0.0}, {7.5, 2.5}});
  return s;
}

}  // namespace mudinet
