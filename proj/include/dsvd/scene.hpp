#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dsvd/graph.hpp"

namespace dsvd {

struct Disk {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
};

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Planar sensor deployment with disk obstacles blocking line of sight.
struct SensorScene {
  RealMatrix coords;  // h x N
  std::vector<Disk> obstacles;
  BoolMatrix los_adjacency;  // N x N, symmetric, false diagonal

  std::size_t n_nodes() const { return std::size_t(coords.cols()); }
  Graph los_graph() const { return Graph::from_adjacency(los_adjacency); }

  double missing_fraction() const {
    const auto n = double(n_nodes());
    const double pairs = n * (n - 1.0) / 2.0;
    return pairs > 0.0 ? 1.0 - double(los_graph().n_edges()) / pairs : 0.0;
  }
};

/// True when the closed segment p-q passes strictly through the disk interior.
inline bool segment_hits_disk(double px, double py, double qx, double qy, const Disk& d) {
  const double dx = qx - px, dy = qy - py;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((d.cx - px) * dx + (d.cy - py) * dy) / len2, 0.0, 1.0);
  const double ex = px + t * dx - d.cx, ey = py + t * dy - d.cy;
  return ex * ex + ey * ey < d.radius * d.radius;
}

inline BoolMatrix line_of_sight(const RealMatrix& coords, const std::vector<Disk>& obstacles) {
  require(coords.rows() == 2, "line_of_sight: obstacles are planar, coords must be 2 x N");
  const Eigen::Index n = coords.cols();
  BoolMatrix los = BoolMatrix::Constant(n, n, false);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      bool clear = true;
      for (const Disk& d : obstacles)
        if (segment_hits_disk(coords(0, i), coords(1, i), coords(0, j), coords(1, j), d)) {
          clear = false;
          break;
        }
      los(i, j) = clear;
      los(j, i) = clear;
    }
  return los;
}

struct SceneOptions {
  double min_radius_fraction = 0.04;  // of the area side
  double max_radius_fraction = 0.10;
};

/// Uniform node placement on [0, area]^2 plus disk obstacles that cover no
/// node; regenerated until the line-of-sight graph is connected.
inline SensorScene generate_scene(std::size_t n, std::size_t n_obstacles, double area,
                                  std::uint64_t seed, const SceneOptions& options = {}) {
  constexpr std::size_t h = 2;
  require(n >= h + 2, "generate_scene: n must be >= h + 2");
  require(area > 0.0, "generate_scene: area must be positive");
  require(options.min_radius_fraction > 0.0 &&
              options.min_radius_fraction <= options.max_radius_fraction,
          "generate_scene: invalid obstacle radius range");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> position(0.0, area);
  std::uniform_real_distribution<double> radius(options.min_radius_fraction * area,
                                                options.max_radius_fraction * area);
  for (int attempt = 0; attempt < kConnectivityRetries; ++attempt) {
    SensorScene scene;
    scene.coords.resize(h, Eigen::Index(n));
    for (Eigen::Index i = 0; i < Eigen::Index(n); ++i) {
      scene.coords(0, i) = position(rng);
      scene.coords(1, i) = position(rng);
    }
    int placement_budget = 1000 * int(n_obstacles + 1);
    while (scene.obstacles.size() < n_obstacles && placement_budget-- > 0) {
      Disk d{position(rng), position(rng), radius(rng)};
      bool covers_node = false;
      for (Eigen::Index i = 0; i < Eigen::Index(n) && !covers_node; ++i) {
        const double ex = scene.coords(0, i) - d.cx, ey = scene.coords(1, i) - d.cy;
        covers_node = ex * ex + ey * ey <= d.radius * d.radius;
      }
      if (!covers_node) scene.obstacles.push_back(d);
    }
    if (scene.obstacles.size() < n_obstacles) continue;
    scene.los_adjacency = line_of_sight(scene.coords, scene.obstacles);
    if (scene.los_graph().is_connected()) return scene;
  }
  throw ConnectivityError("generate_scene: line-of-sight graph disconnected after " +
                          std::to_string(kConnectivityRetries) + " regenerations");
}

// Coordinates CSV: header "node,x,y", one row per node.

inline void write_coords_csv(std::ostream& out, const RealMatrix& coords) {
  require(coords.rows() == 2, "coords csv: expected 2 x N coordinates");
  out << "node,x,y\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < coords.cols(); ++i)
    out << i << ',' << coords(0, i) << ',' << coords(1, i) << '\n';
}

inline RealMatrix read_coords_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw PreconditionError("coords csv: empty input");
  std::vector<std::array<double, 2>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    long long node = -1;
    double x = 0.0, y = 0.0;
    if (!(fields >> node >> x >> y) || node != (long long)rows.size())
      throw PreconditionError("coords csv: line " + std::to_string(line_no) +
                              ": expected consecutive node,x,y");
    rows.push_back({x, y});
  }
  RealMatrix coords(2, Eigen::Index(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    coords(0, Eigen::Index(i)) = rows[i][0];
    coords(1, Eigen::Index(i)) = rows[i][1];
  }
  return coords;
}

}  // namespace dsvd
