#include <gtest/gtest.h>

#include <queue>
#include <sstream>

#include "dsvd/graph.hpp"
#include "dsvd/scene.hpp"

using namespace dsvd;

namespace {

// Independent component count by breadth-first search over the edge list.
std::size_t bfs_components(const Graph& g) {
  std::vector<std::vector<std::size_t>> adj(g.n_nodes());
  for (const Edge& e : g.edges()) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<bool> seen(g.n_nodes(), false);
  std::size_t components = 0;
  for (std::size_t s = 0; s < g.n_nodes(); ++s) {
    if (seen[s]) continue;
    ++components;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      const std::size_t v = q.front();
      q.pop();
      for (std::size_t w : adj[v])
        if (!seen[w]) {
          seen[w] = true;
          q.push(w);
        }
    }
  }
  return components;
}

// Exact segment/disk test written independently: solve |p + t(q-p) - c|^2 = r^2.
bool blocked(double px, double py, double qx, double qy, const Disk& d) {
  const double dx = qx - px, dy = qy - py, fx = px - d.cx, fy = py - d.cy;
  const double a = dx * dx + dy * dy, b = 2 * (fx * dx + fy * dy), c = fx * fx + fy * fy - d.radius * d.radius;
  if (c < 0) return true;
  const double disc = b * b - 4 * a * c;
  if (disc <= 0 || a == 0) return false;
  const double t1 = (-b - std::sqrt(disc)) / (2 * a), t2 = (-b + std::sqrt(disc)) / (2 * a);
  return t2 > 0 && t1 < 1;
}

}  // namespace

TEST(SmallWorld, PaperSizedGraphKeepsEdgeCount) {
  const Graph g = generate_small_world(100, 10, 0.1, 1);
  EXPECT_EQ(g.n_nodes(), 100u);
  EXPECT_EQ(g.n_edges(), 500u);
  EXPECT_TRUE(g.is_connected());
}

TEST(SmallWorld, TriangleWithoutRewiring) {
  const Graph g = generate_small_world(3, 2, 0.0, 5);
  EXPECT_EQ(g.n_edges(), 3u);
  EXPECT_TRUE(g.has_edge(0, 1) && g.has_edge(1, 2) && g.has_edge(0, 2));
}

TEST(SmallWorld, ConnectivityAgreesWithBfs) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Graph g = generate_small_world(10, 4, 0.1, seed + 7);
    EXPECT_EQ(bfs_components(g), 1u);
  }
}

TEST(SmallWorld, DeterministicPerSeed) {
  EXPECT_EQ(generate_small_world(40, 6, 0.3, 11).edges(), generate_small_world(40, 6, 0.3, 11).edges());
}

TEST(SmallWorld, RejectsBadParameters) {
  EXPECT_THROW(generate_small_world(2, 2, 0.1, 1), PreconditionError);
  EXPECT_THROW(generate_small_world(10, 3, 0.1, 1), PreconditionError);
  EXPECT_THROW(generate_small_world(10, 10, 0.1, 1), PreconditionError);
  EXPECT_THROW(generate_small_world(10, 4, 1.5, 1), PreconditionError);
}

TEST(GraphType, RejectsSelfLoopsAndDuplicates) {
  EXPECT_THROW(Graph(3, {{0, 0}}), PreconditionError);
  EXPECT_THROW(Graph(3, {{0, 1}, {1, 0}}), PreconditionError);
}

TEST(Metropolis, TriangleAndPath) {
  const RealMatrix tri = metropolis_weights(Graph::complete(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(tri(i, j), 1.0 / 3.0, 1e-15);
  const RealMatrix path = metropolis_weights(Graph::path(3));
  EXPECT_NEAR(path(0, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(path(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(path(0, 2), 0.0, 0.0);
}

TEST(Metropolis, DoublyStochasticWithSpectralGap) {
  const Graph g = generate_small_world(50, 4, 0.2, 3);
  const RealMatrix w = metropolis_weights(g);
  EXPECT_LE((w - w.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((w.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      if (i != j) {
        EXPECT_EQ(w(i, j) > 0.0, g.has_edge(std::size_t(i), std::size_t(j)));
      }
  const RealMatrix centered = w - RealMatrix::Constant(50, 50, 1.0 / 50.0);
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(centered);
  EXPECT_LT(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
}

TEST(EdgeList, RoundTrip) {
  const Graph g = generate_small_world(12, 4, 0.3, 9);
  std::stringstream io;
  write_edge_list(io, g);
  const Graph back = read_edge_list(io);
  EXPECT_EQ(back.n_nodes(), g.n_nodes());
  EXPECT_EQ(back.edges(), g.edges());
}

TEST(EdgeList, MalformedLineNamesLine) {
  std::stringstream io("3\n0 1\nx y\n");
  try {
    read_edge_list(io);
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Scene, NoObstaclesMeansCompleteVisibility) {
  const SensorScene s = generate_scene(5, 0, 10.0, 1);
  EXPECT_EQ(s.los_graph().n_edges(), 10u);
  EXPECT_DOUBLE_EQ(s.missing_fraction(), 0.0);
}

TEST(Scene, LineOfSightMatchesGeometricOracle) {
  for (std::uint64_t seed = 3; seed < 23; ++seed) {
    const SensorScene s = generate_scene(10, 1, 10.0, seed);
    ASSERT_EQ(s.obstacles.size(), 1u);
    for (Eigen::Index i = 0; i < 10; ++i) {
      EXPECT_FALSE(s.los_adjacency(i, i));
      for (Eigen::Index j = 0; j < 10; ++j) {
        if (i == j) continue;
        EXPECT_EQ(s.los_adjacency(i, j), s.los_adjacency(j, i));
        const bool hit = blocked(s.coords(0, i), s.coords(1, i), s.coords(0, j), s.coords(1, j), s.obstacles[0]);
        EXPECT_EQ(s.los_adjacency(i, j), !hit);
      }
    }
  }
}

TEST(Scene, ObstaclesCoverNoNode) {
  const SensorScene s = generate_scene(30, 6, 10.0, 4);
  for (const Disk& d : s.obstacles)
    for (Eigen::Index i = 0; i < 30; ++i)
      EXPECT_GT(std::hypot(s.coords(0, i) - d.cx, s.coords(1, i) - d.cy), d.radius);
}

TEST(Scene, CoordsCsvRoundTrip) {
  const SensorScene s = generate_scene(8, 2, 5.0, 2);
  std::stringstream io;
  write_coords_csv(io, s.coords);
  const RealMatrix back = read_coords_csv(io);
  EXPECT_LE((back - s.coords).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RandomMask, RemovesRequestedFraction) {
  const Graph g = random_mask_graph(30, 0.2, 5);
  EXPECT_EQ(g.n_edges(), 435u - 87u);
  EXPECT_TRUE(g.is_connected());
}
