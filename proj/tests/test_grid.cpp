#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <stdexcept>

#include "stochexp/grid.hpp"

using namespace stochexp;

TEST_CASE("make_grid splits the horizon exactly") {
  TimeGrid g = make_grid(1.0, 1e-3);
  CHECK(g.n_steps == 1000);
  CHECK(g.n_nodes() == 1001);
  CHECK(g.dt == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(g.time(0) == 0.0);
  CHECK(g.time(1000) == doctest::Approx(1.0).epsilon(1e-12));

  TimeGrid h = make_grid(0.5, 1e-3);
  CHECK(h.n_steps == 500);
}

TEST_CASE("make_grid validates its arguments") {
  CHECK_THROWS_AS(make_grid(0.0, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(-1.0, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1.0, -1e-3), std::invalid_argument);
  // 1.0 / 3e-4 is not an integer number of steps
  CHECK_THROWS_AS(make_grid(1.0, 3e-4), std::invalid_argument);
  // dt larger than the horizon
  CHECK_THROWS_AS(make_grid(1.0, 2.0), std::invalid_argument);
}

TEST_CASE("node_at clamps and rounds down") {
  TimeGrid g = make_grid(1.0, 0.25);
  CHECK(g.node_at(0.0) == 0);
  CHECK(g.node_at(0.24) == 0);
  CHECK(g.node_at(0.25) == 1);
  CHECK(g.node_at(0.9) == 3);
  CHECK(g.node_at(1.0) == 4);
  CHECK(g.node_at(7.0) == 4);
}

TEST_CASE("checkpoint nodes are deduplicated and ascending") {
  TimeGrid g = make_grid(1.0, 0.25);  // 4 steps
  auto nodes = checkpoint_nodes(g, 10);
  REQUIRE(!nodes.empty());
  for (std::size_t i = 1; i < nodes.size(); ++i) CHECK(nodes[i] > nodes[i - 1]);
  CHECK(nodes.back() == g.n_steps);
  CHECK(nodes.front() >= 1);  // node 0 is never a checkpoint
  CHECK(nodes.size() <= 4);

  TimeGrid f = make_grid(1.0, 1e-3);
  auto fine = checkpoint_nodes(f, 10);
  CHECK(fine.size() == 10);
  CHECK(fine[0] == 100);
  CHECK(fine[9] == 1000);
}
