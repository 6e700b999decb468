#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "vgai/comm_graph.hpp"
#include "vgai/swarm.hpp"

using namespace vgai;

TEST_SUITE("swarm") {
  TEST_CASE("init_swarm at N=50, v_init=3 stays inside the disc and velocity box") {
    SimConfig c;
    c.n_agents = 50;
    c.v_init = 3.0;
    Rng rng(c.rng_seed);
    const SwarmState s = init_swarm(c, rng);
    REQUIRE(s.size() == 50);
    for (int i = 0; i < 50; ++i) CHECK(s.positions.row(i).norm() <= std::sqrt(50.0) + 1e-12);
    // Shared bias lies in [-0.9, 0.9]; the per-agent part in [-3, 3].
    for (int i = 0; i < 50; ++i) {
      for (int k = 0; k < 2; ++k) CHECK(std::abs(s.velocities(i, k)) <= 3.0 + 0.9);
    }
    CHECK(validate_initialization(s, c));
    CHECK(s.accelerations.isZero(0.0));
    CHECK(s.t == 0);
  }

  TEST_CASE("v_init = 0 gives every agent exactly zero velocity") {
    SimConfig c;
    c.n_agents = 12;
    c.v_init = 0.0;
    Rng rng(3);
    const SwarmState s = init_swarm(c, rng);
    CHECK(s.velocities.isZero(0.0));
  }

  TEST_CASE("fixed seed reproduces the state bit for bit") {
    SimConfig c;
    c.n_agents = 20;
    Rng a(42), b(42);
    const SwarmState s1 = init_swarm(c, a), s2 = init_swarm(c, b);
    CHECK(s1.positions == s2.positions);
    CHECK(s1.velocities == s2.velocities);
  }

  TEST_CASE("connectivity requirement is honored across seeds and sizes") {
    for (int n : {6, 10, 20, 30}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SimConfig c;
        c.n_agents = n;
        c.comm_radius = n <= 10 ? 1.0 : 1.5;
        Rng rng(seed);
        const SwarmState s = init_swarm(c, rng);
        CHECK(build_graph(s.positions, c.comm_radius).connected());
        CHECK(validate_initialization(s, c));
      }
    }
  }

  TEST_CASE("impossible geometry throws after the attempt cap") {
    SimConfig c;
    c.n_agents = 10;
    c.comm_radius = 0.05;  // neighbors would have to sit closer than the spacing floor
    c.max_init_attempts = 5;
    Rng rng(1);
    CHECK_THROWS_AS(init_swarm(c, rng), std::runtime_error);
  }

  TEST_CASE("validate_initialization examples") {
    SimConfig c;
    c.comm_radius = 1.5;
    const double h = std::sqrt(3.0) / 2.0;
    CHECK(validate_initialization(make_state({{0, 0, 0, 0}, {1, 0, 0, 0}, {0.5, h, 0, 0}}), c));
    CHECK_FALSE(validate_initialization(make_state({{0, 0, 0, 0}, {1, 0, 0, 0}}), c));
    CHECK_FALSE(validate_initialization(make_state({{0, 0, 0, 0}, {0.1, 0, 0, 0}, {0.5, 0.8, 0, 0}}), c));
  }

  TEST_CASE("saturate clamps per component") {
    Points u(3, 2);
    u << 40, -50, 0, 0, -30, 30;
    const Points s = saturate(u, 30.0);
    CHECK(s(0, 0) == 30.0);
    CHECK(s(0, 1) == -30.0);
    CHECK(s(1, 0) == 0.0);
    CHECK(s(1, 1) == 0.0);
    CHECK(s(2, 0) == -30.0);
    CHECK(s(2, 1) == 30.0);
    CHECK_THROWS_AS(saturate(u, 0.0), std::invalid_argument);
  }

  TEST_CASE("step_dynamics closed-form kinematics") {
    SwarmState s = make_state({{0, 0, 1, 0}});
    SwarmState n = step_dynamics(s, Points::Zero(1, 2), 0.01);
    CHECK(n.positions(0, 0) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(n.t == 1);

    s = make_state({{0, 0, 0, 0}});
    Points u(1, 2);
    u << 2, 0;
    n = step_dynamics(s, u, 1.0);
    CHECK(n.positions(0, 0) == 1.0);
    CHECK(n.velocities(0, 0) == 2.0);
    CHECK(n.accelerations(0, 0) == 2.0);

    n = step_dynamics(s, Points::Zero(1, 2), 0.5);
    CHECK(n.positions == s.positions);
    CHECK(n.velocities == s.velocities);
    CHECK(n.t == s.t + 1);
  }

  TEST_CASE("step_dynamics rejects non-finite input") {
    SwarmState s = make_state({{0, 0, 0, 0}});
    Points u(1, 2);
    u << std::nan(""), 0;
    CHECK_THROWS_AS(step_dynamics(s, u, 0.01), std::invalid_argument);
  }

  TEST_CASE("config file parsing") {
    std::istringstream in("# swarm\n[sim]\nn_agents = 10\ncomm_radius=2.0\nrequire_connected = false\n");
    const SimConfig c = load_sim_config(in);
    CHECK(c.n_agents == 10);
    CHECK(c.comm_radius == 2.0);
    CHECK_FALSE(c.require_connected);
    std::istringstream bad("warp = 9\n");
    CHECK_THROWS_AS(load_sim_config(bad), std::invalid_argument);
    std::istringstream neg("n_agents = 1\n");
    CHECK_THROWS_AS(load_sim_config(neg), std::invalid_argument);
  }

  TEST_CASE("Rng uniform stays in [0, 1)") {
    Rng r(7);
    for (int i = 0; i < 10000; ++i) {
      const double u = r.uniform();
      CHECK((u >= 0.0 && u < 1.0));
    }
  }
}
