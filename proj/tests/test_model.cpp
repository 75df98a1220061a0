#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "trmc/model.hpp"

using trmc::ModelParams;
using trmc::RingConfiguration;

namespace {

RingConfiguration with_vehicles(int n, std::initializer_list<int> occupied) {
    RingConfiguration config(n);
    for (const int i : occupied) config.set(i, true);
    return config;
}

ModelParams params(double k0, double b, int look_ahead) {
    ModelParams p;
    p.k0 = k0;
    p.b = b;
    p.look_ahead = look_ahead;
    return p;
}

}  // namespace

TEST_CASE("neighborhood unrolls the forward window") {
    const RingConfiguration ring(10);
    CHECK(trmc::neighborhood(ring, 3, 5) == std::vector<int>{4, 5, 6, 7});
    CHECK(trmc::neighborhood(ring, 8, 5) == std::vector<int>{9, 0, 1, 2});
    CHECK(trmc::neighborhood(ring, 0, 1).empty());
}

TEST_CASE("neighborhood rejects bad arguments") {
    const RingConfiguration ring(10);
    CHECK_THROWS_AS(trmc::neighborhood(ring, 3, 10), std::domain_error);
    CHECK_THROWS_AS(trmc::neighborhood(ring, 3, 0), std::domain_error);
    CHECK_THROWS_AS(trmc::neighborhood(ring, -1, 5), std::domain_error);
    CHECK_THROWS_AS(trmc::neighborhood(ring, 10, 5), std::domain_error);
}

TEST_CASE("interaction coefficient is K0 / d^2") {
    CHECK(trmc::interaction_coefficient(1, 1.0) == 1.0);
    CHECK(trmc::interaction_coefficient(2, 1.0) == 0.25);
    CHECK(trmc::interaction_coefficient(5, 2.0) == doctest::Approx(0.08).epsilon(1e-15));
    CHECK_THROWS_AS(trmc::interaction_coefficient(0, 1.0), std::domain_error);
    CHECK_THROWS_AS(trmc::interaction_coefficient(-2, 1.0), std::domain_error);
}

TEST_CASE("interaction coefficient strictly decreases with distance") {
    for (int d = 1; d < 60; ++d)
        CHECK(trmc::interaction_coefficient(d + 1, 2.5) < trmc::interaction_coefficient(d, 2.5));
}

TEST_CASE("site hamiltonian basics") {
    SUBCASE("occupied site with empty neighborhood leaves only the field term") {
        const auto config = with_vehicles(12, {4});
        CHECK(trmc::site_hamiltonian(config, 4, params(1.0, 1.0, 5)) == -1.0);
    }
    SUBCASE("empty site is exactly zero") {
        const auto config = with_vehicles(12, {4, 5, 6});
        CHECK(trmc::site_hamiltonian(config, 8, params(1.0, 1.0, 5)) == 0.0);
        CHECK(trmc::site_hamiltonian(config, 3, params(3.0, -2.0, 5)) == 0.0);
    }
    SUBCASE("neighbors at distances 1 and 3") {
        const auto config = with_vehicles(12, {2, 3, 5});
        const double h = trmc::site_hamiltonian(config, 2, params(1.0, 0.0, 5));
        CHECK(h == doctest::Approx(-(1.0 + 1.0 / 9.0)).epsilon(1e-13));
    }
}

TEST_CASE("site hamiltonian only sees the forward window") {
    trmc::Xoshiro256StarStar rng(2024);
    const ModelParams p = params(1.3, 0.7, 5);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 8 + static_cast<int>(rng.below(40));
        auto config = oracle::random_config(n, 0.5, rng);
        const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const double h = trmc::site_hamiltonian(config, i, p);

        // Flip any site outside {i, i+1, ..., i+d_l-1}.
        const int offset = p.look_ahead +
                           static_cast<int>(rng.below(static_cast<std::uint64_t>(n - p.look_ahead)));
        const int j = config.wrap(i + offset);
        config.set(j, !config.occupied(j));
        CHECK(trmc::site_hamiltonian(config, i, p) == h);
    }
}

TEST_CASE("exchange delta matches hand-derived cases") {
    const ModelParams p = params(1.0, 0.0, 5);

    SUBCASE("isolated vehicle moves for free") {
        const auto config = with_vehicles(15, {7});
        CHECK(trmc::exchange_delta(config, 7, params(1.0, 1.0, 5)) == 0.0);
        CHECK(trmc::exchange_delta(config, 7, params(2.5, -3.0, 5)) == 0.0);
    }
    SUBCASE("vehicle at 0 closing on a vehicle at 2") {
        const auto config = with_vehicles(10, {0, 2});
        const double delta = trmc::exchange_delta(config, 0, p);
        CHECK(delta == doctest::Approx(-0.75).epsilon(1e-13));
        CHECK(delta == doctest::Approx(oracle::exchange_delta_full(config, 0, p)).epsilon(1e-13));
    }
    SUBCASE("beta does not enter the delta itself") {
        const auto config = with_vehicles(10, {0, 2});
        ModelParams frozen = p;
        frozen.beta = 0.0;
        CHECK(trmc::exchange_delta(config, 0, frozen) ==
              trmc::exchange_delta(config, 0, p));
    }
}

TEST_CASE("exchange delta rejects illegal pairs") {
    const ModelParams p = params(1.0, 1.0, 5);
    const auto config = with_vehicles(10, {0, 1, 4});
    CHECK_THROWS_AS(trmc::exchange_delta(config, 0, p), std::invalid_argument);  // (1,1)
    CHECK_THROWS_AS(trmc::exchange_delta(config, 2, p), std::invalid_argument);  // (0,0)
    CHECK_THROWS_AS(trmc::exchange_delta(config, 3, p), std::invalid_argument);  // (0,1)
    CHECK_THROWS_AS(trmc::exchange_delta(config, 20, p), std::domain_error);
}

TEST_CASE("exchange delta equals the full-lattice recompute") {
    trmc::Xoshiro256StarStar rng(99);
    int tested = 0;
    while (tested < 1000) {
        const int n = 8 + static_cast<int>(rng.below(60));
        ModelParams p = params(0.2 + 2.0 * rng.uniform01(), 2.0 * rng.uniform01() - 1.0,
                               2 + static_cast<int>(rng.below(5)));
        const auto config = oracle::random_config(n, 0.2 + 0.6 * rng.uniform01(), rng);
        const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        if (!config.occupied(i) || config.occupied(i + 1)) continue;

        const double local = trmc::exchange_delta(config, i, p);
        const double full = oracle::exchange_delta_full(config, i, p);
        CHECK(local == doctest::Approx(full).epsilon(1e-12));
        ++tested;
    }
}

TEST_CASE("total interaction energy") {
    SUBCASE("empty ring") {
        CHECK(trmc::total_interaction_energy(RingConfiguration(30), params(1.0, 1.0, 5)) == 0.0);
    }
    SUBCASE("single vehicle") {
        CHECK(trmc::total_interaction_energy(with_vehicles(30, {13}), params(1.0, 1.0, 5)) == 0.0);
    }
    SUBCASE("full 30-site ring, closed form") {
        const RingConfiguration config(30, true);
        const double expected = -30.0 * (1.0 + 1.0 / 4.0 + 1.0 / 9.0 + 1.0 / 16.0);
        const double e = trmc::total_interaction_energy(config, params(1.0, 1.0, 5));
        CHECK(e == doctest::Approx(expected).epsilon(1e-13));
        CHECK(e == doctest::Approx(oracle::interaction_energy(config, params(1.0, 1.0, 5)))
                       .epsilon(1e-13));
    }
    SUBCASE("field term is excluded") {
        const auto config = with_vehicles(20, {0, 1, 2, 9});
        CHECK(trmc::total_interaction_energy(config, params(1.5, 0.0, 5)) ==
              trmc::total_interaction_energy(config, params(1.5, 40.0, 5)));
    }
}

TEST_CASE("total interaction energy matches pair enumeration on random configs") {
    trmc::Xoshiro256StarStar rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 8 + static_cast<int>(rng.below(80));
        const ModelParams p = params(0.1 + 2.0 * rng.uniform01(), 1.0,
                                     2 + static_cast<int>(rng.below(6)));
        const auto config = oracle::random_config(n, rng.uniform01(), rng);
        CHECK(trmc::total_interaction_energy(config, p) ==
              doctest::Approx(oracle::interaction_energy(config, p)).epsilon(1e-12));
    }
}

TEST_CASE("total interaction energy is rotation invariant") {
    trmc::Xoshiro256StarStar rng(11);
    const ModelParams p = params(1.0, 1.0, 5);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 10 + static_cast<int>(rng.below(50));
        const auto config = oracle::random_config(n, 0.5, rng);
        const int shift = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        RingConfiguration rotated(n);
        for (int i = 0; i < n; ++i) rotated.set(i, config.occupied(i + shift));
        CHECK(trmc::total_interaction_energy(rotated, p) ==
              doctest::Approx(trmc::total_interaction_energy(config, p)).epsilon(1e-12));
    }
}

TEST_CASE("model params validation") {
    ModelParams p;
    CHECK_NOTHROW(p.validate_for(50));
    p.look_ahead = 50;
    CHECK_THROWS_AS(p.validate_for(50), std::invalid_argument);
    p.look_ahead = 5;
    p.a0 = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.a0 = 1.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.a0 = 1.0;
    p.beta = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.beta = 1.0;
    p.density = 1.2;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("ring configuration invariants") {
    RingConfiguration config(5);
    CHECK_THROWS_AS(RingConfiguration(1), std::invalid_argument);
    config.set(-1, true);  // wraps to site 4
    CHECK(config.occupied(4));
    CHECK(config.occupied(9));
    CHECK(config.vehicle_count() == 1);
}
