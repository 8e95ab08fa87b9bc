#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "catprobe/qstate.hpp"
#include "oracles.hpp"

using namespace catprobe;

namespace {

std::mt19937_64 test_rng(20240817ull);

TwoLevelState random_two_level(std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  return TwoLevelState::normalized(cplx{n(gen), n(gen)}, cplx{n(gen), n(gen)});
}

std::vector<cplx> random_env(std::mt19937_64& gen, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<cplx> v(dim);
  double norm_sq = 0.0;
  for (auto& a : v) {
    a = cplx{n(gen), n(gen)};
    norm_sq += std::norm(a);
  }
  const double norm = std::sqrt(norm_sq);
  for (auto& a : v) a /= norm;
  return v;
}

}  // namespace

TEST_CASE("bloch_vector maps the basis and superposition states") {
  auto b = bloch_vector(TwoLevelState::left());
  CHECK(b.x == Catch::Approx(0.0).margin(1e-15));
  CHECK(b.y == Catch::Approx(0.0).margin(1e-15));
  CHECK(b.z == Catch::Approx(1.0).margin(1e-15));

  b = bloch_vector(TwoLevelState::plus());
  CHECK(b.x == Catch::Approx(1.0).margin(1e-15));
  CHECK(b.y == Catch::Approx(0.0).margin(1e-15));
  CHECK(b.z == Catch::Approx(0.0).margin(1e-15));

  b = bloch_vector(TwoLevelState::plus_i());
  CHECK(b.x == Catch::Approx(0.0).margin(1e-15));
  CHECK(b.y == Catch::Approx(1.0).margin(1e-15));
  CHECK(b.z == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("bloch_vector rejects non-normalized input") {
  TwoLevelState bad{cplx{1.0, 0.0}, cplx{0.5, 0.0}};
  CHECK_THROWS_AS(bloch_vector(bad), precondition_error);
}

TEST_CASE("bloch_vector is a unit vector with z = 2 P_L - 1") {
  for (int i = 0; i < 200; ++i) {
    const TwoLevelState psi = random_two_level(test_rng);
    const auto b = bloch_vector(psi);
    CHECK(std::abs(b.x * b.x + b.y * b.y + b.z * b.z - 1.0) < 1e-10);
    // same-arithmetic identity, not just closeness
    CHECK(std::abs(b.z - (2.0 * std::norm(psi.amp_L) - 1.0)) < 1e-15);
  }
}

TEST_CASE("step_propagator with zero Hamiltonian is the identity") {
  const auto u = step_propagator(0.0, 0.0, 0.37);
  CHECK(u.u00 == cplx{1.0, 0.0});
  CHECK(u.u01 == cplx{0.0, 0.0});
  CHECK(u.u10 == cplx{0.0, 0.0});
  CHECK(u.u11 == cplx{1.0, 0.0});
}

TEST_CASE("step_propagator pure bias is a phase rotation") {
  // delta = 0, eta = 2, dt = pi/2: U = diag(e^{-i pi/2}, e^{+i pi/2})
  const auto u = step_propagator(0.0, 2.0, M_PI / 2.0);
  CHECK(std::abs(u.u00 - std::polar(1.0, -M_PI / 2.0)) < 1e-15);
  CHECK(std::abs(u.u11 - std::polar(1.0, M_PI / 2.0)) < 1e-15);
  CHECK(std::abs(u.u01) == 0.0);
  CHECK(std::abs(u.u10) == 0.0);
}

TEST_CASE("step_propagator matches the truncated series oracle") {
  const auto u = step_propagator(1.0, 0.7, 0.01);
  const auto s = oracle::series_step_2x2(1.0, 0.7, 0.01, 15);
  CHECK(std::abs(u.u00 - s[0]) < 1e-12);
  CHECK(std::abs(u.u01 - s[1]) < 1e-12);
  CHECK(std::abs(u.u10 - s[2]) < 1e-12);
  CHECK(std::abs(u.u11 - s[3]) < 1e-12);
}

TEST_CASE("step_propagator rejects non-positive dt") {
  CHECK_THROWS_AS(step_propagator(1.0, 0.0, 0.0), config_error);
  CHECK_THROWS_AS(step_propagator(1.0, 0.0, -0.1), config_error);
}

TEST_CASE("step_propagator is unitary and norm-preserving over long products") {
  std::uniform_real_distribution<double> d_delta(0.0, 3.0);
  std::uniform_real_distribution<double> d_eta(-5.0, 5.0);
  std::uniform_real_distribution<double> d_dt(0.001, 0.1);

  for (int rep = 0; rep < 10; ++rep) {
    TwoLevelState psi = random_two_level(test_rng);
    const int n_steps = 5000;
    for (int j = 0; j < n_steps; ++j) {
      const auto u = step_propagator(d_delta(test_rng), d_eta(test_rng), d_dt(test_rng));
      // u^dag u = I within 1e-12 entrywise
      const cplx col0 = std::conj(u.u00) * u.u00 + std::conj(u.u10) * u.u10;
      const cplx cross = std::conj(u.u00) * u.u01 + std::conj(u.u10) * u.u11;
      REQUIRE(std::abs(col0 - 1.0) < 1e-12);
      REQUIRE(std::abs(cross) < 1e-12);
      psi = u.apply(psi);
    }
    CHECK(std::abs(std::sqrt(psi.norm_sq()) - 1.0) <= n_steps * 1e-13);
  }
}

TEST_CASE("reduced_density of the orthogonal-environment superposition has no coherence") {
  // nu_L = nu_R = 1/sqrt(2), Phi_L = (1,0), Phi_R = (0,1)
  const std::vector<cplx> amp{cplx{M_SQRT1_2, 0.0}, cplx{0.0, 0.0}, cplx{0.0, 0.0},
                              cplx{M_SQRT1_2, 0.0}};
  const CompositeState psi(2, amp);
  const auto rho = reduced_density(psi);
  CHECK(std::abs(rho.ll - 0.5) < 1e-15);
  CHECK(std::abs(rho.rr - 0.5) < 1e-15);
  CHECK(std::abs(rho.lr) <= 1e-15);
  CHECK(rho.is_valid());
}

TEST_CASE("reduced_density of a product state is pure with full coherence") {
  const auto phi = random_env(test_rng, 8);
  const CompositeState psi = tensor_embed(TwoLevelState::plus(), phi);
  const auto rho = reduced_density(psi);
  CHECK(std::abs(rho.lr - 0.5) < 1e-12);
  CHECK(std::abs(rho.purity() - 1.0) < 1e-10);
}

TEST_CASE("reduced_density with partial environment overlap matches direct summation") {
  // Phi_L = (1, 0), Phi_R = (0.3, sqrt(1 - 0.09)): real overlap 0.3
  const double overlap = 0.3;
  const std::vector<cplx> amp{
      cplx{M_SQRT1_2, 0.0}, cplx{0.0, 0.0},
      cplx{M_SQRT1_2 * overlap, 0.0}, cplx{M_SQRT1_2 * std::sqrt(1.0 - overlap * overlap), 0.0}};
  const CompositeState psi(2, amp);
  const auto rho = reduced_density(psi);
  CHECK(std::abs(rho.lr - 0.15) < 1e-14);
  CHECK(std::abs(rho.lr - oracle::direct_rho_lr(amp, 2)) < 1e-15);
  CHECK(rho.is_valid());
}

TEST_CASE("reduced_density trace is 1 for random normalized composite states") {
  for (std::size_t dim_env : {1u, 2u, 5u, 16u}) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<cplx> amp;
      {
        auto v = random_env(test_rng, 2 * dim_env);
        amp.assign(v.begin(), v.end());
      }
      const CompositeState psi(dim_env, amp);
      const auto rho = reduced_density(psi);
      CHECK(std::abs(rho.trace() - 1.0) < 1e-12);
      CHECK(rho.is_valid());
    }
  }
}

TEST_CASE("tensor_embed lays out amplitudes as s * dim_env + e") {
  const std::vector<cplx> e0{cplx{1.0, 0.0}, cplx{0.0, 0.0}};
  const auto psi = tensor_embed(TwoLevelState::left(), e0);
  CHECK(psi.at(0, 0) == cplx{1.0, 0.0});
  CHECK(psi.at(0, 1) == cplx{0.0, 0.0});
  CHECK(psi.at(1, 0) == cplx{0.0, 0.0});
  CHECK(psi.at(1, 1) == cplx{0.0, 0.0});

  const std::vector<cplx> e1{cplx{0.0, 0.0}, cplx{1.0, 0.0}};
  const auto psi2 = tensor_embed(TwoLevelState::plus(), e1);
  CHECK(std::abs(psi2.at(0, 1) - M_SQRT1_2) < 1e-15);
  CHECK(std::abs(psi2.at(1, 1) - M_SQRT1_2) < 1e-15);
  CHECK(std::abs(psi2.at(0, 0)) == 0.0);
  CHECK(std::abs(psi2.at(1, 0)) == 0.0);
}

TEST_CASE("tensor_embed preserves normalization on random inputs") {
  for (int rep = 0; rep < 50; ++rep) {
    const auto psi = random_two_level(test_rng);
    const auto phi = random_env(test_rng, 1 + static_cast<std::size_t>(rep % 7));
    const auto composite = tensor_embed(psi, phi);
    CHECK(std::abs(composite.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("tensor_embed rejects empty environments") {
  CHECK_THROWS_AS(tensor_embed(TwoLevelState::left(), std::vector<cplx>{}), config_error);
}

TEST_CASE("left_population agrees with the reduced density diagonal") {
  for (int rep = 0; rep < 20; ++rep) {
    const auto v = random_env(test_rng, 12);
    const CompositeState psi(6, std::vector<cplx>(v.begin(), v.end()));
    CHECK(std::abs(left_population(psi) - reduced_density(psi).ll.real()) < 1e-14);
  }
}
