#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "catprobe/ensemble.hpp"
#include "catprobe/errors.hpp"
#include "catprobe/qstate.hpp"

// Desk-scale quantum environment: a two-level system coupled to N truncated
// bosonic modes, evolved exactly by dense eigendecomposition.
//
//   H = (delta/2) sigma_x + (epsilon/2) sigma_z
//       + sum_i omega_i a_i^dag a_i + (sigma_z/2) sum_i c_i (a_i + a_i^dag)
//
// Ohmic discretization, frozen for v1: mode frequencies linearly spaced,
// omega_i = i * (2 omega_c / N) for i = 1..N, and couplings
// c_i^2 = (2 alpha / pi) * omega_i * exp(-omega_i / omega_c) * d_omega with
// d_omega = 2 omega_c / N.
//
// Environment basis: Fock product states |n_0, ..., n_{N-1}>, each mode
// truncated to n_max + 1 levels, flattened with mode 0 least significant:
// e = sum_i n_i (n_max+1)^i. Composite flat index = s * env_dim + e.

namespace catprobe {

struct OhmicBathSpec {
  double alpha = 0.0;       // dimensionless coupling >= 0
  double omega_c = 5.0;     // cutoff frequency > 0
  int n_modes = 4;          // N >= 1
  int fock_cutoff = 2;      // n_max >= 1 levels-1 per mode
  double beta = 1.0;        // inverse temperature > 0 (hbar = k_B = 1)
  std::size_t dim_cap = 16384;

  std::size_t env_dim() const {
    std::size_t d = 1;
    for (int i = 0; i < n_modes; ++i) d *= static_cast<std::size_t>(fock_cutoff) + 1;
    return d;
  }

  void validate() const {
    if (!(alpha >= 0.0)) throw config_error("bath: alpha must be >= 0");
    if (!(omega_c > 0.0)) throw config_error("bath: omega_c must be > 0");
    if (n_modes < 1) throw config_error("bath: n_modes must be >= 1");
    if (fock_cutoff < 1) throw config_error("bath: fock_cutoff must be >= 1");
    if (!(beta > 0.0)) throw config_error("bath: beta must be > 0");
    const std::size_t dim = 2 * env_dim();
    if (dim > dim_cap) {
      throw config_error("bath: total Hilbert dimension " + std::to_string(dim) +
                         " exceeds cap " + std::to_string(dim_cap));
    }
  }

  std::vector<double> mode_frequencies() const {
    const double d_omega = 2.0 * omega_c / n_modes;
    std::vector<double> w(static_cast<std::size_t>(n_modes));
    for (int i = 0; i < n_modes; ++i) w[static_cast<std::size_t>(i)] = (i + 1) * d_omega;
    return w;
  }

  std::vector<double> couplings() const {
    const double d_omega = 2.0 * omega_c / n_modes;
    std::vector<double> c(static_cast<std::size_t>(n_modes));
    const auto freqs = mode_frequencies();
    for (int i = 0; i < n_modes; ++i) {
      const double w = freqs[static_cast<std::size_t>(i)];
      c[static_cast<std::size_t>(i)] =
          std::sqrt(2.0 * alpha / M_PI * w * std::exp(-w / omega_c) * d_omega);
    }
    return c;
  }
};

struct SpinBosonSystem {
  Eigen::MatrixXcd hamiltonian;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;  // columns are eigenstates
  std::vector<double> mode_frequencies;
  std::vector<double> couplings;
  double delta = 0.0;
  double epsilon = 0.0;
  int n_modes = 0;
  int fock_cutoff = 0;
  std::size_t env_dim = 0;
};

namespace detail {

// Occupation of mode i in environment basis state e (mixed radix, mode 0 LSB).
inline int occupation(std::size_t e, int mode, int fock_cutoff) {
  std::size_t q = e;
  for (int i = 0; i < mode; ++i) q /= static_cast<std::size_t>(fock_cutoff) + 1;
  return static_cast<int>(q % (static_cast<std::size_t>(fock_cutoff) + 1));
}

}  // namespace detail

inline SpinBosonSystem build_hamiltonian(const OhmicBathSpec& spec, double delta,
                                         double epsilon) {
  spec.validate();
  const std::size_t env_dim = spec.env_dim();
  const std::size_t dim = 2 * env_dim;
  const int levels = spec.fock_cutoff + 1;
  const auto freqs = spec.mode_frequencies();
  const auto coups = spec.couplings();

  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
  auto idx = [env_dim](int s, std::size_t e) {
    return static_cast<Eigen::Index>(static_cast<std::size_t>(s) * env_dim + e);
  };

  for (int s = 0; s < 2; ++s) {
    const double sz = (s == 0) ? 1.0 : -1.0;  // sigma_z |L> = +|L>
    for (std::size_t e = 0; e < env_dim; ++e) {
      double diag = 0.5 * epsilon * sz;
      std::size_t stride = 1;
      for (int i = 0; i < spec.n_modes; ++i) {
        const int n = detail::occupation(e, i, spec.fock_cutoff);
        diag += freqs[static_cast<std::size_t>(i)] * n;
        // (sz/2) c_i (a_i + a_i^dag): raise n_i by one, matrix element
        // c_i sqrt(n+1); the lowering partner fills in by hermiticity.
        if (n + 1 < levels && coups[static_cast<std::size_t>(i)] != 0.0) {
          const std::size_t e_up = e + stride;
          const double v = 0.5 * sz * coups[static_cast<std::size_t>(i)] *
                           std::sqrt(static_cast<double>(n + 1));
          h(idx(s, e_up), idx(s, e)) += v;
          h(idx(s, e), idx(s, e_up)) += v;
        }
        stride *= static_cast<std::size_t>(levels);
      }
      h(idx(s, e), idx(s, e)) = diag;
      // (delta/2) sigma_x couples L and R at fixed environment state.
      if (s == 0) {
        h(idx(1, e), idx(0, e)) += 0.5 * delta;
        h(idx(0, e), idx(1, e)) += 0.5 * delta;
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success) {
    throw numerical_error("build_hamiltonian: eigendecomposition failed");
  }

  SpinBosonSystem sys;
  sys.hamiltonian = std::move(h);
  sys.eigenvalues = solver.eigenvalues();
  sys.eigenvectors = solver.eigenvectors();
  sys.mode_frequencies = freqs;
  sys.couplings = coups;
  sys.delta = delta;
  sys.epsilon = epsilon;
  sys.n_modes = spec.n_modes;
  sys.fock_cutoff = spec.fock_cutoff;
  sys.env_dim = env_dim;
  return sys;
}

struct GibbsEntry {
  double weight;
  std::size_t fock_index;       // environment basis index of |E_n>
  Eigen::VectorXcd env_state;   // the basis vector itself
};

struct GibbsEnsembleStates {
  std::vector<GibbsEntry> entries;
  double retained_weight = 0.0;  // cumulative normalized weight before renormalization
};

// Gibbs ensemble over eigenstates of the bare bath sum_i omega_i a_i^dag a_i
// (Fock product states), w_n proportional to exp(-beta E_n), truncated to
// cumulative weight >= 1 - 1e-6 and renormalized.
inline GibbsEnsembleStates gibbs_ensemble_states(const OhmicBathSpec& spec) {
  spec.validate();
  const std::size_t env_dim = spec.env_dim();
  const auto freqs = spec.mode_frequencies();

  std::vector<double> energy(env_dim, 0.0);
  for (std::size_t e = 0; e < env_dim; ++e) {
    double sum = 0.0;
    for (int i = 0; i < spec.n_modes; ++i) {
      sum += freqs[static_cast<std::size_t>(i)] * detail::occupation(e, i, spec.fock_cutoff);
    }
    energy[e] = sum;
  }
  const double e0 = *std::min_element(energy.begin(), energy.end());

  std::vector<std::size_t> order(env_dim);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&energy](std::size_t a, std::size_t b) {
    return energy[a] < energy[b];
  });

  double z = 0.0;
  std::vector<double> boltzmann(env_dim);
  for (std::size_t e = 0; e < env_dim; ++e) {
    boltzmann[e] = std::exp(-spec.beta * (energy[e] - e0));
    z += boltzmann[e];
  }

  GibbsEnsembleStates ens;
  double cumulative = 0.0;
  for (std::size_t e : order) {
    const double w = boltzmann[e] / z;
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(env_dim));
    v(static_cast<Eigen::Index>(e)) = cplx{1.0, 0.0};
    ens.entries.push_back({w, e, std::move(v)});
    cumulative += w;
    if (cumulative >= 1.0 - 1e-6) break;
  }
  ens.retained_weight = cumulative;
  for (auto& entry : ens.entries) entry.weight /= cumulative;
  return ens;
}

namespace detail {

inline Eigen::VectorXcd to_eigen(const CompositeState& psi) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(psi.dim()));
  const auto amp = psi.amplitudes();
  for (std::size_t i = 0; i < psi.dim(); ++i) v(static_cast<Eigen::Index>(i)) = amp[i];
  return v;
}

inline CompositeState from_eigen(std::size_t env_dim, const Eigen::VectorXcd& v) {
  std::vector<cplx> amp(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) amp[static_cast<std::size_t>(i)] = v(i);
  return CompositeState(env_dim, std::move(amp));
}

}  // namespace detail

// psi(t) = V exp(-i E t) V^dag psi0.
inline CompositeState evolve_exact(const SpinBosonSystem& sys, const CompositeState& psi0,
                                   double t) {
  if (psi0.dim() != static_cast<std::size_t>(sys.hamiltonian.rows())) {
    throw data_error("evolve_exact: state dimension " + std::to_string(psi0.dim()) +
                     " does not match system dimension " +
                     std::to_string(sys.hamiltonian.rows()));
  }
  if (t == 0.0) return psi0;
  Eigen::VectorXcd coeff = sys.eigenvectors.adjoint() * detail::to_eigen(psi0);
  for (Eigen::Index i = 0; i < coeff.size(); ++i) {
    coeff(i) *= std::polar(1.0, -sys.eigenvalues(i) * t);
  }
  return detail::from_eigen(sys.env_dim, Eigen::VectorXcd(sys.eigenvectors * coeff));
}

struct ThermalCorrelatorResult {
  double correlator = 0.0;     // sum_n w_n P_n (1 - P_n)
  WeightedEnsemble ensemble;   // the (w_n, P_n) pairs for downstream analysis
};

// Thermal localization correlator: each Gibbs entry starts as |L> tensor
// |E_n>, is evolved to time t, and contributes w_n P_n (1 - P_n) with P_n the
// left-well occupation.
inline ThermalCorrelatorResult thermal_correlator(const SpinBosonSystem& sys,
                                                  const GibbsEnsembleStates& ens,
                                                  double t) {
  if (ens.entries.empty()) throw estimation_error("thermal_correlator: empty Gibbs ensemble");
  std::vector<WeightedSample> samples;
  samples.reserve(ens.entries.size());
  for (const auto& entry : ens.entries) {
    std::vector<cplx> phi(static_cast<std::size_t>(entry.env_state.size()));
    for (Eigen::Index i = 0; i < entry.env_state.size(); ++i) {
      phi[static_cast<std::size_t>(i)] = entry.env_state(i);
    }
    const CompositeState psi0 = tensor_embed(TwoLevelState::left(), phi);
    const CompositeState psi_t = evolve_exact(sys, psi0, t);
    const double p = std::clamp(left_population(psi_t), 0.0, 1.0);
    samples.push_back({entry.weight, p});
  }
  WeightedEnsemble we(std::move(samples));
  const double corr = localization_correlator(we);
  return {corr, std::move(we)};
}

struct PreparedState {
  CompositeState state;        // the entangled superposed state at t_p
  double nu_L = 0.0;           // sqrt of left-well probability
  double nu_R = 0.0;
  Eigen::VectorXcd env_L;      // normalized conditional environment at s = L
  Eigen::VectorXcd env_R;      // normalized conditional environment at s = R (zero if nu_R ~ 0)
};

// Evolve |L> tensor env0 under the symmetric Hamiltonian for t_p and split the
// result into nu_L |L>|P_LL> + nu_R |R>|P_LR>. Requires the system to have
// been built with epsilon = 0.
inline PreparedState prepare_superposed(const SpinBosonSystem& sys,
                                        const Eigen::VectorXcd& env0, double t_p) {
  if (sys.epsilon != 0.0) {
    throw precondition_error("prepare_superposed: system must be built with epsilon = 0");
  }
  if (env0.size() != static_cast<Eigen::Index>(sys.env_dim)) {
    throw data_error("prepare_superposed: environment vector has wrong dimension");
  }
  std::vector<cplx> phi(static_cast<std::size_t>(env0.size()));
  for (Eigen::Index i = 0; i < env0.size(); ++i) phi[static_cast<std::size_t>(i)] = env0(i);
  CompositeState psi = evolve_exact(sys, tensor_embed(TwoLevelState::left(), phi), t_p);

  const std::size_t d = sys.env_dim;
  Eigen::VectorXcd env_L = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d));
  Eigen::VectorXcd env_R = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d));
  double p_L = 0.0;
  double p_R = 0.0;
  for (std::size_t e = 0; e < d; ++e) {
    env_L(static_cast<Eigen::Index>(e)) = psi.at(0, e);
    env_R(static_cast<Eigen::Index>(e)) = psi.at(1, e);
    p_L += std::norm(psi.at(0, e));
    p_R += std::norm(psi.at(1, e));
  }
  PreparedState prep{std::move(psi), std::sqrt(p_L), std::sqrt(p_R),
                     Eigen::VectorXcd(), Eigen::VectorXcd()};
  constexpr double kBranchFloor = 1e-15;
  prep.env_L = (prep.nu_L > kBranchFloor) ? Eigen::VectorXcd(env_L / prep.nu_L)
                                          : Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d));
  prep.env_R = (prep.nu_R > kBranchFloor) ? Eigen::VectorXcd(env_R / prep.nu_R)
                                          : Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d));
  return prep;
}

// Windowed occupational asymmetry: average of P_L(t) - P_R(t) over n_samples
// midpoint times in (t_a, t_b). A finite system recurs, so the window stands
// in for the long-time limit; callers record the window used.
inline double occupational_asymmetry(const SpinBosonSystem& sys, const CompositeState& psi_s,
                                     double t_a, double t_b, int n_samples) {
  if (!(t_a >= 0.0) || !(t_b > t_a)) {
    throw config_error("occupational_asymmetry: need 0 <= t_a < t_b");
  }
  if (n_samples < 1) throw config_error("occupational_asymmetry: n_samples must be >= 1");
  const double h = (t_b - t_a) / n_samples;
  CompensatedSum sum;
  for (int k = 0; k < n_samples; ++k) {
    const double t = t_a + (k + 0.5) * h;
    const double p_left = left_population(evolve_exact(sys, psi_s, t));
    sum.add(2.0 * p_left - 1.0);
  }
  return sum.value() / n_samples;
}

}  // namespace catprobe
