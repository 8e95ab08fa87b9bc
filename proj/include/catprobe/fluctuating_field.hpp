#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "catprobe/errors.hpp"
#include "catprobe/qstate.hpp"
#include "catprobe/rng.hpp"

// Per-realization unitary evolution of a two-level system under a classical
// Gaussian white-noise bias eta(t) with <eta(t) eta(t')> = Gamma delta(t-t').
//
// Discretization: eta is piecewise constant over steps of dt with per-step
// variance Gamma/dt, and each step applies the exact propagator
// exp(-i dt [ (delta/2) sigma_x + (eta_j/2) sigma_z ]). Every trajectory is a
// pure function of (master_seed, trajectory_id).

namespace catprobe {

struct NoiseProcess {
  double gamma = 0.0;            // noise strength Gamma >= 0
  double dt = 0.0;               // time step > 0
  std::uint64_t master_seed = 0;

  void validate() const {
    if (!(gamma >= 0.0)) throw config_error("NoiseProcess: gamma must be >= 0");
    if (!(dt > 0.0)) throw config_error("NoiseProcess: dt must be > 0");
  }

  double step_sigma() const { return std::sqrt(gamma / dt); }

  // Bias value held constant over step `step` of trajectory `trajectory_id`.
  double eta(std::uint64_t trajectory_id, std::uint64_t step) const {
    if (gamma == 0.0) return 0.0;
    return step_sigma() * rng::gaussian(master_seed, trajectory_id, step);
  }
};

inline std::vector<double> sample_noise_path(const NoiseProcess& proc,
                                             std::size_t n_steps,
                                             std::uint64_t trajectory_id) {
  proc.validate();
  if (n_steps < 1) throw config_error("sample_noise_path: n_steps must be >= 1");
  std::vector<double> path(n_steps);
  for (std::size_t j = 0; j < n_steps; ++j) path[j] = proc.eta(trajectory_id, j);
  return path;
}

struct Trajectory {
  std::uint64_t trajectory_id = 0;
  std::vector<double> times;   // strictly increasing, starts at 0
  std::vector<double> p_LL;    // |amp_L|^2 at the recorded times
  TwoLevelState final_state;
};

// Evolve psi0 for n_steps of proc.dt, recording t = 0, every record_stride-th
// step, and the final step. The noise path is derived from
// (proc.master_seed, trajectory_id).
inline Trajectory evolve_trajectory(double delta, const NoiseProcess& proc,
                                    const TwoLevelState& psi0, std::size_t n_steps,
                                    std::size_t record_stride = 1,
                                    std::uint64_t trajectory_id = 0) {
  proc.validate();
  require_normalized(psi0);
  if (record_stride == 0) record_stride = 1;

  Trajectory traj;
  traj.trajectory_id = trajectory_id;
  auto record = [&traj](double t, const TwoLevelState& psi) {
    traj.times.push_back(t);
    double p = std::norm(psi.amp_L);
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    traj.p_LL.push_back(p);
  };

  TwoLevelState psi = psi0;
  record(0.0, psi);
  for (std::size_t j = 0; j < n_steps; ++j) {
    psi = step_propagator(delta, proc.eta(trajectory_id, j), proc.dt).apply(psi);
    const std::size_t done = j + 1;
    if (done % record_stride == 0 || done == n_steps) {
      record(static_cast<double>(done) * proc.dt, psi);
    }
  }
  traj.final_state = psi;
  return traj;
}

// Exact Gaussian-average coherence decay for the delta = 0 limit:
// <rho_LR(t)> = rho_LR(0) exp(-Gamma t / 2). Second-cumulant identity, exact
// for Gaussian white noise; used as a test oracle for the Monte Carlo average.
inline std::vector<double> dephasing_envelope(double gamma, std::span<const double> times) {
  if (!(gamma >= 0.0)) throw config_error("dephasing_envelope: gamma must be >= 0");
  std::vector<double> env(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) env[i] = std::exp(-0.5 * gamma * times[i]);
  return env;
}

}  // namespace catprobe
