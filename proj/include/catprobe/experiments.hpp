#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "catprobe/ensemble.hpp"
#include "catprobe/errors.hpp"
#include "catprobe/finite_bath.hpp"
#include "catprobe/fluctuating_field.hpp"
#include "catprobe/parallel.hpp"
#include "catprobe/qstate.hpp"

// Experiment drivers shared by the CLI and the acceptance suite. All
// parallelism goes through fixed-size blocks merged in block order, so every
// result is a pure function of the parameters and the seed, independent of
// the worker count.

namespace catprobe {

// ---------------------------------------------------------------------------
// fluctuating-field

struct FluctuatingFieldParams {
  double delta = 1.0;
  double gamma = 1.0;
  double dt = 0.0;                // 0: auto, 0.02 * min(1/delta, 1/gamma)
  std::uint64_t trajectories = 10000;
  int k_max = 4;
  std::uint64_t seed = 0;
  double t_max = 0.0;             // 0: auto, 500 / min(delta, gamma)
  std::size_t record_stride = 0;  // 0: auto, about 512 recorded points
  TwoLevelState psi0 = TwoLevelState::left();
  unsigned threads = 0;           // 0: hardware concurrency
  bool stop_at_stationarity = true;
};

struct RecordPoint {
  double t = 0.0;
  double rho_ll = 0.0;
  double re_rho_lr = 0.0;
  double im_rho_lr = 0.0;
  double correlator = 0.0;
  double n_eff = 0.0;
};

struct MomentsAtTime {
  double t = 0.0;
  std::vector<double> estimate;  // k = 1..k_max
};

struct FluctuatingFieldResult {
  MomentReport report;                     // evaluated at report.evaluated_at_time
  bool stationarity_reached = false;
  std::vector<RecordPoint> series;         // ensemble averages on the record grid
  std::vector<MomentsAtTime> moments_vs_time;  // one entry per checkpoint
  double max_norm_error = 0.0;             // max | ||psi|| - 1 | seen at checkpoints
  double dt = 0.0;                         // resolved step
  double t_max = 0.0;                      // resolved horizon (before any early stop)
  std::size_t record_stride = 0;           // resolved stride
  std::uint64_t n_steps = 0;               // steps actually executed
};

namespace detail {

// min over the strictly positive arguments; +inf if none
inline double positive_min(double a, double b) {
  double m = std::numeric_limits<double>::infinity();
  if (a > 0.0) m = std::min(m, a);
  if (b > 0.0) m = std::min(m, b);
  return m;
}

}  // namespace detail

inline double default_dt(double delta, double gamma) {
  const double rate = detail::positive_min(delta, gamma);
  return std::isfinite(rate) ? 0.02 / rate : 0.01;
}

inline double default_t_max(double delta, double gamma) {
  const double rate = detail::positive_min(delta, gamma);
  return std::isfinite(rate) ? 500.0 / rate : 10.0;
}

inline FluctuatingFieldResult run_fluctuating_field(FluctuatingFieldParams params) {
  if (params.trajectories < 2) {
    throw config_error("fluctuating-field: need at least 2 trajectories");
  }
  if (params.k_max < 1) throw config_error("fluctuating-field: k_max must be >= 1");
  if (params.dt == 0.0) params.dt = default_dt(params.delta, params.gamma);
  if (params.t_max == 0.0) params.t_max = default_t_max(params.delta, params.gamma);
  if (!(params.dt > 0.0)) throw config_error("fluctuating-field: dt must be > 0");
  if (!(params.t_max > 0.0)) throw config_error("fluctuating-field: t_max must be > 0");
  require_normalized(params.psi0);

  const NoiseProcess proc{params.gamma, params.dt, params.seed};
  proc.validate();

  const auto n_steps =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(params.t_max / params.dt)));
  std::size_t stride = params.record_stride;
  if (stride == 0) stride = std::max<std::uint64_t>(1, n_steps / 512);

  // Stationarity checkpoints: the moments of P across trajectories are
  // compared between successive windows of length W; the run is stationary at
  // the first checkpoint (from the second onward) where every k <= 4 moment
  // drifts by less than max(0.005, its standard error).
  const double rate = detail::positive_min(params.delta, params.gamma);
  double window = std::isfinite(rate) ? 10.0 / rate : params.t_max / 4.0;
  window = std::min(window, params.t_max / 4.0);
  const auto w_steps =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(window / params.dt)));

  const unsigned threads = resolve_threads(params.threads);
  constexpr std::uint64_t kBlockSize = 256;
  const std::uint64_t n_traj = params.trajectories;
  const std::size_t n_blocks = static_cast<std::size_t>((n_traj + kBlockSize - 1) / kBlockSize);
  const double n_traj_d = static_cast<double>(n_traj);

  std::vector<TwoLevelState> states(n_traj, params.psi0);

  FluctuatingFieldResult result;
  result.dt = params.dt;
  result.t_max = static_cast<double>(n_steps) * params.dt;
  result.record_stride = stride;

  {  // the t = 0 record: identical for every trajectory
    const double p0 = std::clamp(std::norm(params.psi0.amp_L), 0.0, 1.0);
    const cplx lr0 = params.psi0.amp_L * std::conj(params.psi0.amp_R);
    result.series.push_back({0.0, p0, lr0.real(), lr0.imag(), p0 * (1.0 - p0), n_traj_d});
  }

  const int k_drift = std::min(params.k_max, 4);
  std::optional<MomentReport> previous;
  std::uint64_t step_done = 0;
  bool stop = false;

  while (step_done < n_steps && !stop) {
    const std::uint64_t g0 = step_done;
    const std::uint64_t g1 = std::min<std::uint64_t>(n_steps, g0 + w_steps);

    // recorded global steps inside (g0, g1]
    std::vector<std::uint64_t> rec;
    for (std::uint64_t g = (g0 / stride + 1) * stride; g <= g1; g += stride) rec.push_back(g);
    if (g1 == n_steps && (rec.empty() || rec.back() != n_steps)) rec.push_back(n_steps);

    struct BlockOut {
      std::vector<std::array<CompensatedSum, 4>> sums;  // p, Re lr, Im lr, p(1-p)
      std::optional<MomentAccumulator> checkpoint;
      double max_norm_error = 0.0;
    };
    std::vector<BlockOut> outs(n_blocks);

    parallel_for_blocks(n_blocks, threads, [&](std::size_t b) {
      BlockOut out;
      out.sums.resize(rec.size());
      out.checkpoint.emplace(params.k_max);
      const std::uint64_t id_begin = static_cast<std::uint64_t>(b) * kBlockSize;
      const std::uint64_t id_end = std::min<std::uint64_t>(n_traj, id_begin + kBlockSize);
      for (std::uint64_t id = id_begin; id < id_end; ++id) {
        TwoLevelState psi = states[id];
        std::size_t ri = 0;
        for (std::uint64_t g = g0; g < g1; ++g) {
          psi = step_propagator(params.delta, proc.eta(id, g), params.dt).apply(psi);
          if (ri < rec.size() && g + 1 == rec[ri]) {
            const double p = std::clamp(std::norm(psi.amp_L), 0.0, 1.0);
            const cplx lr = psi.amp_L * std::conj(psi.amp_R);
            out.sums[ri][0].add(p);
            out.sums[ri][1].add(lr.real());
            out.sums[ri][2].add(lr.imag());
            out.sums[ri][3].add(p * (1.0 - p));
            ++ri;
          }
        }
        states[id] = psi;
        out.max_norm_error =
            std::max(out.max_norm_error, std::abs(std::sqrt(psi.norm_sq()) - 1.0));
        out.checkpoint->add(1.0, std::clamp(std::norm(psi.amp_L), 0.0, 1.0));
      }
      outs[b] = std::move(out);
    });

    // ordered merge across blocks
    std::vector<std::array<CompensatedSum, 4>> totals(rec.size());
    MomentAccumulator checkpoint(params.k_max);
    for (const auto& out : outs) {
      for (std::size_t ri = 0; ri < rec.size(); ++ri) {
        for (int c = 0; c < 4; ++c) totals[ri][static_cast<std::size_t>(c)].merge(out.sums[ri][static_cast<std::size_t>(c)]);
      }
      checkpoint.merge(*out.checkpoint);
      result.max_norm_error = std::max(result.max_norm_error, out.max_norm_error);
    }
    for (std::size_t ri = 0; ri < rec.size(); ++ri) {
      result.series.push_back({static_cast<double>(rec[ri]) * params.dt,
                               totals[ri][0].value() / n_traj_d,
                               totals[ri][1].value() / n_traj_d,
                               totals[ri][2].value() / n_traj_d,
                               totals[ri][3].value() / n_traj_d, n_traj_d});
    }

    MomentReport report = checkpoint.report();
    report.evaluated_at_time = static_cast<double>(g1) * params.dt;

    MomentsAtTime at_time;
    at_time.t = report.evaluated_at_time;
    for (const auto& m : report.moments) at_time.estimate.push_back(m.estimate);
    result.moments_vs_time.push_back(std::move(at_time));

    bool stationary = false;
    if (previous) {
      stationary = true;
      for (int k = 0; k < k_drift; ++k) {
        const std::size_t i = static_cast<std::size_t>(k);
        const double drift = std::abs(report.moments[i].estimate - previous->moments[i].estimate);
        if (!(drift < std::max(0.005, report.moments[i].std_error))) {
          stationary = false;
          break;
        }
      }
    }
    previous = report;
    result.report = std::move(report);
    step_done = g1;
    if (stationary) {
      result.stationarity_reached = true;
      if (params.stop_at_stationarity) stop = true;
    }
  }

  result.n_steps = step_done;
  return result;
}

// ---------------------------------------------------------------------------
// finite-bath

struct FiniteBathParams {
  OhmicBathSpec spec;
  double delta = 1.0;
  double epsilon = 0.0;
  std::vector<double> t_grid;     // evaluation times, strictly increasing
  int k_max = 4;
  unsigned threads = 0;
  std::optional<double> t_p;      // preparation diagnostics when set
  bool compute_asymmetry = false;
  double asym_t_a = 0.0;          // 0/0: auto, [0.8 t_last, t_last]
  double asym_t_b = 0.0;
  int asym_samples = 64;
};

struct PreparationInfo {
  double t_p = 0.0;
  double nu_L = 0.0;
  double nu_R = 0.0;
  double branch_overlap = 0.0;  // |<P_LL | P_LR>|
};

struct BathCorrelatorPoint {
  double t = 0.0;
  double correlator = 0.0;
  double n_eff = 0.0;
};

struct FiniteBathResult {
  std::vector<BathCorrelatorPoint> correlator_t;
  MomentReport report;            // ensemble at the last grid time
  std::size_t hilbert_dim = 0;
  std::size_t gibbs_entries = 0;
  std::optional<PreparationInfo> preparation;
  std::optional<double> asymmetry;
  double asym_t_a = 0.0;
  double asym_t_b = 0.0;
  int asym_samples = 0;
};

inline FiniteBathResult run_finite_bath(const FiniteBathParams& params) {
  params.spec.validate();
  if (params.t_grid.empty()) throw config_error("finite-bath: t_grid must not be empty");
  for (std::size_t i = 0; i < params.t_grid.size(); ++i) {
    if (!(params.t_grid[i] >= 0.0)) throw config_error("finite-bath: times must be >= 0");
    if (i > 0 && !(params.t_grid[i] > params.t_grid[i - 1])) {
      throw config_error("finite-bath: t_grid must be strictly increasing");
    }
  }
  if (params.k_max < 1) throw config_error("finite-bath: k_max must be >= 1");

  const auto sys = build_hamiltonian(params.spec, params.delta, params.epsilon);
  const auto gibbs = gibbs_ensemble_states(params.spec);

  FiniteBathResult result;
  result.hilbert_dim = static_cast<std::size_t>(sys.hamiltonian.rows());
  result.gibbs_entries = gibbs.entries.size();

  const std::size_t n_t = params.t_grid.size();
  std::vector<ThermalCorrelatorResult> per_time(n_t);
  parallel_for_blocks(n_t, resolve_threads(params.threads), [&](std::size_t i) {
    per_time[i] = thermal_correlator(sys, gibbs, params.t_grid[i]);
  });

  double n_eff = 0.0;
  {
    double sw = 0.0, sw2 = 0.0;
    for (const auto& e : gibbs.entries) {
      sw += e.weight;
      sw2 += e.weight * e.weight;
    }
    n_eff = sw * sw / sw2;
  }
  for (std::size_t i = 0; i < n_t; ++i) {
    result.correlator_t.push_back({params.t_grid[i], per_time[i].correlator, n_eff});
  }

  {
    MomentAccumulator acc(params.k_max);
    acc.add(per_time.back().ensemble);
    if (gibbs.entries.size() >= 2) {
      result.report = acc.report();
    } else {
      // a single Gibbs entry (zero-temperature limit) carries no spread
      MomentReport rep;
      rep.n_samples = 1;
      rep.n_eff = 1.0;
      const double p = per_time.back().ensemble.entries().front().p;
      double pk = 1.0;
      for (int k = 1; k <= params.k_max; ++k) {
        pk *= p;
        rep.moments.push_back({k, pk, 0.0});
      }
      rep.correlator = p * (1.0 - p);
      result.report = std::move(rep);
    }
    result.report.evaluated_at_time = params.t_grid.back();
  }

  if (params.t_p) {
    if (params.epsilon != 0.0) {
      throw config_error("finite-bath: preparation requires epsilon = 0");
    }
    Eigen::VectorXcd vacuum = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(sys.env_dim));
    vacuum(0) = cplx{1.0, 0.0};
    const auto prep = prepare_superposed(sys, vacuum, *params.t_p);
    result.preparation = PreparationInfo{*params.t_p, prep.nu_L, prep.nu_R,
                                         std::abs(prep.env_L.dot(prep.env_R))};
    if (params.compute_asymmetry) {
      double a = params.asym_t_a;
      double b = params.asym_t_b;
      if (!(b > a) || b == 0.0) {
        b = params.t_grid.back();
        a = 0.8 * b;
      }
      result.asymmetry =
          occupational_asymmetry(sys, prep.state, a, b, params.asym_samples);
      result.asym_t_a = a;
      result.asym_t_b = b;
      result.asym_samples = params.asym_samples;
    }
  } else if (params.compute_asymmetry) {
    throw config_error("finite-bath: asymmetry needs a prepared state (set t_p)");
  }

  return result;
}

// ---------------------------------------------------------------------------
// counterexample

struct CounterexampleParams {
  double overlap = 0.0;       // real <Phi_L | Phi_R> in [-1, 1]
  double nu_l = M_SQRT1_2;    // left amplitude in [0, 1]; nu_R = sqrt(1 - nu_L^2)
};

struct CounterexampleResult {
  double nu_L = 0.0;
  double nu_R = 0.0;
  double overlap = 0.0;
  cplx rho_lr{0.0, 0.0};
  double rho_lr_abs = 0.0;
  double rho_ll = 0.0;
  double rho_rr = 0.0;
};

// The exact two-environment-mode construction: a state delocalized over both
// wells whose reduced density matrix loses all off-diagonal weight as the
// environment factors become orthogonal.
inline CounterexampleResult run_counterexample(const CounterexampleParams& params) {
  if (!(params.overlap >= -1.0 && params.overlap <= 1.0)) {
    throw config_error("counterexample: overlap must lie in [-1, 1]");
  }
  if (!(params.nu_l >= 0.0 && params.nu_l <= 1.0)) {
    throw config_error("counterexample: nu must lie in [0, 1]");
  }
  const double nu_l = params.nu_l;
  const double nu_r = std::sqrt(1.0 - nu_l * nu_l);
  const double s = params.overlap;
  const double c = std::sqrt(std::max(0.0, 1.0 - s * s));
  // Phi_L = (1, 0), Phi_R = (s, c)
  const std::vector<cplx> amp{cplx{nu_l, 0.0}, cplx{0.0, 0.0}, cplx{nu_r * s, 0.0},
                              cplx{nu_r * c, 0.0}};
  const CompositeState psi(2, amp);
  const auto rho = reduced_density(psi);

  CounterexampleResult result;
  result.nu_L = nu_l;
  result.nu_R = nu_r;
  result.overlap = s;
  result.rho_lr = rho.lr;
  result.rho_lr_abs = std::abs(rho.lr);
  result.rho_ll = rho.ll.real();
  result.rho_rr = rho.rr.real();
  return result;
}

// ---------------------------------------------------------------------------
// synthetic

struct SyntheticParams {
  ScenarioKind kind = ScenarioKind::collapsed;
  std::uint64_t n = 1000;
  std::uint64_t seed = 0;
  int k_max = 4;
};

struct SyntheticResult {
  MomentReport report;
  double correlator = 0.0;           // direct sum w p (1-p) route
  DensityMatrix2 averaged_rho;       // from the lifted pure states
};

inline SyntheticResult run_synthetic(const SyntheticParams& params) {
  if (params.n < 2) throw config_error("synthetic: n must be >= 2");
  const auto ens = synthetic_scenario(params.kind, params.n, params.seed);
  MomentAccumulator acc(params.k_max);
  acc.add(ens);
  SyntheticResult result;
  result.report = acc.report();
  result.correlator = localization_correlator(ens);
  result.averaged_rho =
      averaged_density_matrix(synthetic_scenario_states(params.kind, params.n, params.seed));
  return result;
}

}  // namespace catprobe
