#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "catprobe/errors.hpp"

// Exact linear-algebra substrate for a two-level system coupled to an
// environment. Conventions, fixed throughout the library:
//   basis |L> = (1, 0), |R> = (0, 1); spin dictionary |up> == |L>;
//   hbar = 1, energies and rates share units, times are inverse energies;
//   composite flat index = s * dim_env + e with s in {0 = L, 1 = R}.

namespace catprobe {

using cplx = std::complex<double>;

inline constexpr double kNormTol = 1e-12;

// Normalized amplitude pair over {|L>, |R>}.
struct TwoLevelState {
  cplx amp_L{1.0, 0.0};
  cplx amp_R{0.0, 0.0};

  double norm_sq() const { return std::norm(amp_L) + std::norm(amp_R); }

  static TwoLevelState left() { return {cplx{1.0, 0.0}, cplx{0.0, 0.0}}; }
  static TwoLevelState right() { return {cplx{0.0, 0.0}, cplx{1.0, 0.0}}; }
  // (|L> + |R>)/sqrt(2)
  static TwoLevelState plus() {
    return {cplx{M_SQRT1_2, 0.0}, cplx{M_SQRT1_2, 0.0}};
  }
  // (|L> - |R>)/sqrt(2)
  static TwoLevelState minus() {
    return {cplx{M_SQRT1_2, 0.0}, cplx{-M_SQRT1_2, 0.0}};
  }
  // (|L> + i|R>)/sqrt(2)
  static TwoLevelState plus_i() {
    return {cplx{M_SQRT1_2, 0.0}, cplx{0.0, M_SQRT1_2}};
  }

  static TwoLevelState normalized(cplx amp_L, cplx amp_R) {
    const double n = std::sqrt(std::norm(amp_L) + std::norm(amp_R));
    if (n == 0.0) throw precondition_error("cannot normalize the zero state");
    return {amp_L / n, amp_R / n};
  }
};

inline void require_normalized(const TwoLevelState& psi, double tol = kNormTol) {
  if (std::abs(psi.norm_sq() - 1.0) > tol) {
    throw precondition_error("two-level state is not normalized: |norm^2 - 1| = " +
                             std::to_string(std::abs(psi.norm_sq() - 1.0)));
  }
}

struct BlochVector {
  double x;
  double y;
  double z;
};

// Spin-direction picture of a pure two-level state.
// z is computed as 2|amp_L|^2 - 1 so that z == 2*P(L) - 1 holds in the same
// arithmetic; it agrees with |amp_L|^2 - |amp_R|^2 within the norm tolerance.
inline BlochVector bloch_vector(const TwoLevelState& psi) {
  require_normalized(psi);
  const cplx cross = std::conj(psi.amp_L) * psi.amp_R;
  return {2.0 * cross.real(), 2.0 * cross.imag(), 2.0 * std::norm(psi.amp_L) - 1.0};
}

// Single-step evolution operator, a 2x2 unitary.
struct StepUnitary {
  cplx u00{1.0, 0.0};
  cplx u01{0.0, 0.0};
  cplx u10{0.0, 0.0};
  cplx u11{1.0, 0.0};

  TwoLevelState apply(const TwoLevelState& psi) const {
    return {u00 * psi.amp_L + u01 * psi.amp_R, u10 * psi.amp_L + u11 * psi.amp_R};
  }
};

// U = exp(-i dt [ (delta/2) sigma_x + (eta/2) sigma_z ]), evaluated in closed
// form (Rodrigues 2x2 formula):
//   U = cos(theta) I - i sin(theta) (n . sigma),
//   theta = dt sqrt(delta^2 + eta^2) / 2,  n = (delta, 0, eta) normalized.
// Exactly unitary up to floating rounding; norm drift <= 1e-14 per application.
inline StepUnitary step_propagator(double delta, double eta, double dt) {
  if (!(dt > 0.0)) throw config_error("step_propagator: dt must be > 0");
  const double omega = std::sqrt(delta * delta + eta * eta);
  if (omega == 0.0) return StepUnitary{};
  const double theta = 0.5 * dt * omega;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double nx = delta / omega;
  const double nz = eta / omega;
  return StepUnitary{cplx{c, -s * nz}, cplx{0.0, -s * nx}, cplx{0.0, -s * nx},
                     cplx{c, s * nz}};
}

// Dense normalized vector on (two-level x environment), flat index s*dim_env + e.
class CompositeState {
 public:
  CompositeState(std::size_t dim_env, std::vector<cplx> amplitudes)
      : dim_env_(dim_env), amp_(std::move(amplitudes)) {
    if (dim_env_ == 0) throw config_error("CompositeState: environment dimension must be > 0");
    if (amp_.size() != 2 * dim_env_) {
      throw data_error("CompositeState: amplitude vector must have length 2*dim_env");
    }
  }

  std::size_t dim_env() const { return dim_env_; }
  std::size_t dim() const { return amp_.size(); }

  const cplx& at(int s, std::size_t e) const { return amp_[static_cast<std::size_t>(s) * dim_env_ + e]; }
  cplx& at(int s, std::size_t e) { return amp_[static_cast<std::size_t>(s) * dim_env_ + e]; }

  std::span<const cplx> amplitudes() const { return amp_; }
  std::span<cplx> amplitudes() { return amp_; }

  // Environment slice at fixed two-level index s.
  std::span<const cplx> env_slice(int s) const {
    return std::span<const cplx>(amp_).subspan(static_cast<std::size_t>(s) * dim_env_, dim_env_);
  }

  double norm_sq() const {
    double n = 0.0;
    for (const cplx& a : amp_) n += std::norm(a);
    return n;
  }
  double norm() const { return std::sqrt(norm_sq()); }

 private:
  std::size_t dim_env_;
  std::vector<cplx> amp_;
};

inline void require_normalized(const CompositeState& psi, double tol = kNormTol) {
  if (std::abs(psi.norm() - 1.0) > tol) {
    throw precondition_error("composite state is not normalized: |norm - 1| = " +
                             std::to_string(std::abs(psi.norm() - 1.0)));
  }
}

// 2x2 reduced density matrix over {|L>, |R>}.
struct DensityMatrix2 {
  cplx ll{0.0, 0.0};
  cplx lr{0.0, 0.0};
  cplx rl{0.0, 0.0};
  cplx rr{0.0, 0.0};

  cplx trace() const { return ll + rr; }
  double purity() const {
    // tr(rho^2) for the stored entries
    return std::norm(ll) + std::norm(rr) + 2.0 * std::norm(lr);
  }
  // Eigenvalues of a 2x2 Hermitian matrix in closed form, ascending.
  std::array<double, 2> eigenvalues() const {
    const double tr = ll.real() + rr.real();
    const double diff = ll.real() - rr.real();
    const double disc = std::sqrt(diff * diff / 4.0 + std::norm(lr));
    return {tr / 2.0 - disc, tr / 2.0 + disc};
  }
  bool is_valid(double herm_tol = 1e-12, double trace_tol = 1e-12,
                double eig_floor = -1e-10) const {
    const bool hermitian = std::abs(lr - std::conj(rl)) <= herm_tol &&
                           std::abs(ll.imag()) <= herm_tol &&
                           std::abs(rr.imag()) <= herm_tol;
    const bool unit_trace = std::abs(trace() - 1.0) <= trace_tol;
    return hermitian && unit_trace && eigenvalues()[0] >= eig_floor;
  }
};

// Partial trace over the environment:
//   rho[s, s'] = sum_e A(s, e) conj(A(s', e)).
// Diagonals are accumulated as real magnitudes; rho_RL is conj(rho_LR) by
// construction, so the result is Hermitian exactly.
inline DensityMatrix2 reduced_density(const CompositeState& psi) {
  require_normalized(psi);
  double p_ll = 0.0;
  double p_rr = 0.0;
  cplx lr{0.0, 0.0};
  for (std::size_t e = 0; e < psi.dim_env(); ++e) {
    const cplx aL = psi.at(0, e);
    const cplx aR = psi.at(1, e);
    p_ll += std::norm(aL);
    p_rr += std::norm(aR);
    lr += aL * std::conj(aR);
  }
  return DensityMatrix2{cplx{p_ll, 0.0}, lr, std::conj(lr), cplx{p_rr, 0.0}};
}

// Probability of finding the two-level system in |L>, traced over the environment.
inline double left_population(const CompositeState& psi) {
  double p = 0.0;
  for (std::size_t e = 0; e < psi.dim_env(); ++e) p += std::norm(psi.at(0, e));
  return p;
}

// |psi> tensor |phi>: amplitudes(s, e) = psi_s * phi_e.
inline CompositeState tensor_embed(const TwoLevelState& psi, std::span<const cplx> phi) {
  if (phi.empty()) throw config_error("tensor_embed: environment dimension must be > 0");
  require_normalized(psi);
  double phi_norm_sq = 0.0;
  for (const cplx& a : phi) phi_norm_sq += std::norm(a);
  if (std::abs(std::sqrt(phi_norm_sq) - 1.0) > kNormTol) {
    throw precondition_error("tensor_embed: environment vector is not normalized");
  }
  std::vector<cplx> amp(2 * phi.size());
  for (std::size_t e = 0; e < phi.size(); ++e) {
    amp[e] = psi.amp_L * phi[e];
    amp[phi.size() + e] = psi.amp_R * phi[e];
  }
  return CompositeState(phi.size(), std::move(amp));
}

}  // namespace catprobe
