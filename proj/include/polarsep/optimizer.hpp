#pragma once

#include "polarsep/lbfgs.hpp"
#include "polarsep/rpca.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace polarsep {

enum class RdSolver { ClosedForm, Lbfgs };

template <typename Scalar>
struct SeparationParamsT {
  Scalar rho_pol0 = Scalar(1.1);
  Scalar rho0 = Scalar(1.1);
  Scalar penalty_growth = Scalar(1.05);
  int max_iter = 50;
  Scalar epsilon = Scalar(1e-3);
  Scalar t = Scalar(0.03);      // chromatic threshold
  Scalar tau_s = Scalar(0.02);  // pure-diffuse classification threshold
  RdSolver solver = RdSolver::ClosedForm;
  bool consistent_output = false;
  int threads = 0;
  RpcaOptionsT<Scalar> rpca{};
  ClusterOptions cluster{};

  void check() const {
    if (!(rho_pol0 > Scalar(0)) || !(rho0 > Scalar(0)) ||
        !(penalty_growth > Scalar(0)) || !(epsilon > Scalar(0)) ||
        !(t > Scalar(0)) || !(tau_s > Scalar(0)))
      throw SpecError("separation parameters must be positive");
    if (max_iter < 1) throw SpecError("max_iter must be >= 1");
  }
};

enum class StopReason { Converged, MaxIter };

inline const char* to_string(StopReason r) {
  return r == StopReason::Converged ? "converged" : "max_iter";
}

template <typename Scalar>
struct IterationStatsT {
  int k = 0;                // 1-based iteration index
  Scalar delta_s = 0;       // ||S^{k+1} - S^k||_F / sqrt(3N)
  Scalar delta_s_pol = 0;   // ||S_pol^{k+1} - S_pol^k||_F / sqrt(3N)
  Scalar data_residual = 0; // ||I - R_D - R_S||_F / sqrt(3N)
  Scalar lambda = 0;
  Scalar rho = 0;           // penalties used by this iteration (pre-growth)
  Scalar rho_pol = 0;
  Index active_pixels = 0;  // N_s entering the lambda update
};

template <typename Scalar>
struct SeparationResultT {
  RgbImageT<Scalar> diffuse;   // R_D
  RgbImageT<Scalar> specular;  // R_S
  int iterations = 0;
  StopReason stop_reason = StopReason::MaxIter;
  std::vector<IterationStatsT<Scalar>> history;
};

// All per-pixel state of the global solver; every multiplier and penalty
// of the augmented Lagrangian lives here.
template <typename Scalar>
struct SeparationStateT {
  PixelMatrix<Scalar> r_d, r_s;      // current estimates
  PixelMatrix<Scalar> s_mul, s_pol;  // Lagrange multipliers S, S_pol
  PixelMatrix<Scalar> y, y_pol;      // scaled multipliers S/rho, S_pol/rho_pol
  PixelMatrix<Scalar> f_d;           // cached polarization-guided prior f(D)
  Scalar rho = 0, rho_pol = 0;
  Scalar lambda = 0;
  int k = 0;
};

// Minimizer of
//   rho_pol/2 ||R_D - (f_d - y_pol)||_F^2 + rho/2 ||R_D - (I - R_S + y)||_F^2.
// The closed form is the penalty-weighted average of the two targets; the
// quasi-Newton route minimizes the same strictly convex quadratic and is
// kept for parity with the reference procedure. A failed line search
// falls back to the closed form.
template <typename Scalar>
PixelMatrix<Scalar> solve_rd(const PixelMatrix<Scalar>& f_d,
                             const PixelMatrix<Scalar>& y_pol,
                             const PixelMatrix<Scalar>& i,
                             const PixelMatrix<Scalar>& r_s,
                             const PixelMatrix<Scalar>& y, Scalar rho_pol,
                             Scalar rho, RdSolver method = RdSolver::ClosedForm,
                             bool* line_search_fell_back = nullptr) {
  if (!(rho > Scalar(0)) || !(rho_pol > Scalar(0)))
    throw SpecError("penalties must be positive");
  const PixelMatrix<Scalar> a = f_d - y_pol;
  const PixelMatrix<Scalar> b = i - r_s + y;
  if (line_search_fell_back != nullptr) *line_search_fell_back = false;

  if (method == RdSolver::Lbfgs) {
    const VectorX<Scalar> va = a.reshaped();
    const VectorX<Scalar> vb = b.reshaped();
    VectorX<Scalar> x = VectorX<Scalar>::Zero(va.size());
    const auto objective = [&](const VectorX<Scalar>& v, VectorX<Scalar>& grad) {
      const VectorX<Scalar> da = v - va;
      const VectorX<Scalar> db = v - vb;
      grad = rho_pol * da + rho * db;
      return Scalar(0.5) * (rho_pol * da.squaredNorm() + rho * db.squaredNorm());
    };
    const LbfgsStatus status = lbfgs_minimize<Scalar>(objective, x);
    if (status != LbfgsStatus::LineSearchFailed)
      return x.reshaped(i.rows(), 3);
    if (line_search_fell_back != nullptr) *line_search_fell_back = true;
  }
  return (rho_pol * a + rho * b) / (rho_pol + rho);
}

// Proximal step for R_S: shrink I - R_D + y by lambda/rho, then clamp the
// negative entries to zero.
template <typename Scalar>
PixelMatrix<Scalar> solve_rs(const PixelMatrix<Scalar>& i,
                             const PixelMatrix<Scalar>& r_d,
                             const PixelMatrix<Scalar>& y, Scalar lambda,
                             Scalar rho) {
  if (!(rho > Scalar(0))) throw SpecError("rho must be positive");
  if (lambda < Scalar(0)) throw SpecError("lambda must be >= 0");
  return soft_threshold((i - r_d + y).eval(), lambda / rho).cwiseMax(Scalar(0));
}

// A pixel counts as specular-active when any channel of its R_S row
// exceeds 1e-6.
template <typename Scalar>
Index count_active_pixels(const PixelMatrix<Scalar>& r_s) {
  return ((r_s.array() > Scalar(1e-6)).rowwise().any()).count();
}

// lambda = 1 / sqrt(N_s); an all-zero R_S falls back to the total pixel
// count so the weight stays finite.
template <typename Scalar>
Scalar update_lambda(const PixelMatrix<Scalar>& r_s) {
  Index n_s = count_active_pixels(r_s);
  if (n_s == 0) n_s = r_s.rows();
  return Scalar(1) / std::sqrt(Scalar(n_s));
}

// Dual ascent plus the geometric penalty schedule:
//   S_pol += rho_pol (R_D - f(D)),  S += rho (I - R_D - R_S),
//   rho_pol *= growth, rho *= growth, then y, y_pol recomputed.
template <typename Scalar>
void update_multipliers(SeparationStateT<Scalar>& state,
                        const PixelMatrix<Scalar>& i, Scalar growth) {
  state.s_pol += state.rho_pol * (state.r_d - state.f_d);
  state.s_mul += state.rho * (i - state.r_d - state.r_s);
  state.rho_pol *= growth;
  state.rho *= growth;
  state.y_pol = state.s_pol / state.rho_pol;
  state.y = state.s_mul / state.rho;
}

namespace optimizer_detail {

template <typename Scalar>
Scalar frob_normalized(const PixelMatrix<Scalar>& m) {
  return m.norm() / std::sqrt(Scalar(3) * Scalar(m.rows()));
}

}  // namespace optimizer_detail

// The full separation pipeline of the global energy
//   ||I - R_D - R_S||^2 + ||R_D - f(D)||^2 + lambda ||R_S||_1
// where I is the constant image I_c recovered by the sinusoid fit.
// Chromaticity, classification and clustering are computed once from the
// raw diffuse image; the cluster prior f(D) is refreshed from R_D every
// iteration. Stops when both multiplier increments fall below epsilon
// (normalized Frobenius norm), or at max_iter.
template <typename Scalar>
SeparationResultT<Scalar> separate(const PolarizedStackT<Scalar>& stack,
                                   const SeparationParamsT<Scalar>& params = {}) {
  params.check();
  const TrsMapsT<Scalar> maps = fit_trs(stack);
  const RawComponentsT<Scalar> raw = raw_components(maps);
  const ChromaticityImageT<Scalar> chro = chromaticity(raw.raw_d);
  const PixelClassMap classes = classify_pixels(maps, raw, params.tau_s);
  const ClusterSetT<Scalar> clusters =
      build_clusters(chro, classes, params.t, params.cluster);

  const Index n = stack.pixels();
  const PixelMatrix<Scalar>& i_obs = maps.i_c;

  SeparationStateT<Scalar> state;
  state.r_d = raw.raw_d.samples;
  state.r_s = raw.raw_s.samples;
  state.s_mul = PixelMatrix<Scalar>::Zero(n, 3);
  state.s_pol = PixelMatrix<Scalar>::Zero(n, 3);
  state.y = PixelMatrix<Scalar>::Zero(n, 3);
  state.y_pol = PixelMatrix<Scalar>::Zero(n, 3);
  state.rho = params.rho0;
  state.rho_pol = params.rho_pol0;

  PgmOptionsT<Scalar> pgm_opts;
  pgm_opts.rpca = params.rpca;
  pgm_opts.threads = params.threads;

  RgbImageT<Scalar> r_d_image;
  r_d_image.width = stack.width;
  r_d_image.height = stack.height;

  SeparationResultT<Scalar> result;
  result.stop_reason = StopReason::MaxIter;

  for (state.k = 1; state.k <= params.max_iter; ++state.k) {
    IterationStatsT<Scalar> it;
    it.k = state.k;
    it.rho = state.rho;
    it.rho_pol = state.rho_pol;

    r_d_image.samples = state.r_d;
    state.f_d = pgm_apply(r_d_image, clusters, pgm_opts).samples;

    state.r_d = solve_rd(state.f_d, state.y_pol, i_obs, state.r_s, state.y,
                         state.rho_pol, state.rho, params.solver);

    it.active_pixels = count_active_pixels(state.r_s);
    state.lambda = update_lambda(state.r_s);
    it.lambda = state.lambda;

    state.r_s = solve_rs(i_obs, state.r_d, state.y, state.lambda, state.rho);

    const PixelMatrix<Scalar> ds_pol = state.rho_pol * (state.r_d - state.f_d);
    const PixelMatrix<Scalar> ds = state.rho * (i_obs - state.r_d - state.r_s);
    update_multipliers(state, i_obs, params.penalty_growth);

    it.delta_s = optimizer_detail::frob_normalized(ds);
    it.delta_s_pol = optimizer_detail::frob_normalized(ds_pol);
    it.data_residual =
        optimizer_detail::frob_normalized<Scalar>(i_obs - state.r_d - state.r_s);
    result.history.push_back(it);
    result.iterations = state.k;

    if (it.delta_s < params.epsilon && it.delta_s_pol < params.epsilon) {
      result.stop_reason = StopReason::Converged;
      break;
    }
  }

  result.diffuse.width = result.specular.width = stack.width;
  result.diffuse.height = result.specular.height = stack.height;
  if (params.consistent_output) {
    // Exact additivity against the constant image: R_S is capped at I_c
    // so both outputs stay nonnegative and sum to I_c precisely.
    result.specular.samples = state.r_s.cwiseMin(i_obs);
    result.diffuse.samples = i_obs - result.specular.samples;
  } else {
    result.specular.samples = state.r_s;
    result.diffuse.samples = state.r_d.cwiseMax(Scalar(0));
  }
  return result;
}

}  // namespace polarsep
