#include "polarsep/polarsep.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace polarsep;

namespace {

PixelMatrix<double> constant_rows(Index n, double r, double g, double b) {
  PixelMatrix<double> m(n, 3);
  for (Index p = 0; p < n; ++p) m.row(p) = Rgb<double>{r, g, b};
  return m;
}

}  // namespace

TEST_CASE("solve_rd closed form is the penalty-weighted average") {
  const auto zeros = PixelMatrix<double>::Zero(1, 3).eval();

  SUBCASE("equal penalties average the targets") {
    const auto r = solve_rd<double>(constant_rows(1, 0.2, 0.2, 0.2), zeros,
                                    constant_rows(1, 0.4, 0.4, 0.4), zeros,
                                    zeros, 1.0, 1.0);
    CHECK(r(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
  }
  SUBCASE("coincident targets are returned exactly") {
    const auto a = constant_rows(1, 0.37, 0.21, 0.85);
    const auto r = solve_rd<double>(a, zeros, a, zeros, zeros, 1.7, 0.3);
    CHECK((r - a).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("weights follow the penalties") {
    // rho_pol = 2 with A = 0.3, rho = 1 with B = 0.6: (0.6 + 0.6) / 3.
    const auto r = solve_rd<double>(constant_rows(1, 0.3, 0.3, 0.3), zeros,
                                    constant_rows(1, 0.6, 0.6, 0.6), zeros,
                                    zeros, 2.0, 1.0);
    CHECK(r(0, 0) == doctest::Approx(0.4).epsilon(1e-15));
  }
}

TEST_CASE("quasi-Newton solve_rd agrees with the closed form") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::uniform_real_distribution<double> pen(0.1, 5.0);
  for (int trial = 0; trial < 25; ++trial) {
    const Index n = 40;
    PixelMatrix<double> f_d(n, 3), y_pol(n, 3), i(n, 3), r_s(n, 3), y(n, 3);
    for (Index p = 0; p < n; ++p)
      for (int c = 0; c < 3; ++c) {
        f_d(p, c) = dist(rng);
        y_pol(p, c) = 0.1 * dist(rng);
        i(p, c) = dist(rng);
        r_s(p, c) = dist(rng);
        y(p, c) = 0.1 * dist(rng);
      }
    const double rho_pol = pen(rng), rho = pen(rng);
    const auto closed =
        solve_rd(f_d, y_pol, i, r_s, y, rho_pol, rho, RdSolver::ClosedForm);
    const auto quasi =
        solve_rd(f_d, y_pol, i, r_s, y, rho_pol, rho, RdSolver::Lbfgs);
    CHECK((closed - quasi).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("solve_rs shrinks then clamps") {
  const auto zeros = PixelMatrix<double>::Zero(1, 3).eval();

  SUBCASE("zero input stays zero") {
    const auto r = solve_rs<double>(zeros, zeros, zeros, 0.2, 1.0);
    CHECK((r.array() == 0.0).all());
  }
  SUBCASE("shrinkage by lambda over rho") {
    const auto r = solve_rs<double>(constant_rows(1, 0.5, 0.5, 0.5), zeros,
                                    zeros, 0.2, 1.0);
    CHECK(r(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
  }
  SUBCASE("negative entries clamp to zero after shrinking") {
    const auto r = solve_rs<double>(constant_rows(1, -0.5, -0.5, -0.5), zeros,
                                    zeros, 0.2, 1.0);
    CHECK((r.array() == 0.0).all());
  }
}

TEST_CASE("lambda follows the active-pixel rule") {
  SUBCASE("100 active pixels") {
    PixelMatrix<double> r_s = PixelMatrix<double>::Zero(400, 3);
    for (Index p = 0; p < 100; ++p) r_s(p, 1) = 0.5;
    CHECK(count_active_pixels(r_s) == 100);
    CHECK(update_lambda(r_s) == doctest::Approx(0.1).epsilon(1e-15));
  }
  SUBCASE("all-zero falls back to the pixel count") {
    const PixelMatrix<double> r_s = PixelMatrix<double>::Zero(400, 3);
    CHECK(update_lambda(r_s) == doctest::Approx(0.05).epsilon(1e-15));
  }
  SUBCASE("single active pixel") {
    PixelMatrix<double> r_s = PixelMatrix<double>::Zero(9, 3);
    r_s(4, 0) = 1.0;
    CHECK(update_lambda(r_s) == 1.0);
  }
  SUBCASE("entries at the floor do not count") {
    PixelMatrix<double> r_s = PixelMatrix<double>::Zero(4, 3);
    r_s(0, 0) = 1e-6;  // not strictly above the floor
    CHECK(count_active_pixels(r_s) == 0);
  }
}

TEST_CASE("multiplier update") {
  const Index n = 2;
  SeparationState state;
  state.r_d = constant_rows(n, 0.375, 0.375, 0.375);
  state.r_s = constant_rows(n, 0.125, 0.125, 0.125);
  state.f_d = state.r_d;
  state.s_mul = PixelMatrix<double>::Zero(n, 3);
  state.s_pol = PixelMatrix<double>::Zero(n, 3);
  state.rho = 1.1;
  state.rho_pol = 1.1;

  SUBCASE("zero residuals leave multipliers unchanged and grow penalties") {
    const auto i = constant_rows(n, 0.5, 0.5, 0.5);  // I = R_D + R_S
    update_multipliers(state, i, 1.05);
    CHECK((state.s_mul.array() == 0.0).all());
    CHECK((state.s_pol.array() == 0.0).all());
    CHECK(state.rho == 1.1 * 1.05);
    CHECK(state.rho_pol == 1.1 * 1.05);
  }
  SUBCASE("residual feeds the multiplier scaled by rho") {
    state.rho = 1.0;
    const auto i = constant_rows(n, 0.6, 0.6, 0.6);  // residual 0.1
    update_multipliers(state, i, 1.05);
    CHECK(state.s_mul(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(state.y(0, 0) == doctest::Approx(0.1 / 1.05).epsilon(1e-9));
  }
  SUBCASE("two updates compound the growth geometrically") {
    const auto i = constant_rows(n, 0.5, 0.5, 0.5);
    update_multipliers(state, i, 1.05);
    update_multipliers(state, i, 1.05);
    CHECK(state.rho == 1.1 * 1.05 * 1.05);
    CHECK(state.rho == doctest::Approx(1.21275).epsilon(1e-9));
  }
}

TEST_CASE("separate on a specular-free scene returns the constant image") {
  const auto out = render_scene(standard_scene<double>("flat", 64, 64));
  const auto result = separate(out.stack);
  CHECK(result.stop_reason == StopReason::Converged);
  CHECK(result.iterations < 50);
  CHECK(result.specular.samples.cwiseAbs().maxCoeff() < 1e-2);
  const auto maps = fit_trs(out.stack);
  CHECK((result.diffuse.samples - maps.i_c).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("separate recovers the diffuse image on polarized-only scenes") {
  const auto out = render_scene(standard_scene<double>("polarized_only", 96, 96));
  const auto result = separate(out.stack);
  CHECK(psnr(result.diffuse, out.ground_truth) >= 40.0);
}

TEST_CASE("separate improves on the raw diffuse image under partial polarization") {
  const auto out = render_scene(standard_scene<double>("partial", 96, 96));
  const auto raw = raw_components(fit_trs(out.stack));
  const auto result = separate(out.stack);
  const double psnr_raw = psnr(raw.raw_d, out.ground_truth);
  const double psnr_opt = psnr(result.diffuse, out.ground_truth);
  CHECK(psnr_opt > psnr_raw);
}

TEST_CASE("solver state invariants along the run") {
  const auto out = render_scene(standard_scene<double>("partial", 48, 48));
  SeparationParams params;
  const auto result = separate(out.stack, params);

  SUBCASE("specular output stays nonnegative") {
    CHECK((result.specular.samples.array() >= 0.0).all());
    CHECK((result.diffuse.samples.array() >= 0.0).all());
  }
  SUBCASE("penalties follow the exact geometric schedule") {
    double rho = params.rho0, rho_pol = params.rho_pol0;
    for (const auto& it : result.history) {
      CHECK(it.rho == rho);
      CHECK(it.rho_pol == rho_pol);
      rho *= params.penalty_growth;
      rho_pol *= params.penalty_growth;
    }
  }
  SUBCASE("lambda equals the active-pixel rule at every iteration") {
    for (const auto& it : result.history) {
      const Index n_s = it.active_pixels > 0 ? it.active_pixels
                                             : Index(48) * Index(48);
      CHECK(it.lambda == 1.0 / std::sqrt(double(n_s)));
    }
  }
  SUBCASE("feasibility at termination") {
    CHECK(result.history.back().data_residual <= 10.0 * params.epsilon);
  }
  SUBCASE("history is dense and one-based") {
    REQUIRE(result.iterations == static_cast<int>(result.history.size()));
    for (int k = 0; k < result.iterations; ++k)
      CHECK(result.history[static_cast<std::size_t>(k)].k == k + 1);
  }
}

TEST_CASE("separate is deterministic") {
  const auto out = render_scene(standard_scene<double>("noisy", 48, 48));
  SeparationParams params;
  params.threads = 4;
  const auto a = separate(out.stack, params);
  const auto b = separate(out.stack, params);
  CHECK(a.diffuse.samples == b.diffuse.samples);
  CHECK(a.specular.samples == b.specular.samples);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    CHECK(a.history[k].delta_s == b.history[k].delta_s);
    CHECK(a.history[k].delta_s_pol == b.history[k].delta_s_pol);
    CHECK(a.history[k].data_residual == b.history[k].data_residual);
  }
}

TEST_CASE("consistent output adds up to the constant image exactly") {
  const auto out = render_scene(standard_scene<double>("partial", 48, 48));
  SeparationParams params;
  params.consistent_output = true;
  const auto result = separate(out.stack, params);
  const auto maps = fit_trs(out.stack);
  CHECK((result.diffuse.samples + result.specular.samples - maps.i_c)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((result.diffuse.samples.array() >= 0.0).all());
  CHECK((result.specular.samples.array() >= 0.0).all());
}

TEST_CASE("parameter validation") {
  SeparationParams params;
  params.max_iter = 0;
  const auto out = render_scene(standard_scene<double>("flat", 16, 16));
  CHECK_THROWS_AS(separate(out.stack, params), SpecError);
  params.max_iter = 50;
  params.epsilon = 0.0;
  CHECK_THROWS_AS(separate(out.stack, params), SpecError);
}

TEST_CASE("lbfgs minimizes a quadratic and a rosenbrock bowl") {
  SUBCASE("quadratic") {
    const auto objective = [](const VectorX<double>& x, VectorX<double>& g) {
      g = 2.0 * x;
      return x.squaredNorm();
    };
    VectorX<double> x = VectorX<double>::Constant(8, 3.0);
    CHECK(lbfgs_minimize<double>(objective, x) == LbfgsStatus::Converged);
    CHECK(x.cwiseAbs().maxCoeff() < 1e-7);
  }
  SUBCASE("rosenbrock") {
    const auto objective = [](const VectorX<double>& x, VectorX<double>& g) {
      const double a = 1.0 - x(0);
      const double b = x(1) - x(0) * x(0);
      g.resize(2);
      g(0) = -2.0 * a - 400.0 * x(0) * b;
      g(1) = 200.0 * b;
      return a * a + 100.0 * b * b;
    };
    VectorX<double> x(2);
    x << -1.2, 1.0;
    LbfgsOptionsT<double> opts;
    opts.max_iter = 300;
    CHECK(lbfgs_minimize<double>(objective, x, opts) == LbfgsStatus::Converged);
    CHECK(std::abs(x(0) - 1.0) < 1e-6);
    CHECK(std::abs(x(1) - 1.0) < 1e-6);
  }
}
