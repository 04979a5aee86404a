// Acceptance suite: one line per criterion, nonzero exit if any gated
// criterion fails. Criteria run against the built-in synthetic fixtures
// so every expected value has an exact oracle.

#include "polarsep/polarsep.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace polarsep;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
              name.c_str(), detail.c_str());
  if (!pass) ++failures;
}

void info(int criterion, const std::string& name, const std::string& detail) {
  std::printf("[INFO] criterion %2d: %s (%s)\n", criterion, name.c_str(),
              detail.c_str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

double angular_distance(double a, double b) {
  constexpr double pi = std::numbers::pi;
  double d = std::abs(a - b);
  while (d > pi / 2) d = std::abs(d - pi);
  return d;
}

struct FixtureRun {
  RenderOutput scene;
  SeparationResult result;
  double seconds = 0;
};

FixtureRun run_fixture(const std::string& name, Index size) {
  FixtureRun run;
  run.scene = render_scene(standard_scene<double>(name, size, size));
  const auto t0 = std::chrono::steady_clock::now();
  run.result = separate(run.scene.stack);
  run.seconds = seconds_since(t0);
  return run;
}

void criterion_1_trs_round_trip() {
  bool pass = true;
  double worst_value = 0, worst_angle = 0, worst_time = 0;
  for (const auto& [name, spec_orig] : standard_scenes<double>(256, 256)) {
    SynthSpec spec = spec_orig;
    spec.noise_sigma = 0;  // the round trip is exact only without noise
    const auto out = render_scene(spec);
    const auto t0 = std::chrono::steady_clock::now();
    const auto maps = fit_trs(out.stack);
    const double dt = seconds_since(t0);
    worst_time = std::max(worst_time, dt);

    const double d_ic = (maps.i_c - out.aux.i_c).cwiseAbs().maxCoeff();
    const double d_sv = (maps.i_sv - out.aux.i_sv).cwiseAbs().maxCoeff();
    worst_value = std::max({worst_value, d_ic, d_sv});
    for (Index p = 0; p < maps.pixels(); ++p)
      for (int c = 0; c < 3; ++c)
        if (maps.i_sv(p, c) > 1e-6)
          worst_angle = std::max(
              worst_angle, angular_distance(maps.alpha(p, c), out.aux.alpha(p, c)));
    pass = pass && d_ic < 1e-9 && d_sv < 1e-9 && dt < 1.0;
  }
  pass = pass && worst_angle < 1e-9;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "5 fixtures at 256x256, max |dI|=%.2e, max dalpha=%.2e rad, "
                "max fit time %.3f s",
                worst_value, worst_angle, worst_time);
  report(1, "TRS round-trip recovers I_c, I_sv, alpha to 1e-9", pass, detail);
}

void criterion_2_polarized_only(const FixtureRun& run) {
  const auto raw = raw_components(fit_trs(run.scene.stack));
  const double raw_err =
      (raw.raw_d.samples - run.scene.ground_truth.samples).cwiseAbs().maxCoeff();
  const double psnr_rd = psnr(run.result.diffuse, run.scene.ground_truth);
  const bool pass = raw_err < 1e-9 && psnr_rd >= 40.0 && run.seconds < 30.0;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "max |I_rawD - GT|=%.2e, PSNR(R_D)=%.2f dB, separate %.2f s",
                raw_err, psnr_rd, run.seconds);
  report(2, "polarized-only scene is solved exactly by the sinusoid fit", pass,
         detail);
}

double improvement_db(const FixtureRun& run) {
  const auto raw = raw_components(fit_trs(run.scene.stack));
  const double psnr_raw = psnr(raw.raw_d, run.scene.ground_truth);
  const double psnr_rd = psnr(run.result.diffuse, run.scene.ground_truth);
  return psnr_rd - psnr_raw;
}

void criterion_3_partial_improvement(const FixtureRun& run) {
  const auto raw = raw_components(fit_trs(run.scene.stack));
  const double psnr_raw = psnr(raw.raw_d, run.scene.ground_truth);
  const double psnr_rd = psnr(run.result.diffuse, run.scene.ground_truth);
  const double gain = psnr_rd - psnr_raw;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "PSNR raw=%.2f dB, optimized=%.2f dB, margin=%.2f dB", psnr_raw,
                psnr_rd, gain);
  report(3, "optimization beats the raw diffuse image by at least 1 dB",
         gain >= 1.0, detail);
}

void criterion_4_near_duplicate(const FixtureRun& run) {
  // Expected clusters: pixels grouped by region diffuse color (highlight
  // blobs share their host's diffuse color).
  const SynthSpec spec = standard_scene<double>("near_duplicate", 256, 256);
  std::map<std::array<long, 3>, std::set<Index>> expected;
  for (Index p = 0; p < run.scene.ground_truth.pixels(); ++p) {
    const auto& region =
        spec.regions[static_cast<std::size_t>(run.scene.region_map[p])];
    expected[{std::lround(region.diffuse(0) * 1e9),
              std::lround(region.diffuse(1) * 1e9),
              std::lround(region.diffuse(2) * 1e9)}]
        .insert(p);
  }

  const auto maps = fit_trs(run.scene.stack);
  const auto raw = raw_components(maps);
  const auto clusters = build_clusters(chromaticity(raw.raw_d),
                                       classify_pixels(maps, raw), 0.03);

  bool masks_match = clusters.clusters.size() == expected.size();
  if (masks_match) {
    for (const auto& members : clusters.clusters) {
      const std::set<Index> got(members.begin(), members.end());
      bool found = false;
      for (const auto& [color, want] : expected)
        if (want == got) found = true;
      masks_match = masks_match && found;
    }
  }

  const double gain = improvement_db(run);
  const bool pass = masks_match && gain >= 1.0;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "clusters=%zu (expected %zu, masks %s), margin=%.2f dB",
                clusters.clusters.size(), expected.size(),
                masks_match ? "exact" : "MISMATCH", gain);
  report(4, "near-duplicate illumination keeps clusters exact and still gains 1 dB",
         pass, detail);
}

void criterion_5_rpca_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  int recovered = 0;
  bool additivity = true;
  double worst = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed) + 1);
    std::uniform_real_distribution<double> u_dist(0.2, 1.0);
    const Index rows = 200;
    VectorX<double> u(rows);
    for (Index i = 0; i < rows; ++i) u(i) = u_dist(rng);
    const Rgb<double> v{0.55, 0.4, 0.25};
    const PixelMatrix<double> clean = u * v;
    PixelMatrix<double> corrupted = clean;

    // 5% of entries spiked, at most one channel per row; a 3-column row
    // with two corrupted channels has no identifiable split.
    std::uniform_int_distribution<Index> row_pick(0, rows - 1);
    std::uniform_int_distribution<int> chan_pick(0, 2);
    std::set<Index> used;
    while (used.size() < static_cast<std::size_t>(0.05 * 3 * rows)) {
      const Index r = row_pick(rng);
      if (!used.insert(r).second) continue;
      corrupted(r, chan_pick(rng)) += 0.5;
    }

    const auto res =
        rpca_separate<double>(corrupted, default_rpca_lambda<double>(rows));
    const double rel = (res.d - clean).norm() / clean.norm();
    worst = std::max(worst, rel);
    if (rel < 1e-3) ++recovered;
    additivity = additivity &&
                 (corrupted - res.d - res.s).norm() /
                         std::max(corrupted.norm(), 1.0) <=
                     1e-6;
  }
  const double dt = seconds_since(t0);
  const bool pass = recovered >= 95 && additivity && dt < 5.0;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "recovered %d/100 (worst rel err %.2e), additivity %s, %.2f s",
                recovered, worst, additivity ? "ok" : "VIOLATED", dt);
  report(5, "rank-1 + 5% sparse matrices recover to 1e-3", pass, detail);
}

void criterion_6_subproblem_equivalence() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::uniform_real_distribution<double> pen(0.2, 4.0);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 50;
    PixelMatrix<double> f_d(n, 3), y_pol(n, 3), i(n, 3), r_s(n, 3), y(n, 3);
    for (Index p = 0; p < n; ++p)
      for (int c = 0; c < 3; ++c) {
        f_d(p, c) = dist(rng);
        y_pol(p, c) = 0.2 * dist(rng);
        i(p, c) = dist(rng);
        r_s(p, c) = dist(rng);
        y(p, c) = 0.2 * dist(rng);
      }
    const double rho_pol = pen(rng), rho = pen(rng);
    const auto closed =
        solve_rd(f_d, y_pol, i, r_s, y, rho_pol, rho, RdSolver::ClosedForm);
    const auto quasi =
        solve_rd(f_d, y_pol, i, r_s, y, rho_pol, rho, RdSolver::Lbfgs);
    worst = std::max(worst, (closed - quasi).cwiseAbs().maxCoeff());
  }
  char detail[80];
  std::snprintf(detail, sizeof(detail), "100 instances, max |delta|=%.2e", worst);
  report(6, "quasi-Newton and closed-form R_D solutions agree to 1e-6",
         worst <= 1e-6, detail);
}

void criterion_7_schedule_fidelity(const std::vector<const FixtureRun*>& runs) {
  bool pass = true;
  int max_iters = 0;
  for (const FixtureRun* run : runs) {
    const Index n = run->scene.ground_truth.pixels();
    double rho = 1.1, rho_pol = 1.1;
    for (const auto& it : run->result.history) {
      pass = pass && it.rho == rho && it.rho_pol == rho_pol;
      rho *= 1.05;
      rho_pol *= 1.05;
      const Index n_s = it.active_pixels > 0 ? it.active_pixels : n;
      pass = pass && it.lambda == 1.0 / std::sqrt(double(n_s));
    }
    pass = pass && run->result.iterations <= 50;
    max_iters = std::max(max_iters, run->result.iterations);
  }
  char detail[120];
  std::snprintf(detail, sizeof(detail),
                "%zu runs, penalties = 1.1 * 1.05^k exactly, lambda rule exact, "
                "max iterations %d <= 50",
                runs.size(), max_iters);
  report(7, "penalty and sparsity schedules match the stated rules", pass, detail);
}

void criterion_8_metric_self_tests() {
  RgbImage gt;
  gt.width = gt.height = 24;
  gt.samples = PixelMatrix<double>::Zero(gt.pixels(), 3);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> dist(0.1, 0.8);
  for (Index p = 0; p < gt.pixels(); ++p)
    for (int c = 0; c < 3; ++c) gt.samples(p, c) = dist(rng);

  RgbImage offset = gt;
  offset.samples.array() += 0.1;
  const double p20 = psnr(offset, gt);
  const bool psnr_ok = std::abs(p20 - 20.0) <= 1e-6;
  const bool ssim_ok = ssim(gt, gt) == 1.0;

  RgbImage consthue;
  consthue.width = consthue.height = 16;
  consthue.samples.resize(consthue.pixels(), 3);
  for (Index p = 0; p < consthue.pixels(); ++p)
    consthue.samples.row(p) = Rgb<double>{0.8, 0.5, 0.2};
  const bool hue_zero_ok = hue_sd(consthue) == 0.0;

  // Circular shift invariance via direct hue synthesis.
  const auto hue_to_rgb = [](double h) -> Rgb<double> {
    const double x = 1.0 - std::abs(std::fmod(h * 6.0, 2.0) - 1.0);
    switch (static_cast<int>(h * 6.0) % 6) {
      case 0: return {1.0, x, 0.0};
      case 1: return {x, 1.0, 0.0};
      case 2: return {0.0, 1.0, x};
      case 3: return {0.0, x, 1.0};
      case 4: return {x, 0.0, 1.0};
      default: return {1.0, 0.0, x};
    }
  };
  RgbImage hue_a, hue_b;
  hue_a.width = hue_b.width = 128;
  hue_a.height = hue_b.height = 1;
  hue_a.samples.resize(128, 3);
  hue_b.samples.resize(128, 3);
  std::uniform_real_distribution<double> hdist(0.0, 1.0);
  for (Index p = 0; p < 128; ++p) {
    const double h = hdist(rng);
    hue_a.samples.row(p) = hue_to_rgb(h);
    hue_b.samples.row(p) = hue_to_rgb(std::fmod(h + 0.411, 1.0));
  }
  const double shift_delta = std::abs(hue_sd(hue_a) - hue_sd(hue_b));
  const bool shift_ok = shift_delta <= 1e-9;

  const bool pass = psnr_ok && ssim_ok && hue_zero_ok && shift_ok;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "psnr(0.1)=%.7f dB, ssim(a,a)=1 %s, const-hue SD=0 %s, "
                "shift invariance |d|=%.1e",
                p20, ssim_ok ? "ok" : "FAIL", hue_zero_ok ? "ok" : "FAIL",
                shift_delta);
  report(8, "metric self-tests", pass, detail);
}

void criterion_9_determinism() {
  const auto scene = render_scene(standard_scene<double>("partial", 128, 128));
  SeparationParams params;
  params.threads = 4;
  const auto a = separate(scene.stack, params);
  const auto b = separate(scene.stack, params);
  bool pass = a.diffuse.samples == b.diffuse.samples &&
              a.specular.samples == b.specular.samples &&
              a.history.size() == b.history.size();
  if (pass)
    for (std::size_t k = 0; k < a.history.size(); ++k)
      pass = pass && a.history[k].delta_s == b.history[k].delta_s &&
             a.history[k].delta_s_pol == b.history[k].delta_s_pol &&
             a.history[k].data_residual == b.history[k].data_residual;
  report(9, "two runs produce bit-identical outputs and residual histories",
         pass, pass ? "partial fixture at 128x128, 4 threads" : "MISMATCH");
}

void criterion_10_reference_targets() {
  info(10,
       "reference targets (not gated; the published dataset is unavailable)",
       "published means: PSNR 32.097 dB, SSIM 0.877, CA 24.909, SD 0.034; "
       "evaluate/report tooling emits the same four metrics");
}

}  // namespace

int main() {
  std::printf("polarsep acceptance suite\n");

  criterion_1_trs_round_trip();

  const FixtureRun polarized = run_fixture("polarized_only", 256);
  criterion_2_polarized_only(polarized);

  const FixtureRun partial = run_fixture("partial", 256);
  criterion_3_partial_improvement(partial);

  const FixtureRun near_dup = run_fixture("near_duplicate", 256);
  criterion_4_near_duplicate(near_dup);

  criterion_5_rpca_oracle();
  criterion_6_subproblem_equivalence();

  const FixtureRun flat = run_fixture("flat", 128);
  const FixtureRun noisy = run_fixture("noisy", 128);
  criterion_7_schedule_fidelity(
      {&polarized, &partial, &near_dup, &flat, &noisy});

  criterion_8_metric_self_tests();
  criterion_9_determinism();
  criterion_10_reference_targets();

  std::printf("%d gated criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
