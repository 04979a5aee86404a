// polarsep: polarization-guided specular/diffuse separation toolbox.
//
// Subcommands:
//   separate  run the full solver on a four-angle stack
//   evaluate  PSNR / SSIM / CA / hue-SD against ground truth
//   synth     render a synthetic polarized scene with ground truth
//   inspect   dump intermediate maps of the pipeline as images

#include "polarsep/polarsep.hpp"
#include "polarsep/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace polarsep;

namespace {

struct StackInput {
  std::vector<std::string> frames;  // tagged filenames, or 4 files with --angles
  std::vector<int> angles;          // explicit per-file angles, empty = from tags
  std::string mosaic;               // single-raster mosaic alternative
  std::vector<int> mosaic_pattern = {0, 45, 90, 135};
  double gamma = 1.0;
};

void add_stack_options(CLI::App* cmd, StackInput& in) {
  cmd->add_option("--input", in.frames,
                  "stack directory or the four angle-tagged frame files")
      ->expected(-1);
  cmd->add_option("--angles", in.angles,
                  "explicit angles (degrees) for the given frame files, in order");
  cmd->add_option("--mosaic", in.mosaic, "2x2 polarization mosaic raster (PGM)");
  cmd->add_option("--pattern", in.mosaic_pattern,
                  "mosaic angles at offsets (0,0),(0,1),(1,0),(1,1)");
  cmd->add_option("--gamma", in.gamma,
                  "linearize inputs with this gamma exponent (default 1 = off)");
}

std::vector<std::string> expand_stack_dir(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext != ".ppm" && ext != ".pgm" && ext != ".pnm") continue;
    try {
      angle_tag_from_filename(entry.path().string());
      files.push_back(entry.path().string());
    } catch (const TagError&) {
      // untagged rasters (ground truth etc.) are not stack frames
    }
  }
  std::sort(files.begin(), files.end());
  if (files.size() != 4) {
    std::string missing;
    for (const char* tag : {"000", "045", "090", "135"}) {
      bool found = false;
      for (const auto& f : files)
        if (f.find(std::string("_") + tag) != std::string::npos) found = true;
      if (!found) missing += std::string(missing.empty() ? "" : ", ") + tag;
    }
    throw TagError("stack directory '" + dir + "' must hold 4 tagged frames; missing: " +
                   (missing.empty() ? "none (duplicates present)" : missing));
  }
  return files;
}

PolarizedStack load_stack_input(const StackInput& in) {
  PolarizedStack stack;
  if (!in.mosaic.empty()) {
    MosaicPattern pattern;
    if (in.mosaic_pattern.size() != 4)
      throw TagError("--pattern needs exactly 4 angles");
    for (int i = 0; i < 4; ++i)
      pattern.angle_deg_at_offset[static_cast<std::size_t>(i)] =
          in.mosaic_pattern[static_cast<std::size_t>(i)];
    stack = split_mosaic(load_gray<double>(in.mosaic), pattern);
  } else {
    std::vector<std::string> files = in.frames;
    if (files.size() == 1 && fs::is_directory(files.front()))
      files = expand_stack_dir(files.front());
    if (files.size() != 4)
      throw TagError("expected a stack directory or exactly 4 frame files, got " +
                     std::to_string(files.size()));
    if (!in.angles.empty()) {
      if (in.angles.size() != files.size())
        throw TagError("--angles must list one angle per frame file");
      std::vector<std::pair<std::string, int>> tagged;
      for (std::size_t i = 0; i < files.size(); ++i)
        tagged.emplace_back(files[i], in.angles[i]);
      stack = load_stack<double>(tagged);
    } else {
      stack = load_stack<double>(files);
    }
  }
  if (in.gamma != 1.0) {
    if (!(in.gamma > 0)) throw SpecError("--gamma must be positive");
    for (auto& frame : stack.frames)
      frame = frame.array().pow(in.gamma).matrix();
  }
  return stack;
}

struct ParamsCli {
  SeparationParams params;
  void add_to(CLI::App* cmd) {
    cmd->add_option("--t", params.t, "chromatic threshold (default 0.03)");
    cmd->add_option("--tau-s", params.tau_s, "pure-diffuse threshold (default 0.02)");
    cmd->add_option("--rho0", params.rho0, "initial penalty (default 1.1)");
    cmd->add_option("--rho-pol0", params.rho_pol0,
                    "initial prior penalty (default 1.1)");
    cmd->add_option("--growth", params.penalty_growth,
                    "penalty growth per iteration (default 1.05)");
    cmd->add_option("--max-iter", params.max_iter, "outer iterations (default 50)");
    cmd->add_option("--epsilon", params.epsilon, "stopping tolerance (default 1e-3)");
    cmd->add_option("--solver", solver_name,
                    "R_D subproblem solver: closed_form or lbfgs")
        ->check(CLI::IsMember({"closed_form", "lbfgs"}));
    cmd->add_flag("--consistent-output", params.consistent_output,
                  "renormalize so diffuse + specular equals the constant image");
    cmd->add_option("--threads", params.threads,
                    "cap data parallelism (default: all cores)");
    cmd->add_option("--rpca-max-iter", params.rpca.max_iter,
                    "inner decomposition iterations (default 100)");
    cmd->add_option("--rpca-tol", params.rpca.tol,
                    "inner decomposition tolerance (default 1e-6)");
    cmd->add_option("--min-cluster", params.cluster.min_cluster_size,
                    "fold clusters smaller than this (default 12)");
  }
  void finalize() {
    params.solver = solver_name == "lbfgs" ? RdSolver::Lbfgs : RdSolver::ClosedForm;
  }
  std::string solver_name = "closed_form";
};

int cmd_separate(const StackInput& in, ParamsCli& pc, const std::string& out_dir,
                 const std::string& scene_name, int bit_depth, bool dump_history) {
  pc.finalize();
  const PolarizedStack stack = load_stack_input(in);
  const SeparationResult result = separate(stack, pc.params);

  fs::create_directories(out_dir);
  save_image(result.diffuse, (fs::path(out_dir) / "diffuse.ppm").string(), bit_depth);
  save_image(result.specular, (fs::path(out_dir) / "specular.ppm").string(), bit_depth);

  json report = separation_report_json(result, pc.params, scene_name);
  std::ofstream rep((fs::path(out_dir) / "report.json").string());
  if (!rep) throw IoError("cannot write report.json in '" + out_dir + "'");
  rep << report.dump(2) << "\n";
  if (dump_history)
    write_history_csv(result, (fs::path(out_dir) / "history.csv").string());

  std::cout << "separated in " << result.iterations << " iterations ("
            << to_string(result.stop_reason) << ")\n";
  return 0;
}

int cmd_evaluate(const std::string& pred, const std::string& gt,
                 const std::string& pred_dir, const std::string& gt_dir,
                 const std::string& out_path) {
  json output;
  if (!pred_dir.empty() || !gt_dir.empty()) {
    if (pred_dir.empty() || gt_dir.empty())
      throw SpecError("directory mode needs both --pred-dir and --gt-dir");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(pred_dir)) {
      const std::string ext = entry.path().extension().string();
      if (entry.is_regular_file() && (ext == ".ppm" || ext == ".pnm"))
        names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) throw IoError("no predictions found in '" + pred_dir + "'");

    json scenes = json::array();
    MetricsReport mean;
    for (const auto& name : names) {
      const fs::path gt_path = fs::path(gt_dir) / name;
      if (!fs::exists(gt_path))
        throw IoError("ground truth for '" + name + "' not found in '" + gt_dir + "'");
      const auto a = load_image<double>((fs::path(pred_dir) / name).string());
      const auto b = load_image<double>(gt_path.string());
      const MetricsReport r = evaluate_images(a, b);
      scenes.push_back(metrics_report_json(r, name, json::object()));
      mean.psnr_db += r.psnr_db;
      mean.ssim += r.ssim;
      mean.ca_db += r.ca_db;
      mean.hue_sd += r.hue_sd;
    }
    const double n = static_cast<double>(names.size());
    output = json{{"scenes", scenes},
                  {"aggregate",
                   {{"psnr_db", mean.psnr_db / n},
                    {"ssim", mean.ssim / n},
                    {"ca_db", mean.ca_db / n},
                    {"hue_sd", mean.hue_sd / n},
                    {"count", names.size()}}}};
  } else {
    if (pred.empty() || gt.empty())
      throw SpecError("evaluate needs --pred and --gt (or the directory options)");
    const auto a = load_image<double>(pred);
    const auto b = load_image<double>(gt);
    const MetricsReport r = evaluate_images(a, b);
    output = metrics_report_json(r, fs::path(pred).filename().string(), json::object());
  }
  std::cout << output.dump(2) << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open '" + out_path + "' for writing");
    out << output.dump(2) << "\n";
  }
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& scene_name,
              Index width, Index height, const std::string& out_dir,
              int bit_depth) {
  SynthSpec spec;
  std::string stem = "scene";
  if (!spec_path.empty()) {
    spec = load_synth_spec<double>(spec_path);
    stem = fs::path(spec_path).stem().string();
  } else if (!scene_name.empty()) {
    spec = standard_scene<double>(scene_name, width, height);
    stem = scene_name;
  } else {
    throw SpecError("synth needs --spec or --scene");
  }

  const RenderOutput rendered = render_scene(spec);
  fs::create_directories(out_dir);
  RgbImage frame;
  frame.width = rendered.stack.width;
  frame.height = rendered.stack.height;
  const char* tags[4] = {"000", "045", "090", "135"};
  for (int a = 0; a < 4; ++a) {
    frame.samples = rendered.stack.frames[static_cast<std::size_t>(a)];
    save_image(frame,
               (fs::path(out_dir) / (stem + "_" + tags[a] + ".ppm")).string(),
               bit_depth);
  }
  save_image(rendered.ground_truth, (fs::path(out_dir) / "gt.ppm").string(),
             bit_depth);
  std::cout << "rendered " << stem << " (" << spec.width << "x" << spec.height
            << ", " << spec.regions.size() << " regions)\n";
  return 0;
}

const std::vector<std::string> kInspectKeys = {
    "i_c", "i_sv", "alpha", "residual", "dop", "raw_d", "raw_s",
    "chroma", "clusters", "fD"};

int cmd_inspect(const StackInput& in, ParamsCli& pc,
                const std::vector<std::string>& dumps, const std::string& out_dir,
                int bit_depth) {
  pc.finalize();
  for (const auto& key : dumps) {
    if (std::find(kInspectKeys.begin(), kInspectKeys.end(), key) == kInspectKeys.end()) {
      std::string valid;
      for (const auto& k : kInspectKeys) valid += (valid.empty() ? "" : ", ") + k;
      throw SpecError("unknown dump key '" + key + "'; valid keys: " + valid);
    }
  }
  const PolarizedStack stack = load_stack_input(in);
  const TrsMaps maps = fit_trs(stack);
  const RawComponents raw = raw_components(maps);
  fs::create_directories(out_dir);

  const auto save_pixels = [&](const PixelMatrix<double>& samples,
                               const std::string& name, bool clamp01) {
    RgbImage img;
    img.width = stack.width;
    img.height = stack.height;
    img.samples = clamp01 ? samples.cwiseMax(0.0).cwiseMin(1.0).eval() : samples;
    save_image(img, (fs::path(out_dir) / (name + ".ppm")).string(), bit_depth);
  };

  for (const auto& key : dumps) {
    if (key == "i_c") {
      save_pixels(maps.i_c, key, true);
    } else if (key == "i_sv") {
      save_pixels(maps.i_sv, key, true);
    } else if (key == "alpha") {
      save_pixels(maps.alpha / std::numbers::pi, key, true);
    } else if (key == "residual") {
      save_pixels(maps.residual, key, true);
    } else if (key == "dop") {
      save_gray(degree_of_polarization(maps),
                (fs::path(out_dir) / "dop.pgm").string(), bit_depth);
    } else if (key == "raw_d") {
      save_pixels(raw.raw_d.samples, key, true);
    } else if (key == "raw_s") {
      save_pixels(raw.raw_s.samples, key, true);
    } else if (key == "chroma") {
      save_pixels(chromaticity(raw.raw_d).samples, key, true);
    } else if (key == "clusters") {
      const auto chro = chromaticity(raw.raw_d);
      const auto classes = classify_pixels(maps, raw, pc.params.tau_s);
      const auto clusters =
          build_clusters(chro, classes, pc.params.t, pc.params.cluster);
      // Fixed seed so the label colors are reproducible run to run.
      std::mt19937_64 rng(7);
      std::uniform_real_distribution<double> dist(0.15, 1.0);
      PixelMatrix<double> viz(stack.pixels(), 3);
      for (const auto& members : clusters.clusters) {
        const Rgb<double> color{dist(rng), dist(rng), dist(rng)};
        for (const Index p : members) viz.row(p) = color;
      }
      save_pixels(viz, key, true);
    } else if (key == "fD") {
      const auto chro = chromaticity(raw.raw_d);
      const auto classes = classify_pixels(maps, raw, pc.params.tau_s);
      const auto clusters =
          build_clusters(chro, classes, pc.params.t, pc.params.cluster);
      PgmOptions opts;
      opts.rpca = pc.params.rpca;
      opts.threads = pc.params.threads;
      save_pixels(pgm_apply(raw.raw_d, clusters, opts).samples, key, true);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polarization-guided specular reflection separation"};
  app.require_subcommand(1);

  std::string default_config;
  if (const char* env = std::getenv("POLARSEP_CONFIG")) default_config = env;
  app.set_config("--config", default_config, "read options from a config file");
  app.get_config_ptr()->configurable(true);

  StackInput input;
  ParamsCli params_cli;
  std::string out_dir = ".", scene_name = "scene";
  int bit_depth = 16;
  bool dump_history = false;

  auto* sep = app.add_subcommand("separate", "separate a polarized stack");
  sep->fallthrough();
  add_stack_options(sep, input);
  params_cli.add_to(sep);
  sep->add_option("--out", out_dir, "output directory");
  sep->add_option("--scene-name", scene_name, "scene label for report.json");
  sep->add_option("--bit-depth", bit_depth, "8 or 16 (default 16)");
  sep->add_flag("--dump-history", dump_history, "also write history.csv");

  std::string eval_pred, eval_gt, eval_pred_dir, eval_gt_dir, eval_out;
  auto* ev = app.add_subcommand("evaluate", "compare a result against ground truth");
  ev->fallthrough();
  ev->add_option("--pred", eval_pred, "predicted image");
  ev->add_option("--gt", eval_gt, "ground-truth image");
  ev->add_option("--pred-dir", eval_pred_dir, "directory of predictions");
  ev->add_option("--gt-dir", eval_gt_dir, "directory of ground truths");
  ev->add_option("--out", eval_out, "write the JSON report here too");

  std::string synth_spec, synth_scene;
  Index synth_w = 256, synth_h = 256;
  auto* sy = app.add_subcommand("synth", "render a synthetic polarized scene");
  sy->fallthrough();
  sy->add_option("--spec", synth_spec, "scene description (JSON)");
  sy->add_option("--scene", synth_scene,
                 "built-in fixture: flat, polarized_only, partial, "
                 "near_duplicate, noisy");
  sy->add_option("--width", synth_w, "fixture width (default 256)");
  sy->add_option("--height", synth_h, "fixture height (default 256)");
  sy->add_option("--out", out_dir, "output directory");
  sy->add_option("--bit-depth", bit_depth, "8 or 16 (default 16)");

  std::vector<std::string> dumps;
  auto* insp = app.add_subcommand("inspect", "dump pipeline intermediates");
  insp->fallthrough();
  add_stack_options(insp, input);
  params_cli.add_to(insp);
  insp->add_option("--dump", dumps, "keys to dump (comma separated)")
      ->delimiter(',');
  insp->add_option("--out", out_dir, "output directory");
  insp->add_option("--bit-depth", bit_depth, "8 or 16 (default 16)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sep->parsed())
      return cmd_separate(input, params_cli, out_dir, scene_name, bit_depth,
                          dump_history);
    if (ev->parsed())
      return cmd_evaluate(eval_pred, eval_gt, eval_pred_dir, eval_gt_dir, eval_out);
    if (sy->parsed())
      return cmd_synth(synth_spec, synth_scene, synth_w, synth_h, out_dir, bit_depth);
    if (insp->parsed())
      return cmd_inspect(input, params_cli, dumps, out_dir, bit_depth);
  } catch (const Error& e) {
    std::cerr << "error: " << error_category(e) << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
