#pragma once

#include "polarsep/metrics.hpp"
#include "polarsep/synth.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

namespace polarsep {

using json = nlohmann::json;

template <typename Scalar>
json params_to_json(const SeparationParamsT<Scalar>& p) {
  return json{{"t", p.t},
              {"tau_s", p.tau_s},
              {"rho0", p.rho0},
              {"rho_pol0", p.rho_pol0},
              {"penalty_growth", p.penalty_growth},
              {"max_iter", p.max_iter},
              {"epsilon", p.epsilon},
              {"solver", p.solver == RdSolver::Lbfgs ? "lbfgs" : "closed_form"},
              {"consistent_output", p.consistent_output},
              {"threads", p.threads},
              {"rpca_max_iter", p.rpca.max_iter},
              {"rpca_tol", p.rpca.tol},
              {"min_cluster_size", p.cluster.min_cluster_size}};
}

template <typename Scalar>
json metrics_report_json(const MetricsReportT<Scalar>& r, const std::string& scene,
                         const json& params) {
  return json{{"scene", scene},
              {"psnr_db", r.psnr_db},
              {"ssim", r.ssim},
              {"ca_db", r.ca_db},
              {"hue_sd", r.hue_sd},
              {"params", params}};
}

template <typename Scalar>
MetricsReportT<Scalar> metrics_report_from_json(const json& j) {
  MetricsReportT<Scalar> r;
  r.psnr_db = j.at("psnr_db").get<Scalar>();
  r.ssim = j.at("ssim").get<Scalar>();
  r.ca_db = j.at("ca_db").get<Scalar>();
  r.hue_sd = j.at("hue_sd").get<Scalar>();
  return r;
}

template <typename Scalar>
json separation_report_json(const SeparationResultT<Scalar>& result,
                            const SeparationParamsT<Scalar>& params,
                            const std::string& scene) {
  json history = json::array();
  for (const auto& it : result.history)
    history.push_back(json{{"k", it.k},
                           {"delta_s", it.delta_s},
                           {"delta_s_pol", it.delta_s_pol},
                           {"data_residual", it.data_residual},
                           {"lambda", it.lambda},
                           {"rho", it.rho},
                           {"rho_pol", it.rho_pol},
                           {"active_pixels", it.active_pixels}});
  return json{{"scene", scene},
              {"iterations", result.iterations},
              {"stop_reason", to_string(result.stop_reason)},
              {"residual_history", history},
              {"params", params_to_json(params)}};
}

template <typename Scalar>
void write_history_csv(const SeparationResultT<Scalar>& result,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "k,delta_s,delta_s_pol,data_residual,lambda,rho,rho_pol,active_pixels\n";
  out.precision(17);
  for (const auto& it : result.history)
    out << it.k << ',' << it.delta_s << ',' << it.delta_s_pol << ','
        << it.data_residual << ',' << it.lambda << ',' << it.rho << ','
        << it.rho_pol << ',' << it.active_pixels << '\n';
}

// Scene description format:
// {
//   "width": 256, "height": 256,
//   "noise_sigma": 0.0, "rng_seed": 1,
//   "regions": [
//     {"shape": "rect", "x": 0, "y": 0, "w": 256, "h": 256,
//      "diffuse": [0.4, 0.3, 0.2],
//      "specular_const": 0.0, "specular_amp": [0.1, 0.1, 0.1],
//      "phase": 0.5, "name": "background"},
//     {"shape": "circle", "cx": 64, "cy": 64, "radius": 12, ...}
//   ]
// }
// Color-valued fields accept either a 3-array or a scalar broadcast to
// all channels; specular fields and phase default to zero.
template <typename Scalar>
SynthSpecT<Scalar> synth_spec_from_json(const json& j) {
  const auto rgb_field = [](const json& node, const char* key,
                            Rgb<Scalar> fallback) {
    if (!node.contains(key)) return fallback;
    const auto& v = node.at(key);
    Rgb<Scalar> out;
    if (v.is_array()) {
      if (v.size() != 3)
        throw SpecError(std::string("field '") + key + "' must have 3 entries");
      for (int c = 0; c < 3; ++c) out(c) = v.at(static_cast<std::size_t>(c)).get<Scalar>();
    } else {
      out.setConstant(v.get<Scalar>());
    }
    return out;
  };

  SynthSpecT<Scalar> spec;
  try {
    spec.width = j.at("width").get<Index>();
    spec.height = j.at("height").get<Index>();
    spec.noise_sigma = j.value("noise_sigma", Scalar(0));
    spec.rng_seed = j.value("rng_seed", std::uint64_t{0});
    for (const auto& rj : j.at("regions")) {
      RegionSpecT<Scalar> r;
      const std::string shape = rj.value("shape", std::string("rect"));
      if (shape == "rect") {
        r.shape = RegionSpecT<Scalar>::Shape::Rect;
        r.x = rj.at("x").get<Index>();
        r.y = rj.at("y").get<Index>();
        r.w = rj.at("w").get<Index>();
        r.h = rj.at("h").get<Index>();
      } else if (shape == "circle") {
        r.shape = RegionSpecT<Scalar>::Shape::Circle;
        r.cx = rj.at("cx").get<Scalar>();
        r.cy = rj.at("cy").get<Scalar>();
        r.radius = rj.at("radius").get<Scalar>();
      } else {
        throw SpecError("unknown region shape '" + shape + "'");
      }
      r.diffuse = rgb_field(rj, "diffuse", Rgb<Scalar>::Zero());
      r.specular_const = rgb_field(rj, "specular_const", Rgb<Scalar>::Zero());
      r.specular_amp = rgb_field(rj, "specular_amp", Rgb<Scalar>::Zero());
      r.phase = rj.value("phase", Scalar(0));
      r.name = rj.value("name", std::string());
      spec.regions.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed scene description: ") + e.what());
  }
  return spec;
}

template <typename Scalar>
SynthSpecT<Scalar> load_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SpecError(std::string("invalid JSON in '") + path + "': " + e.what());
  }
  return synth_spec_from_json<Scalar>(j);
}

}  // namespace polarsep
