#include "lighthash/error_model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <stdexcept>

#include "lighthash/rng.hpp"

namespace lighthash {

using nlohmann::json;

bool ErrorProfile::is_zero() const {
  return sigma_phase == 0 && sigma_coupling == 0 && sigma_loss_db == 0 && mean_loss_db == 0 &&
         mu_bs == 0 && mu_eta == 0 && detection_noise_sigma == 0;
}

void ErrorProfile::validate() const {
  if (sigma_phase < 0 || sigma_coupling < 0 || sigma_loss_db < 0 || mean_loss_db < 0 ||
      detection_noise_sigma < 0) {
    throw std::invalid_argument("ErrorProfile: sigmas and mean loss must be non-negative");
  }
  if (lambda_c <= 0) throw std::invalid_argument("ErrorProfile: lambda_c must be positive");
}

std::string ErrorProfile::to_json() const {
  json j;
  j["sigma_phase"] = sigma_phase;
  j["sigma_coupling"] = sigma_coupling;
  j["sigma_loss_db"] = sigma_loss_db;
  j["mean_loss_db"] = mean_loss_db;
  j["mu_bs"] = mu_bs;
  j["mu_eta"] = mu_eta;
  j["lambda_c"] = lambda_c;
  j["detection_noise_sigma"] = detection_noise_sigma;
  return j.dump(2);
}

ErrorProfile ErrorProfile::from_json(const std::string& text) {
  const json j = json::parse(text);
  ErrorProfile p;
  p.sigma_phase = j.at("sigma_phase").get<double>();
  p.sigma_coupling = j.at("sigma_coupling").get<double>();
  p.sigma_loss_db = j.at("sigma_loss_db").get<double>();
  p.mean_loss_db = j.at("mean_loss_db").get<double>();
  p.mu_bs = j.at("mu_bs").get<double>();
  p.mu_eta = j.at("mu_eta").get<double>();
  p.lambda_c = j.at("lambda_c").get<double>();
  p.detection_noise_sigma = j.at("detection_noise_sigma").get<double>();
  p.validate();
  return p;
}

ErrorProfile ErrorProfile::with_sigmas(double phase, double coupling, double loss_db) {
  ErrorProfile p;
  p.sigma_phase = phase;
  p.sigma_coupling = coupling;
  p.sigma_loss_db = loss_db;
  p.mean_loss_db = 3.0 * loss_db;
  return p;
}

namespace {

NodeError draw_node(Rng& rng, const ErrorProfile& p, double dlam) {
  const double phase_mean = p.mu_eta * dlam;
  const double coupling_mean = p.mu_bs * dlam * dlam;
  NodeError e;
  e.d_theta = phase_mean + p.sigma_phase * rng.normal();
  e.d_phi = phase_mean + p.sigma_phase * rng.normal();
  e.d_left = coupling_mean + p.sigma_coupling * rng.normal();
  e.d_right = coupling_mean + p.sigma_coupling * rng.normal();
  e.loss_theta_db = std::max(0.0, p.mean_loss_db + p.sigma_loss_db * rng.normal());
  e.loss_phi_db = std::max(0.0, p.mean_loss_db + p.sigma_loss_db * rng.normal());
  return e;
}

MeshErrors draw_stage(Rng& rng, const ErrorProfile& p, size_t n_nodes, double dlam) {
  MeshErrors errs;
  errs.common_loss_db = p.mean_loss_db;
  errs.node_errors.reserve(n_nodes);
  for (size_t i = 0; i < n_nodes; ++i) errs.node_errors.push_back(draw_node(rng, p, dlam));
  return errs;
}

}  // namespace

ErrorSample sample_errors(const ErrorProfile& profile, const SVDProgram& program,
                          double lambda_nm, uint64_t seed) {
  profile.validate();
  Rng rng(seed);
  const double dlam = lambda_nm - profile.lambda_c;
  ErrorSample sample;
  sample.v_dagger = draw_stage(rng, profile, program.v_dagger.nodes.size(), dlam);
  sample.attenuators = draw_stage(rng, profile, program.attenuators.size(), dlam);
  sample.u = draw_stage(rng, profile, program.u.nodes.size(), dlam);
  sample.lambda_nm = lambda_nm;
  sample.seed = seed;
  return sample;
}

MeshErrors sample_mesh_errors(const ErrorProfile& profile, const MeshProgram& program,
                              double lambda_nm, uint64_t seed) {
  profile.validate();
  Rng rng(seed);
  return draw_stage(rng, profile, program.nodes.size(), lambda_nm - profile.lambda_c);
}

Eigen::VectorXd detection_noise(const Eigen::VectorXd& powers, double sigma, uint64_t seed) {
  if (sigma < 0) throw std::invalid_argument("detection_noise: sigma must be non-negative");
  if (sigma == 0) return powers;
  Rng rng(seed);
  Eigen::VectorXd out = powers;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out(i) = std::max(0.0, out(i) + sigma * rng.normal());
  }
  return out;
}

}  // namespace lighthash
