#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "lighthash/mesh.hpp"

namespace lighthash {

/// Statistical parameters of the systematic photonic errors. Phase and
/// coupling sigmas are radians, losses are dB, and the dispersion scalings
/// shift the error means away from the center wavelength:
///   coupling ~ N(mu_bs * (lambda - lambda_c)^2, sigma_coupling)
///   phase    ~ N(mu_eta * (lambda - lambda_c), sigma_phase)
///   loss     = max(0, mean_loss_db + N(0, sigma_loss_db)) per shifter.
struct ErrorProfile {
  double sigma_phase = 0.0;
  double sigma_coupling = 0.0;
  double sigma_loss_db = 0.0;
  double mean_loss_db = 0.0;
  double mu_bs = 0.0;        // rad / nm^2
  double mu_eta = 0.0;       // rad / nm
  double lambda_c = 1560.0;  // nm
  double detection_noise_sigma = 0.0;

  bool is_zero() const;
  void validate() const;  // throws std::invalid_argument

  std::string to_json() const;
  static ErrorProfile from_json(const std::string& text);

  /// Profile with the given loss sigma and the default mean_loss_db of
  /// 3 * sigma_loss_db, which keeps the non-negativity clamp negligible.
  static ErrorProfile with_sigmas(double phase, double coupling, double loss_db);
};

/// Draws one systematic error sample for an SVD program. Deterministic:
/// the same (profile, program shape, lambda, seed) produces an identical
/// sample. Draw order is V-dagger nodes, attenuator nodes, U nodes; per
/// node: d_theta, d_phi, d_left, d_right, loss_theta, loss_phi.
ErrorSample sample_errors(const ErrorProfile& profile, const SVDProgram& program,
                          double lambda_nm, uint64_t seed);

/// Mesh-level variant used by the mesh unit surface.
MeshErrors sample_mesh_errors(const ErrorProfile& profile, const MeshProgram& program,
                              double lambda_nm, uint64_t seed);

/// Adds Normal(0, sigma) to each detected power, clamped at zero.
Eigen::VectorXd detection_noise(const Eigen::VectorXd& powers, double sigma, uint64_t seed);

}  // namespace lighthash
