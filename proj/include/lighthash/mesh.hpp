#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace lighthash {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Matrix2 = Eigen::Matrix2cd;
using Vector = Eigen::VectorXcd;

enum class MeshLayout { Rectangular, Triangular };
enum class NodeRole { UnitaryInternal, SingularValueAttenuator };

/// One interferometer node. `row` is the upper of the two ports it couples,
/// `column` the layer it sits in. Phases are reduced mod 2pi.
struct MZINode {
  double theta = 0.0;
  double phi = 0.0;
  int row = 0;
  int column = 0;
  NodeRole role = NodeRole::UnitaryInternal;
};

/// Ideal node transfer matrix:
///   i * [[e^{i phi} sin(theta/2), cos(theta/2)],
///        [e^{i phi} cos(theta/2), -sin(theta/2)]]
Matrix2 mzi_transfer(double theta, double phi);

/// One node's systematic error draw. Phase deviations are in radians,
/// coupler deviations offset the 50:50 point, and each phase shifter
/// carries its own loss in dB (>= 0 when freshly sampled; factored
/// samples may hold negative differential values).
struct NodeError {
  double d_theta = 0.0;
  double d_phi = 0.0;
  double d_left = 0.0;
  double d_right = 0.0;
  double loss_theta_db = 0.0;
  double loss_phi_db = 0.0;
};

/// Physical node built from its components:
///   B_{dr} diag(g_t e^{i(theta+dt)}, 1) B_{dl} diag(g_p e^{i(phi+dp)}, 1)
/// with B_d = [[C, iS], [iS, C]], C = cos(pi/4+d), S = sin(pi/4+d), and
/// g = 10^{-loss_db/20} on the shifter arm. Rejects negative loss.
Matrix2 mzi_transfer_noisy(double theta, double phi, const NodeError& err);

/// Per-mesh systematic error sample. `node_errors` follows the program's
/// node order. `common_loss_db` is the common-mode per-shifter loss; it
/// attenuates every port at each of the mesh's 2*num_layers shifter
/// columns, while the per-node losses enter as imbalance relative to it.
struct MeshErrors {
  std::vector<NodeError> node_errors;
  double common_loss_db = 0.0;
};

/// Phases programming one N-port mesh. Nodes are stored in application
/// order (input side first) and grouped into non-overlapping layers.
struct MeshProgram {
  int n_ports = 0;
  MeshLayout layout = MeshLayout::Rectangular;
  std::vector<MZINode> nodes;
  std::vector<double> output_phases;

  int num_layers() const;
};

/// Finds mesh phases realizing a given unitary. Requires
/// ||U^dag U - I||_max <= 1e-8; throws std::invalid_argument otherwise.
MeshProgram decompose_unitary(const Matrix& u, MeshLayout layout = MeshLayout::Rectangular);

/// Error-free transfer matrix of the program.
Matrix reconstruct(const MeshProgram& program);

/// Transfer matrix with a systematic error sample. Nodes are referenced to
/// their calibrated (ideal) transfer, so a zero sample reproduces the
/// error-free matrix exactly; the common-mode loss scales all ports.
Matrix reconstruct(const MeshProgram& program, const MeshErrors& errors);

Vector propagate(const MeshProgram& program, const Vector& in);
Vector propagate(const MeshProgram& program, const Vector& in, const MeshErrors& errors);

/// Splits a sample into its differential part (common_loss_db = 0, shifter
/// losses reduced by it) and the per-output field loss it factored out.
/// diag(loss) * reconstruct(program, differential) equals
/// reconstruct(program, errors).
struct FactoredLoss {
  MeshErrors differential;
  Eigen::VectorXd output_loss;
};
FactoredLoss factor_common_loss(const MeshProgram& program, const MeshErrors& errors);

/// SVD programming of one integer block: Q = sigma_max * U diag(sigma) V^dag
/// with sigma normalized so max(sigma) = 1. The singular-value stage is a
/// column of attenuator nodes with amplitude cos(theta/2).
struct SVDProgram {
  MeshProgram v_dagger;
  MeshProgram u;
  std::vector<double> sigma;
  std::vector<MZINode> attenuators;
  double sigma_max = 0.0;
  std::vector<int> permutation;  // relative to the unpermuted SVD

  int n() const { return v_dagger.n_ports; }
};

SVDProgram svd_program(const Eigen::MatrixXd& q_block, MeshLayout layout = MeshLayout::Rectangular);

/// Applies `perm` to the singular values, the matched columns of U and rows
/// of V^dag, and rebuilds both meshes. Error-free reconstruction is
/// invariant. Throws std::invalid_argument if perm is not a bijection.
SVDProgram permute_svd(const SVDProgram& program, std::span<const int> perm);

/// sigma_max * U diag(sigma) V^dag, error-free.
Matrix reconstruct(const SVDProgram& program);

/// Per-SVD-program error sample: one MeshErrors per stage.
struct ErrorSample {
  MeshErrors v_dagger;
  MeshErrors attenuators;
  MeshErrors u;
  double lambda_nm = 0.0;
  uint64_t seed = 0;
};

/// Field amplitude transmission of one attenuator node under errors,
/// referenced so the zero-error value is exactly cos(theta/2).
Complex attenuator_transmission(double theta, const NodeError& err);

/// Common-mode amplitude factor of the whole program (both meshes plus the
/// attenuator column) for a per-shifter common loss in dB.
double common_loss_amplitude(const SVDProgram& program, double common_loss_db);

Vector apply(const SVDProgram& program, const Vector& in);
Vector apply(const SVDProgram& program, const Vector& in, const ErrorSample& sample);

/// Dense operator equivalent of apply(); built once per (program, sample)
/// so repeated products are a single mat-vec.
Matrix build_operator(const SVDProgram& program);
Matrix build_operator(const SVDProgram& program, const ErrorSample& sample);

}  // namespace lighthash
