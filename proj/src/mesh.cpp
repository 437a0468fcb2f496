#include "lighthash/mesh.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lighthash {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double reduce_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a;
}

double db_to_amplitude(double loss_db) { return std::pow(10.0, -loss_db / 20.0); }

Matrix2 coupler(double deviation) {
  const double c = std::cos(std::numbers::pi / 4.0 + deviation);
  const double s = std::sin(std::numbers::pi / 4.0 + deviation);
  Matrix2 b;
  b << Complex(c, 0), Complex(0, s), Complex(0, s), Complex(c, 0);
  return b;
}

/// Eq-level physical node without the non-negative loss check; factored
/// (differential) samples legitimately carry negative relative loss.
Matrix2 noisy_node_unchecked(double theta, double phi, const NodeError& e) {
  const Complex arm_theta = db_to_amplitude(e.loss_theta_db) *
                            std::exp(Complex(0, theta + e.d_theta));
  const Complex arm_phi = db_to_amplitude(e.loss_phi_db) * std::exp(Complex(0, phi + e.d_phi));
  Matrix2 t = coupler(e.d_right);
  t = t * Eigen::DiagonalMatrix<Complex, 2>(arm_theta, 1.0);
  t = t * coupler(e.d_left);
  t = t * Eigen::DiagonalMatrix<Complex, 2>(arm_phi, 1.0);
  return t;
}

/// Node transfer referenced to calibration: zero error reproduces
/// mzi_transfer(theta, phi) exactly.
Matrix2 calibrated_node(double theta, double phi, const NodeError& e) {
  return noisy_node_unchecked(theta, phi, e) * std::exp(Complex(0, -theta / 2.0));
}

void check_errors_shape(const MeshProgram& program, const MeshErrors& errors) {
  if (errors.node_errors.size() != program.nodes.size()) {
    throw std::invalid_argument("error sample does not match mesh shape");
  }
}

void apply_node_left(Matrix& m, const Matrix2& t, int row) {
  const Eigen::Matrix<Complex, 2, Eigen::Dynamic> tmp = t * m.middleRows(row, 2);
  m.middleRows(row, 2) = tmp;
}

struct NullingFactor {
  double theta;
  double phi;
  int port;  // upper port of the pair
};

NullingFactor null_from_right(const Matrix& v, int r, int c) {
  // choose (theta, phi) so that (v * T(theta, phi)^dag) has a zero at (r, c)
  const Complex a = v(r, c);
  const Complex b = v(r, c + 1);
  const double phi = reduce_angle(std::arg(a) - std::arg(-b));
  const double theta = 2.0 * std::atan2(std::abs(b), std::abs(a));
  return {theta, phi, c};
}

NullingFactor null_from_left(const Matrix& v, int r, int c) {
  // choose (theta, phi) so that (T(theta, phi) * v) has a zero at (r, c);
  // the node couples rows (r-1, r)
  const Complex a = v(r - 1, c);
  const Complex b = v(r, c);
  const double phi = reduce_angle(std::arg(b) - std::arg(a));
  const double theta = 2.0 * std::atan2(std::abs(a), std::abs(b));
  return {theta, phi, r - 1};
}

void right_multiply_adjoint(Matrix& v, const NullingFactor& f) {
  const Matrix2 a = mzi_transfer(f.theta, f.phi).adjoint();
  const Eigen::Matrix<Eigen::dcomplex, Eigen::Dynamic, 2> tmp = v.middleCols(f.port, 2) * a;
  v.middleCols(f.port, 2) = tmp;
}

void left_multiply(Matrix& v, const NullingFactor& f) {
  apply_node_left(v, mzi_transfer(f.theta, f.phi), f.port);
}

std::vector<double> diagonal_phases(const Matrix& v) {
  const int n = static_cast<int>(v.rows());
  double max_offdiag = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) max_offdiag = std::max(max_offdiag, std::abs(v(i, j)));
  if (max_offdiag > 1e-7) {
    throw std::runtime_error("mesh decomposition failed to reach a diagonal");
  }
  std::vector<double> d(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) d[static_cast<size_t>(i)] = std::arg(v(i, i));
  return d;
}

/// Greedy earliest-possible layer assignment over application order.
void assign_layers(MeshProgram& program) {
  std::vector<int> next_free(static_cast<size_t>(program.n_ports), 0);
  for (auto& node : program.nodes) {
    const int col = std::max(next_free[static_cast<size_t>(node.row)],
                             next_free[static_cast<size_t>(node.row) + 1]);
    node.column = col;
    next_free[static_cast<size_t>(node.row)] = col + 1;
    next_free[static_cast<size_t>(node.row) + 1] = col + 1;
  }
}

MeshProgram decompose_rectangular(const Matrix& u) {
  const int n = static_cast<int>(u.rows());
  Matrix v = u;
  std::vector<NullingFactor> right, left;
  for (int i = 1; i < n; ++i) {
    if (i % 2 == 1) {
      for (int j = 0; j < i; ++j) {
        const auto f = null_from_right(v, n - 1 - j, i - 1 - j);
        right_multiply_adjoint(v, f);
        right.push_back(f);
      }
    } else {
      for (int j = 1; j <= i; ++j) {
        const auto f = null_from_left(v, n - 1 + j - i, j - 1);
        left_multiply(v, f);
        left.push_back(f);
      }
    }
  }
  auto d = diagonal_phases(v);

  MeshProgram program;
  program.n_ports = n;
  program.layout = MeshLayout::Rectangular;
  for (const auto& f : right) {
    program.nodes.push_back({reduce_angle(f.theta), f.phi, f.port, 0, NodeRole::UnitaryInternal});
  }
  // commute each left-factor adjoint through the diagonal:
  //   T(th, ph)^dag diag(e1, e2) = diag(e2 - ph + pi, e2 + pi) T(th, e1 - e2)
  for (auto it = left.rbegin(); it != left.rend(); ++it) {
    const auto m = static_cast<size_t>(it->port);
    const double e1 = d[m];
    const double e2 = d[m + 1];
    program.nodes.push_back({reduce_angle(it->theta), reduce_angle(e1 - e2), it->port, 0,
                             NodeRole::UnitaryInternal});
    d[m] = e2 - it->phi + std::numbers::pi;
    d[m + 1] = e2 + std::numbers::pi;
  }
  program.output_phases.resize(static_cast<size_t>(n));
  for (size_t i = 0; i < d.size(); ++i) program.output_phases[i] = reduce_angle(d[i]);
  assign_layers(program);
  return program;
}

MeshProgram decompose_triangular(const Matrix& u) {
  const int n = static_cast<int>(u.rows());
  Matrix v = u;
  MeshProgram program;
  program.n_ports = n;
  program.layout = MeshLayout::Triangular;
  // sweep rows from the bottom; all factors act from the right
  for (int r = n - 1; r >= 1; --r) {
    for (int c = 0; c < r; ++c) {
      const auto f = null_from_right(v, r, c);
      right_multiply_adjoint(v, f);
      program.nodes.push_back({reduce_angle(f.theta), f.phi, f.port, 0, NodeRole::UnitaryInternal});
    }
  }
  auto d = diagonal_phases(v);
  program.output_phases.resize(static_cast<size_t>(n));
  for (size_t i = 0; i < d.size(); ++i) program.output_phases[i] = reduce_angle(d[i]);
  assign_layers(program);
  return program;
}

}  // namespace

Matrix2 mzi_transfer(double theta, double phi) {
  const double s = std::sin(theta / 2.0);
  const double c = std::cos(theta / 2.0);
  const Complex ip(0, 1);
  const Complex ep = std::exp(Complex(0, phi));
  Matrix2 t;
  t << ip * ep * s, ip * c, ip * ep * c, -ip * s;
  return t;
}

Matrix2 mzi_transfer_noisy(double theta, double phi, const NodeError& err) {
  if (err.loss_theta_db < 0 || err.loss_phi_db < 0) {
    throw std::invalid_argument("mzi_transfer_noisy: loss must be non-negative");
  }
  return noisy_node_unchecked(theta, phi, err);
}

int MeshProgram::num_layers() const {
  int layers = 0;
  for (const auto& node : nodes) layers = std::max(layers, node.column + 1);
  return layers;
}

MeshProgram decompose_unitary(const Matrix& u, MeshLayout layout) {
  if (u.rows() != u.cols() || u.rows() < 1) {
    throw std::invalid_argument("decompose_unitary: matrix must be square");
  }
  const double dev = (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols()))
                         .cwiseAbs()
                         .maxCoeff();
  if (dev > 1e-8) {
    std::ostringstream msg;
    msg << "decompose_unitary: input is not unitary (||U^dag U - I||_max = " << dev << ")";
    throw std::invalid_argument(msg.str());
  }
  return layout == MeshLayout::Rectangular ? decompose_rectangular(u) : decompose_triangular(u);
}

Matrix reconstruct(const MeshProgram& program) {
  Matrix t = Matrix::Identity(program.n_ports, program.n_ports);
  for (const auto& node : program.nodes) {
    apply_node_left(t, mzi_transfer(node.theta, node.phi), node.row);
  }
  for (int i = 0; i < program.n_ports; ++i) {
    t.row(i) *= std::exp(Complex(0, program.output_phases[static_cast<size_t>(i)]));
  }
  return t;
}

Matrix reconstruct(const MeshProgram& program, const MeshErrors& errors) {
  check_errors_shape(program, errors);
  Matrix t = Matrix::Identity(program.n_ports, program.n_ports);
  for (size_t i = 0; i < program.nodes.size(); ++i) {
    const auto& node = program.nodes[i];
    apply_node_left(t, calibrated_node(node.theta, node.phi, errors.node_errors[i]), node.row);
  }
  for (int i = 0; i < program.n_ports; ++i) {
    t.row(i) *= std::exp(Complex(0, program.output_phases[static_cast<size_t>(i)]));
  }
  // common-mode loss attenuates every port at each of the 2*layers shifter columns
  t *= db_to_amplitude(errors.common_loss_db * 2.0 * program.num_layers());
  return t;
}

Vector propagate(const MeshProgram& program, const Vector& in) {
  if (in.size() != program.n_ports) throw std::invalid_argument("propagate: size mismatch");
  Vector y = in;
  for (const auto& node : program.nodes) {
    const Matrix2 t = mzi_transfer(node.theta, node.phi);
    const Complex a = y(node.row);
    const Complex b = y(node.row + 1);
    y(node.row) = t(0, 0) * a + t(0, 1) * b;
    y(node.row + 1) = t(1, 0) * a + t(1, 1) * b;
  }
  for (int i = 0; i < program.n_ports; ++i) {
    y(i) *= std::exp(Complex(0, program.output_phases[static_cast<size_t>(i)]));
  }
  return y;
}

Vector propagate(const MeshProgram& program, const Vector& in, const MeshErrors& errors) {
  check_errors_shape(program, errors);
  if (in.size() != program.n_ports) throw std::invalid_argument("propagate: size mismatch");
  Vector y = in;
  for (size_t i = 0; i < program.nodes.size(); ++i) {
    const auto& node = program.nodes[i];
    const Matrix2 t = calibrated_node(node.theta, node.phi, errors.node_errors[i]);
    const Complex a = y(node.row);
    const Complex b = y(node.row + 1);
    y(node.row) = t(0, 0) * a + t(0, 1) * b;
    y(node.row + 1) = t(1, 0) * a + t(1, 1) * b;
  }
  for (int i = 0; i < program.n_ports; ++i) {
    y(i) *= std::exp(Complex(0, program.output_phases[static_cast<size_t>(i)]));
  }
  y *= db_to_amplitude(errors.common_loss_db * 2.0 * program.num_layers());
  return y;
}

FactoredLoss factor_common_loss(const MeshProgram& program, const MeshErrors& errors) {
  check_errors_shape(program, errors);
  FactoredLoss out;
  out.differential = errors;
  out.differential.common_loss_db = 0.0;
  for (auto& e : out.differential.node_errors) {
    e.loss_theta_db -= errors.common_loss_db;
    e.loss_phi_db -= errors.common_loss_db;
  }
  const double amp = db_to_amplitude(errors.common_loss_db * 2.0 * program.num_layers());
  out.output_loss = Eigen::VectorXd::Constant(program.n_ports, amp);
  return out;
}

SVDProgram svd_program(const Eigen::MatrixXd& q_block, MeshLayout layout) {
  if (q_block.rows() != q_block.cols() || q_block.rows() < 1) {
    throw std::invalid_argument("svd_program: block must be square");
  }
  if (q_block.cwiseAbs().maxCoeff() == 0.0) {
    throw std::invalid_argument("svd_program: block must be nonzero");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(q_block, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const int n = static_cast<int>(q_block.rows());

  SVDProgram program;
  program.sigma_max = svd.singularValues()(0);
  program.sigma.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    program.sigma[static_cast<size_t>(i)] = svd.singularValues()(i) / program.sigma_max;
  }
  program.u = decompose_unitary(svd.matrixU().cast<Complex>(), layout);
  program.v_dagger = decompose_unitary(svd.matrixV().transpose().cast<Complex>(), layout);
  program.attenuators.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = std::clamp(program.sigma[static_cast<size_t>(i)], 0.0, 1.0);
    program.attenuators[static_cast<size_t>(i)] = {2.0 * std::acos(s), 0.0, i, 0,
                                                   NodeRole::SingularValueAttenuator};
  }
  program.permutation.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) program.permutation[static_cast<size_t>(i)] = i;

  const double err = (reconstruct(program) - q_block.cast<Complex>()).cwiseAbs().maxCoeff();
  if (err > 1e-9) {
    std::ostringstream msg;
    msg << "svd_program: decomposition failed to converge (reconstruction error " << err << ")";
    throw std::runtime_error(msg.str());
  }
  return program;
}

SVDProgram permute_svd(const SVDProgram& program, std::span<const int> perm) {
  const int n = program.n();
  if (static_cast<int>(perm.size()) != n) {
    throw std::invalid_argument("permute_svd: permutation size mismatch");
  }
  std::vector<bool> seen(static_cast<size_t>(n), false);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[static_cast<size_t>(p)]) {
      throw std::invalid_argument("permute_svd: not a bijection");
    }
    seen[static_cast<size_t>(p)] = true;
  }

  const Matrix u_mat = reconstruct(program.u);
  const Matrix v_mat = reconstruct(program.v_dagger);
  Matrix u_perm(n, n), v_perm(n, n);
  SVDProgram out;
  out.sigma.resize(static_cast<size_t>(n));
  out.permutation.resize(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const int p = perm[static_cast<size_t>(k)];
    u_perm.col(k) = u_mat.col(p);
    v_perm.row(k) = v_mat.row(p);
    out.sigma[static_cast<size_t>(k)] = program.sigma[static_cast<size_t>(p)];
    out.permutation[static_cast<size_t>(k)] = program.permutation[static_cast<size_t>(p)];
  }
  out.sigma_max = program.sigma_max;
  out.u = decompose_unitary(u_perm, program.u.layout);
  out.v_dagger = decompose_unitary(v_perm, program.v_dagger.layout);
  out.attenuators.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = std::clamp(out.sigma[static_cast<size_t>(i)], 0.0, 1.0);
    out.attenuators[static_cast<size_t>(i)] = {2.0 * std::acos(s), 0.0, i, 0,
                                               NodeRole::SingularValueAttenuator};
  }
  return out;
}

Matrix reconstruct(const SVDProgram& program) {
  const Matrix u_mat = reconstruct(program.u);
  const Matrix v_mat = reconstruct(program.v_dagger);
  Vector sigma(program.n());
  for (int i = 0; i < program.n(); ++i) sigma(i) = program.sigma[static_cast<size_t>(i)];
  return program.sigma_max * u_mat * sigma.asDiagonal() * v_mat;
}

Complex attenuator_transmission(double theta, const NodeError& err) {
  // input on the lower port, output on the upper port; referenced so the
  // zero-error transmission is exactly cos(theta/2)
  const Matrix2 t = noisy_node_unchecked(theta, 0.0, err);
  return t(0, 1) * Complex(0, -1) * std::exp(Complex(0, -theta / 2.0));
}

double common_loss_amplitude(const SVDProgram& program, double common_loss_db) {
  const int shifter_columns =
      2 * (program.v_dagger.num_layers() + 1 + program.u.num_layers());
  return db_to_amplitude(common_loss_db * shifter_columns);
}

Vector apply(const SVDProgram& program, const Vector& in) {
  Vector y = propagate(program.v_dagger, in);
  for (int i = 0; i < program.n(); ++i) y(i) *= program.sigma[static_cast<size_t>(i)];
  return propagate(program.u, y);
}

Vector apply(const SVDProgram& program, const Vector& in, const ErrorSample& sample) {
  if (sample.attenuators.node_errors.size() != program.attenuators.size()) {
    throw std::invalid_argument("apply: attenuator sample does not match shape");
  }
  Vector y = propagate(program.v_dagger, in, sample.v_dagger);
  for (int i = 0; i < program.n(); ++i) {
    y(i) *= attenuator_transmission(program.attenuators[static_cast<size_t>(i)].theta,
                                    sample.attenuators.node_errors[static_cast<size_t>(i)]);
  }
  // the attenuator column's own common-mode loss (one layer, two shifter columns)
  y *= db_to_amplitude(sample.attenuators.common_loss_db * 2.0);
  return propagate(program.u, y, sample.u);
}

Matrix build_operator(const SVDProgram& program) {
  const Matrix u_mat = reconstruct(program.u);
  const Matrix v_mat = reconstruct(program.v_dagger);
  Vector sigma(program.n());
  for (int i = 0; i < program.n(); ++i) sigma(i) = program.sigma[static_cast<size_t>(i)];
  return u_mat * sigma.asDiagonal() * v_mat;
}

Matrix build_operator(const SVDProgram& program, const ErrorSample& sample) {
  if (sample.attenuators.node_errors.size() != program.attenuators.size()) {
    throw std::invalid_argument("build_operator: attenuator sample does not match shape");
  }
  const Matrix u_mat = reconstruct(program.u, sample.u);
  const Matrix v_mat = reconstruct(program.v_dagger, sample.v_dagger);
  Vector t(program.n());
  for (int i = 0; i < program.n(); ++i) {
    t(i) = attenuator_transmission(program.attenuators[static_cast<size_t>(i)].theta,
                                   sample.attenuators.node_errors[static_cast<size_t>(i)]);
  }
  return u_mat * t.asDiagonal() * v_mat *
         db_to_amplitude(sample.attenuators.common_loss_db * 2.0);
}

}  // namespace lighthash
