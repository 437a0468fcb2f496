#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "lighthash/bytes.hpp"
#include "lighthash/error_model.hpp"
#include "lighthash/mesh.hpp"
#include "lighthash/rng.hpp"
#include "lighthash/sha3.hpp"

namespace lighthash {

enum class ThresholdMode { Unsigned, Signed };

/// Protocol parameters. N must be a power of two dividing 256; t_int must
/// have the opposite parity to the output grid parity N*(K+1) mod 2.
struct LightHashParams {
  int n = 8;
  int k = 2;
  int t_int = 0;
  ThresholdMode mode = ThresholdMode::Unsigned;
  int r_copies = 1;
  int s_batch = 1;

  void validate() const;  // throws std::invalid_argument
};

/// Parity shared by every attainable output value s.
inline int grid_parity(int n, int k) { return (n * (k + 1)) % 2; }

/// The 256x256 block-diagonal integer operator: 256/N blocks of N x N
/// entries drawn from {2q - K - 1 : q in 1..K}, plus its derivation seeds.
struct BlockMatrix {
  int n = 0;
  int k = 0;
  std::vector<Eigen::MatrixXi> blocks;
  Hash256 prev_hash{};
  Hash256 merkle_root{};

  void validate() const;
};

/// Simulation-only random block matrix (consensus derivation lives in the
/// chain module).
BlockMatrix random_block_matrix(int n, int k, Rng& rng);

/// Phase-shift-keyed encoding: bit 0 -> +1/sqrt(N), bit 1 -> -1/sqrt(N).
Vector encode_input(std::span<const int> bits);

/// Exact integer matrix-vector product s_i = sum_j Q_ij * (+-1).
Eigen::VectorXi oracle_matvec(const Eigen::MatrixXi& q_block, std::span<const int> bits);

/// Aggregated distribution of |s| over uniform inputs, all rows of all
/// blocks. p_abs[a] is the probability of |s| = a. Exact (per-row dynamic
/// programming, equivalent to full input enumeration) when 2^N <= 65536,
/// otherwise 65536 deterministic SHA3-seeded Monte Carlo draws.
struct GridDistribution {
  std::vector<double> p_abs;

  double prob_above(int t) const;
  double prob_at(int a) const { return a < static_cast<int>(p_abs.size()) ? p_abs[a] : 0.0; }
};
GridDistribution output_distribution(const BlockMatrix& q);

/// Integer threshold of midpoint parity minimizing |P(|s| > t) - 1/2|,
/// ties toward smaller t. Deterministic given the block matrix (the Monte
/// Carlo branch is seeded from "LHT1" || merkle_root).
int select_threshold(const BlockMatrix& q, int n, int k);

/// Heaviside comparator with H(0) = 0: bit = p > p_th.
std::vector<int> threshold_unsigned(const Eigen::VectorXd& powers, double p_th);

/// Signed comparator against a co-phased unit reference:
/// bit = |y + 1|^2 > |y - 1|^2, ties -> 0.
std::vector<int> threshold_signed(const Vector& y);

/// Threshold power for one block in physical units: t^2 / (sigma_max^2 N).
double physical_threshold(int t_int, double sigma_max, int n);

struct ChunkTrace {
  Vector x;
  Vector y;
  Eigen::VectorXd p;
  Eigen::VectorXd s_grid;  // measured amplitude rescaled to grid units
};

struct HashTrace {
  Hash256 d1{};
  std::vector<ChunkTrace> chunks;
  Hash256 inner_bits{};
  Hash256 digest{};
};

/// A matrix-vector backend programmed once per block matrix; transforms the
/// 256 inner bits. Implementations are pure given their construction seeds.
class HashBackend {
 public:
  virtual ~HashBackend() = default;
  virtual int n() const = 0;
  virtual void transform(const Hash256& d1, Hash256& out, HashTrace* trace) const = 0;
};

/// Bit-exact integer reference backend.
class OracleBackend : public HashBackend {
 public:
  OracleBackend(BlockMatrix q, LightHashParams params);

  int n() const override { return params_.n; }
  void transform(const Hash256& d1, Hash256& out, HashTrace* trace) const override;

  const BlockMatrix& block_matrix() const { return q_; }
  const LightHashParams& params() const { return params_; }

 private:
  BlockMatrix q_;
  LightHashParams params_;
};

/// Photonic mesh simulation backend. Each block is programmed as an SVD
/// mesh with one static systematic error sample (drawn at `lambda_nm` from
/// `profile`, sub-seeded per block from `seed`); common-mode loss is
/// calibrated out of the detected powers.
class PhotonicBackend : public HashBackend {
 public:
  PhotonicBackend(const BlockMatrix& q, LightHashParams params, ErrorProfile profile,
                  double lambda_nm, uint64_t seed,
                  MeshLayout layout = MeshLayout::Rectangular);

  int n() const override { return params_.n; }
  void transform(const Hash256& d1, Hash256& out, HashTrace* trace) const override;

  /// Detected powers for one chunk input (after loss calibration and
  /// optional detection noise), in physical units.
  Eigen::VectorXd chunk_powers(int block_index, std::span<const int> bits,
                               uint64_t noise_seed) const;
  /// Complex field output for one chunk (no detection noise).
  Vector chunk_field(int block_index, std::span<const int> bits) const;

  double sigma_max(int block_index) const { return programs_[static_cast<size_t>(block_index)].sigma_max; }

 private:
  LightHashParams params_;
  ErrorProfile profile_;
  std::vector<SVDProgram> programs_;
  std::vector<Matrix> operators_;     // calibrated noisy operators
  std::vector<double> p_th_;          // physical threshold per block
  uint64_t seed_ = 0;
};

/// R-copy hardware-agnostic error correction: R cyclically permuted copies
/// of each block's program with independent error samples; detected powers
/// are averaged elementwise before thresholding.
class CorrectedBackend : public HashBackend {
 public:
  CorrectedBackend(const BlockMatrix& q, LightHashParams params, ErrorProfile profile,
                   double lambda_nm, uint64_t seed,
                   MeshLayout layout = MeshLayout::Rectangular);

  int n() const override { return params_.n; }
  void transform(const Hash256& d1, Hash256& out, HashTrace* trace) const override;

  Eigen::VectorXd chunk_powers(int block_index, std::span<const int> bits,
                               uint64_t noise_seed) const;

 private:
  LightHashParams params_;
  ErrorProfile profile_;
  std::vector<std::vector<SVDProgram>> programs_;  // [block][copy]
  std::vector<std::vector<Matrix>> operators_;
  std::vector<double> p_th_;
};

/// Cyclic-shift permutation schedule used by the corrected backend.
std::vector<std::vector<int>> cyclic_permutations(int n, int r);

/// Full digest: SHA3-256(header || nonce BE) -> backend transform ->
/// SHA3-256(bits XOR d1).
Hash256 lighthash_digest(std::span<const uint8_t> header_bytes, uint64_t nonce,
                         const HashBackend& backend, HashTrace* trace = nullptr);

/// True iff the D most significant bits of the digest are zero.
bool meets_difficulty(const Hash256& digest, int difficulty_bits);

}  // namespace lighthash
