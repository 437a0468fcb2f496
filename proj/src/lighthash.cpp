#include "lighthash/lighthash.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace lighthash {

void LightHashParams::validate() const {
  if (n < 2 || n > 256 || !std::has_single_bit(static_cast<unsigned>(n)) || 256 % n != 0) {
    throw std::invalid_argument("LightHashParams: N must be a power of two dividing 256");
  }
  if (k < 2) throw std::invalid_argument("LightHashParams: K must be at least 2");
  if (t_int < 0) throw std::invalid_argument("LightHashParams: t_int must be non-negative");
  if (t_int % 2 == grid_parity(n, k)) {
    throw std::invalid_argument("LightHashParams: t_int must have midpoint parity");
  }
  if (r_copies < 1) throw std::invalid_argument("LightHashParams: R must be at least 1");
  if (s_batch < 1) throw std::invalid_argument("LightHashParams: S must be at least 1");
}

void BlockMatrix::validate() const {
  if (n < 2 || 256 % n != 0 || !std::has_single_bit(static_cast<unsigned>(n))) {
    throw std::invalid_argument("BlockMatrix: invalid N");
  }
  if (k < 2) throw std::invalid_argument("BlockMatrix: invalid K");
  if (static_cast<int>(blocks.size()) != 256 / n) {
    throw std::invalid_argument("BlockMatrix: wrong block count");
  }
  for (const auto& b : blocks) {
    if (b.rows() != n || b.cols() != n) throw std::invalid_argument("BlockMatrix: wrong block size");
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int v = b(i, j);
        if (v < 1 - k || v > k - 1 || ((v + k + 1) % 2) != 0) {
          throw std::invalid_argument("BlockMatrix: entry outside {2q - K - 1}");
        }
      }
    }
  }
}

BlockMatrix random_block_matrix(int n, int k, Rng& rng) {
  BlockMatrix q;
  q.n = n;
  q.k = k;
  q.blocks.resize(static_cast<size_t>(256 / n));
  for (auto& b : q.blocks) {
    b.resize(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        b(i, j) = 2 * (1 + static_cast<int>(rng.below(static_cast<uint64_t>(k)))) - k - 1;
      }
    }
  }
  return q;
}

Vector encode_input(std::span<const int> bits) {
  const int n = static_cast<int>(bits.size());
  if (n == 0) throw std::invalid_argument("encode_input: empty input");
  Vector x(n);
  const double a = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    x(i) = bits[static_cast<size_t>(i)] ? -a : a;
  }
  return x;
}

Eigen::VectorXi oracle_matvec(const Eigen::MatrixXi& q_block, std::span<const int> bits) {
  if (q_block.cols() != static_cast<Eigen::Index>(bits.size())) {
    throw std::invalid_argument("oracle_matvec: size mismatch");
  }
  Eigen::VectorXi signs(q_block.cols());
  for (Eigen::Index j = 0; j < signs.size(); ++j) {
    signs(j) = bits[static_cast<size_t>(j)] ? -1 : 1;
  }
  return q_block * signs;
}

double GridDistribution::prob_above(int t) const {
  double p = 0.0;
  for (size_t a = static_cast<size_t>(std::max(t + 1, 0)); a < p_abs.size(); ++a) p += p_abs[a];
  return p;
}

namespace {

/// Exact distribution of |sum_j row_j * (+-1)| over uniform signs, by
/// convolution; probabilities are dyadic and exact in double precision for
/// N <= 16.
void accumulate_row_exact(const Eigen::MatrixXi& block, int row, std::vector<double>& acc) {
  int m = 0;
  for (int j = 0; j < block.cols(); ++j) m += std::abs(block(row, j));
  std::vector<double> dist(static_cast<size_t>(2 * m + 1), 0.0);
  dist[static_cast<size_t>(m)] = 1.0;  // offset so index = s + m
  for (int j = 0; j < block.cols(); ++j) {
    const int a = std::abs(block(row, j));
    std::vector<double> next(dist.size(), 0.0);
    for (size_t idx = 0; idx < dist.size(); ++idx) {
      const double p = dist[idx];
      if (p == 0.0) continue;
      next[idx + static_cast<size_t>(a)] += 0.5 * p;
      next[idx - static_cast<size_t>(a)] += 0.5 * p;
    }
    dist.swap(next);
  }
  if (acc.size() < static_cast<size_t>(m + 1)) acc.resize(static_cast<size_t>(m + 1), 0.0);
  for (int s = -m; s <= m; ++s) {
    const double p = dist[static_cast<size_t>(s + m)];
    if (p != 0.0) acc[static_cast<size_t>(std::abs(s))] += p;
  }
}

GridDistribution exact_distribution(const BlockMatrix& q) {
  std::vector<double> acc;
  int rows = 0;
  for (const auto& block : q.blocks) {
    for (int i = 0; i < block.rows(); ++i) {
      accumulate_row_exact(block, i, acc);
      ++rows;
    }
  }
  for (auto& p : acc) p /= rows;
  return {std::move(acc)};
}

constexpr int kMonteCarloDraws = 65536;

GridDistribution sampled_distribution(const BlockMatrix& q) {
  Bytes prefix;
  prefix.insert(prefix.end(), {'L', 'H', 'T', '1'});
  prefix.insert(prefix.end(), q.merkle_root.begin(), q.merkle_root.end());
  Sha3Stream stream(std::move(prefix));

  const int n = q.n;
  std::vector<int64_t> counts;
  Eigen::VectorXi signs(n);
  int64_t total = 0;
  for (int draw = 0; draw < kMonteCarloDraws; ++draw) {
    for (const auto& block : q.blocks) {
      for (int j = 0; j < n; ++j) signs(j) = stream.next_bit() ? -1 : 1;
      const Eigen::VectorXi s = block * signs;
      for (int i = 0; i < n; ++i) {
        const int a = std::abs(s(i));
        if (static_cast<size_t>(a) >= counts.size()) counts.resize(static_cast<size_t>(a) + 1, 0);
        ++counts[static_cast<size_t>(a)];
        ++total;
      }
    }
  }
  GridDistribution dist;
  dist.p_abs.resize(counts.size());
  for (size_t i = 0; i < counts.size(); ++i) {
    dist.p_abs[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return dist;
}

}  // namespace

GridDistribution output_distribution(const BlockMatrix& q) {
  q.validate();
  return q.n <= 16 ? exact_distribution(q) : sampled_distribution(q);
}

int select_threshold(const BlockMatrix& q, int n, int k) {
  if (q.n != n || q.k != k) throw std::invalid_argument("select_threshold: parameter mismatch");
  const GridDistribution dist = output_distribution(q);
  const int t_parity = 1 - grid_parity(n, k);
  const int max_abs = (k - 1) * n;
  int best_t = t_parity;
  double best_d = std::numeric_limits<double>::infinity();
  for (int t = t_parity; t <= max_abs + 1; t += 2) {
    const double d = std::abs(dist.prob_above(t) - 0.5);
    if (d < best_d) {
      best_d = d;
      best_t = t;
    }
  }
  return best_t;
}

std::vector<int> threshold_unsigned(const Eigen::VectorXd& powers, double p_th) {
  std::vector<int> bits(static_cast<size_t>(powers.size()));
  for (Eigen::Index i = 0; i < powers.size(); ++i) {
    if (powers(i) < 0) throw std::invalid_argument("threshold_unsigned: negative power");
    bits[static_cast<size_t>(i)] = powers(i) > p_th ? 1 : 0;
  }
  return bits;
}

std::vector<int> threshold_signed(const Vector& y) {
  std::vector<int> bits(static_cast<size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double p_plus = std::norm(y(i) + Complex(1, 0));
    const double p_minus = std::norm(y(i) - Complex(1, 0));
    bits[static_cast<size_t>(i)] = p_plus > p_minus ? 1 : 0;
  }
  return bits;
}

double physical_threshold(int t_int, double sigma_max, int n) {
  return static_cast<double>(t_int) * t_int / (sigma_max * sigma_max * n);
}

namespace {

std::vector<int> chunk_bits(const Hash256& d1, int block_index, int n) {
  std::vector<int> bits(static_cast<size_t>(n));
  for (int p = 0; p < n; ++p) {
    bits[static_cast<size_t>(p)] = get_bit(d1, block_index * n + p);
  }
  return bits;
}

void store_bits(Hash256& out, int block_index, int n, const std::vector<int>& bits) {
  for (int p = 0; p < n; ++p) {
    set_bit(out, block_index * n + p, bits[static_cast<size_t>(p)]);
  }
}

}  // namespace

OracleBackend::OracleBackend(BlockMatrix q, LightHashParams params)
    : q_(std::move(q)), params_(params) {
  params_.validate();
  q_.validate();
  if (q_.n != params_.n || q_.k != params_.k) {
    throw std::invalid_argument("OracleBackend: params do not match block matrix");
  }
}

void OracleBackend::transform(const Hash256& d1, Hash256& out, HashTrace* trace) const {
  out.fill(0);
  const int n = params_.n;
  for (int m = 0; m < static_cast<int>(q_.blocks.size()); ++m) {
    const auto bits = chunk_bits(d1, m, n);
    const Eigen::VectorXi s = oracle_matvec(q_.blocks[static_cast<size_t>(m)], bits);
    std::vector<int> out_bits(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int v = s(i);
      out_bits[static_cast<size_t>(i)] = params_.mode == ThresholdMode::Unsigned
                                             ? (std::abs(v) > params_.t_int ? 1 : 0)
                                             : (v > 0 ? 1 : 0);
    }
    store_bits(out, m, n, out_bits);
    if (trace != nullptr) {
      ChunkTrace ct;
      ct.x = encode_input(bits);
      ct.s_grid = s.cast<double>();
      ct.y = ct.s_grid.cast<Complex>();  // grid-unit field for the reference path
      ct.p = ct.s_grid.cwiseAbs2();
      trace->chunks.push_back(std::move(ct));
    }
  }
}

PhotonicBackend::PhotonicBackend(const BlockMatrix& q, LightHashParams params,
                                 ErrorProfile profile, double lambda_nm, uint64_t seed,
                                 MeshLayout layout)
    : params_(params), profile_(std::move(profile)), seed_(seed) {
  params_.validate();
  q.validate();
  profile_.validate();
  if (q.n != params_.n || q.k != params_.k) {
    throw std::invalid_argument("PhotonicBackend: params do not match block matrix");
  }
  const int blocks = static_cast<int>(q.blocks.size());
  programs_.reserve(static_cast<size_t>(blocks));
  operators_.reserve(static_cast<size_t>(blocks));
  p_th_.reserve(static_cast<size_t>(blocks));
  for (int m = 0; m < blocks; ++m) {
    SVDProgram prog = svd_program(q.blocks[static_cast<size_t>(m)].cast<double>(), layout);
    const ErrorSample sample =
        sample_errors(profile_, prog, lambda_nm, mix_seed(seed, 0x70686f746fULL, static_cast<uint64_t>(m)));
    // detected powers are calibrated by the known common-mode loss
    const double cal = common_loss_amplitude(prog, profile_.mean_loss_db);
    operators_.push_back(build_operator(prog, sample) / cal);
    p_th_.push_back(physical_threshold(params_.t_int, prog.sigma_max, params_.n));
    programs_.push_back(std::move(prog));
  }
}

Vector PhotonicBackend::chunk_field(int block_index, std::span<const int> bits) const {
  return operators_[static_cast<size_t>(block_index)] * encode_input(bits);
}

Eigen::VectorXd PhotonicBackend::chunk_powers(int block_index, std::span<const int> bits,
                                              uint64_t noise_seed) const {
  const Vector y = chunk_field(block_index, bits);
  Eigen::VectorXd p = y.cwiseAbs2();
  if (profile_.detection_noise_sigma > 0) {
    p = detection_noise(p, profile_.detection_noise_sigma, noise_seed);
  }
  return p;
}

void PhotonicBackend::transform(const Hash256& d1, Hash256& out, HashTrace* trace) const {
  out.fill(0);
  const int n = params_.n;
  for (int m = 0; m < static_cast<int>(programs_.size()); ++m) {
    const auto bits = chunk_bits(d1, m, n);
    std::vector<int> out_bits;
    Vector y;
    Eigen::VectorXd p;
    if (params_.mode == ThresholdMode::Unsigned) {
      // per-input noise stream keeps the backend a pure function
      const uint64_t noise_seed =
          mix_seed(seed_, read_u64be(std::span(d1).first(8)), static_cast<uint64_t>(m));
      p = chunk_powers(m, bits, noise_seed);
      out_bits = threshold_unsigned(p, p_th_[static_cast<size_t>(m)]);
    } else {
      y = chunk_field(m, bits);
      // co-phase against the simulated ideal reference and rescale the
      // field to unit grid so the +-1 reference matches the signal scale
      const double scale = programs_[static_cast<size_t>(m)].sigma_max *
                           std::sqrt(static_cast<double>(n));
      y *= scale;
      p = y.cwiseAbs2();
      out_bits = threshold_signed(y);
    }
    store_bits(out, m, n, out_bits);
    if (trace != nullptr) {
      ChunkTrace ct;
      ct.x = encode_input(bits);
      if (y.size() == 0) y = chunk_field(m, bits);
      ct.y = y;
      ct.p = p;
      const double scale = programs_[static_cast<size_t>(m)].sigma_max *
                           std::sqrt(static_cast<double>(n));
      ct.s_grid = (chunk_field(m, bits) * scale).cwiseAbs();
      trace->chunks.push_back(std::move(ct));
    }
  }
}

std::vector<std::vector<int>> cyclic_permutations(int n, int r) {
  std::vector<std::vector<int>> perms;
  perms.reserve(static_cast<size_t>(r));
  for (int shift = 0; shift < r; ++shift) {
    std::vector<int> p(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<size_t>(i)] = (i + shift) % n;
    perms.push_back(std::move(p));
  }
  return perms;
}

CorrectedBackend::CorrectedBackend(const BlockMatrix& q, LightHashParams params,
                                   ErrorProfile profile, double lambda_nm, uint64_t seed,
                                   MeshLayout layout)
    : params_(params), profile_(std::move(profile)) {
  params_.validate();
  q.validate();
  profile_.validate();
  if (q.n != params_.n || q.k != params_.k) {
    throw std::invalid_argument("CorrectedBackend: params do not match block matrix");
  }
  const auto perms = cyclic_permutations(params_.n, params_.r_copies);
  const int blocks = static_cast<int>(q.blocks.size());
  programs_.resize(static_cast<size_t>(blocks));
  operators_.resize(static_cast<size_t>(blocks));
  for (int m = 0; m < blocks; ++m) {
    SVDProgram base = svd_program(q.blocks[static_cast<size_t>(m)].cast<double>(), layout);
    p_th_.push_back(physical_threshold(params_.t_int, base.sigma_max, params_.n));
    for (int r = 0; r < params_.r_copies; ++r) {
      SVDProgram copy = permute_svd(base, perms[static_cast<size_t>(r)]);
      const ErrorSample sample = sample_errors(
          profile_, copy, lambda_nm,
          mix_seed(seed, static_cast<uint64_t>(m), 0xc0ffeeULL + static_cast<uint64_t>(r)));
      const double cal = common_loss_amplitude(copy, profile_.mean_loss_db);
      operators_[static_cast<size_t>(m)].push_back(build_operator(copy, sample) / cal);
      programs_[static_cast<size_t>(m)].push_back(std::move(copy));
    }
  }
}

Eigen::VectorXd CorrectedBackend::chunk_powers(int block_index, std::span<const int> bits,
                                               uint64_t /*noise_seed*/) const {
  const Vector x = encode_input(bits);
  const auto& ops = operators_[static_cast<size_t>(block_index)];
  Eigen::VectorXd p = Eigen::VectorXd::Zero(params_.n);
  for (const auto& op : ops) p += (op * x).cwiseAbs2();
  return p / static_cast<double>(ops.size());
}

void CorrectedBackend::transform(const Hash256& d1, Hash256& out, HashTrace* trace) const {
  out.fill(0);
  const int n = params_.n;
  for (int m = 0; m < static_cast<int>(operators_.size()); ++m) {
    const auto bits = chunk_bits(d1, m, n);
    std::vector<int> out_bits;
    Eigen::VectorXd p;
    if (params_.mode == ThresholdMode::Unsigned) {
      p = chunk_powers(m, bits, 0);
      out_bits = threshold_unsigned(p, p_th_[static_cast<size_t>(m)]);
    } else {
      // average the two interferometer outputs across copies, then compare
      const Vector x = encode_input(bits);
      const double scale = programs_[static_cast<size_t>(m)][0].sigma_max *
                           std::sqrt(static_cast<double>(n));
      Eigen::VectorXd p_plus = Eigen::VectorXd::Zero(n);
      Eigen::VectorXd p_minus = Eigen::VectorXd::Zero(n);
      for (const auto& op : operators_[static_cast<size_t>(m)]) {
        const Vector y = (op * x) * scale;
        p_plus += (y.array() + Complex(1, 0)).abs2().matrix();
        p_minus += (y.array() - Complex(1, 0)).abs2().matrix();
      }
      out_bits.resize(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) {
        out_bits[static_cast<size_t>(i)] = p_plus(i) > p_minus(i) ? 1 : 0;
      }
      p = (p_plus - p_minus) / static_cast<double>(operators_[static_cast<size_t>(m)].size());
    }
    store_bits(out, m, n, out_bits);
    if (trace != nullptr) {
      ChunkTrace ct;
      ct.x = encode_input(bits);
      ct.p = p;
      trace->chunks.push_back(std::move(ct));
    }
  }
}

Hash256 lighthash_digest(std::span<const uint8_t> header_bytes, uint64_t nonce,
                         const HashBackend& backend, HashTrace* trace) {
  Bytes msg(header_bytes.begin(), header_bytes.end());
  append_u64be(msg, nonce);
  const Hash256 d1 = sha3_256(msg);

  Hash256 inner{};
  backend.transform(d1, inner, trace);

  Hash256 xored;
  for (size_t i = 0; i < xored.size(); ++i) xored[i] = inner[i] ^ d1[i];
  const Hash256 digest = sha3_256(xored);

  if (trace != nullptr) {
    trace->d1 = d1;
    trace->inner_bits = inner;
    trace->digest = digest;
  }
  return digest;
}

bool meets_difficulty(const Hash256& digest, int difficulty_bits) {
  if (difficulty_bits < 0 || difficulty_bits > 256) {
    throw std::invalid_argument("meets_difficulty: D must be in [0, 256]");
  }
  int remaining = difficulty_bits;
  for (const uint8_t byte : digest) {
    if (remaining <= 0) return true;
    if (remaining >= 8) {
      if (byte != 0) return false;
      remaining -= 8;
    } else {
      return (byte >> (8 - remaining)) == 0;
    }
  }
  return true;
}

}  // namespace lighthash
