#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lighthash/lighthash.hpp"

namespace lighthash {

struct Block {
  uint64_t height = 0;
  Hash256 prev_hash{};
  Hash256 merkle_root{};
  int difficulty = 0;
  int n = 8;
  int k = 2;
  int t_int = 0;
  uint64_t nonce = 0;
  Hash256 hash{};
  std::vector<Bytes> transactions;
};

/// Consensus header bytes (nonce excluded; it is appended at hashing time):
/// "LHB1" | height u64 BE | prev_hash | merkle_root | N u16 BE | K u16 BE |
/// D u16 BE | t_int i32 BE.
Bytes header_bytes(const Block& block);

/// SHA3-256 tree with domain-separated leaves (0x00 || tx) and internal
/// nodes (0x01 || left || right); an odd node is duplicated at each level.
Hash256 merkle_root(const std::vector<Bytes>& transactions);

/// Deterministic Q derivation: entry (block m, row i, col j) uses
/// n = m N^2 + i N + j, u = first 8 bytes BE of
/// SHA3-256("LHQ1" || prev_hash || merkle_root || u64 BE n),
/// q = 1 + (u mod K), entry = 2q - K - 1.
BlockMatrix generate_block_matrix(const Hash256& prev_hash, const Hash256& merkle_root_bytes,
                                  int n, int k);

/// Difficulty as a function of height: piecewise-constant steps, the last
/// step at or below the height applies.
struct DifficultySchedule {
  std::vector<std::pair<uint64_t, int>> steps{{0, 0}};

  static DifficultySchedule constant(int d) { return {{{0, d}}}; }
  int at(uint64_t height) const;
};

enum class BackendKind { Oracle, Photonic, Corrected };

struct BackendSpec {
  BackendKind kind = BackendKind::Oracle;
  ErrorProfile profile{};
  double lambda_nm = 1560.0;
  uint64_t seed = 0;
  MeshLayout layout = MeshLayout::Rectangular;
};

std::unique_ptr<HashBackend> make_backend(const BackendSpec& spec, const BlockMatrix& q,
                                          const LightHashParams& params);

struct MiningParams {
  int n = 8;
  int k = 2;
  DifficultySchedule schedule = DifficultySchedule::constant(0);
  BackendSpec backend{};
  ThresholdMode mode = ThresholdMode::Unsigned;
  uint64_t max_attempts = UINT64_MAX;
  uint64_t seed = 0;  // seeds the nonce starting point
  int jobs = 1;
};

struct MineResult {
  std::optional<Block> block;
  uint64_t attempts = 0;  // nonces tried, including the winning one
};

/// Assembles the next block on `tip` (pass nullptr for the genesis block,
/// which links to an all-zero hash), derives Q and t_int, and scans nonces
/// from a seeded start until the difficulty is met or `max_attempts` is
/// exhausted. Exhaustion returns an empty block with the attempt count.
MineResult mine_block(const Block* tip, const std::vector<Bytes>& transactions,
                      const MiningParams& params);

struct Violation {
  std::string check;  // name of the first failed check
  std::string detail;
};

/// Re-derives the merkle root, Q, and t_int, recomputes the digest with the
/// oracle backend, and checks linkage and difficulty. Returns the first
/// violation, or nullopt when valid.
std::optional<Violation> validate_block(const Block& block, const Block* prev,
                                        const DifficultySchedule& schedule);

struct ChainViolation {
  size_t index;
  Violation violation;
};

std::optional<ChainViolation> validate_chain(std::span<const Block> blocks,
                                             const DifficultySchedule& schedule);

// ---- persistence: one JSON document per block, <height>-<hexhash>.json ----

std::string block_to_json(const Block& block);
Block block_from_json(const std::string& text);

/// Atomic write (write-then-rename) into the chain directory.
std::filesystem::path write_block(const std::filesystem::path& dir, const Block& block);

/// Loads and orders all blocks in a chain directory by height.
std::vector<Block> load_chain(const std::filesystem::path& dir);

// ---- mining pool share model ----

struct PoolModel {
  int share_difficulty_bits = 16;  // B_share; must not exceed the chain difficulty
  double hash_rate = 1e6;          // hashes per second
  double hash_error_rate = 0.0;    // <eps> in [0, 1]

  void validate() const;
};

/// Expected accepted shares over a duration:
/// hash_rate * duration * 2^-B_share * (1 - hash_error_rate).
double expected_share_rate(const PoolModel& pool, double duration_s);

}  // namespace lighthash
