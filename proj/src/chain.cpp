#include "lighthash/chain.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace lighthash {

using nlohmann::json;

Bytes header_bytes(const Block& block) {
  Bytes out;
  out.reserve(86);
  out.insert(out.end(), {'L', 'H', 'B', '1'});
  append_u64be(out, block.height);
  out.insert(out.end(), block.prev_hash.begin(), block.prev_hash.end());
  out.insert(out.end(), block.merkle_root.begin(), block.merkle_root.end());
  append_u16be(out, static_cast<uint16_t>(block.n));
  append_u16be(out, static_cast<uint16_t>(block.k));
  append_u16be(out, static_cast<uint16_t>(block.difficulty));
  append_i32be(out, block.t_int);
  return out;
}

Hash256 merkle_root(const std::vector<Bytes>& transactions) {
  if (transactions.empty()) throw std::invalid_argument("merkle_root: no transactions");
  std::vector<Hash256> level;
  level.reserve(transactions.size());
  for (const auto& tx : transactions) {
    Bytes leaf;
    leaf.reserve(tx.size() + 1);
    leaf.push_back(0x00);
    leaf.insert(leaf.end(), tx.begin(), tx.end());
    level.push_back(sha3_256(leaf));
  }
  while (level.size() > 1) {
    if (level.size() % 2 == 1) level.push_back(level.back());
    std::vector<Hash256> next;
    next.reserve(level.size() / 2);
    for (size_t i = 0; i < level.size(); i += 2) {
      Bytes node;
      node.reserve(65);
      node.push_back(0x01);
      node.insert(node.end(), level[i].begin(), level[i].end());
      node.insert(node.end(), level[i + 1].begin(), level[i + 1].end());
      next.push_back(sha3_256(node));
    }
    level = std::move(next);
  }
  return level[0];
}

BlockMatrix generate_block_matrix(const Hash256& prev_hash, const Hash256& merkle_root_bytes,
                                  int n, int k) {
  if (n < 2 || n > 256 || 256 % n != 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("generate_block_matrix: N must be a power of two dividing 256");
  }
  if (k < 2) throw std::invalid_argument("generate_block_matrix: K must be at least 2");

  BlockMatrix q;
  q.n = n;
  q.k = k;
  q.prev_hash = prev_hash;
  q.merkle_root = merkle_root_bytes;
  q.blocks.resize(static_cast<size_t>(256 / n));

  Bytes msg;
  msg.reserve(4 + 32 + 32 + 8);
  msg.insert(msg.end(), {'L', 'H', 'Q', '1'});
  msg.insert(msg.end(), prev_hash.begin(), prev_hash.end());
  msg.insert(msg.end(), merkle_root_bytes.begin(), merkle_root_bytes.end());
  const size_t counter_at = msg.size();
  msg.resize(counter_at + 8);

  for (int m = 0; m < static_cast<int>(q.blocks.size()); ++m) {
    auto& block = q.blocks[static_cast<size_t>(m)];
    block.resize(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const uint64_t counter =
            static_cast<uint64_t>(m) * n * n + static_cast<uint64_t>(i) * n + j;
        for (int b = 0; b < 8; ++b) {
          msg[counter_at + static_cast<size_t>(b)] =
              static_cast<uint8_t>(counter >> (8 * (7 - b)));
        }
        const uint64_t u = read_u64be(std::span(sha3_256(msg)).first(8));
        const int qv = 1 + static_cast<int>(u % static_cast<uint64_t>(k));
        block(i, j) = 2 * qv - k - 1;
      }
    }
  }
  return q;
}

int DifficultySchedule::at(uint64_t height) const {
  if (steps.empty()) throw std::invalid_argument("DifficultySchedule: empty");
  int d = steps.front().second;
  for (const auto& [from, value] : steps) {
    if (height >= from) d = value;
  }
  return d;
}

std::unique_ptr<HashBackend> make_backend(const BackendSpec& spec, const BlockMatrix& q,
                                          const LightHashParams& params) {
  switch (spec.kind) {
    case BackendKind::Oracle:
      return std::make_unique<OracleBackend>(q, params);
    case BackendKind::Photonic:
      return std::make_unique<PhotonicBackend>(q, params, spec.profile, spec.lambda_nm,
                                               spec.seed, spec.layout);
    case BackendKind::Corrected:
      return std::make_unique<CorrectedBackend>(q, params, spec.profile, spec.lambda_nm,
                                                spec.seed, spec.layout);
  }
  throw std::invalid_argument("make_backend: unknown kind");
}

namespace {

uint64_t nonce_start(const Block& block, uint64_t seed) {
  Bytes msg;
  msg.insert(msg.end(), {'L', 'H', 'N', '1'});
  msg.insert(msg.end(), block.prev_hash.begin(), block.prev_hash.end());
  msg.insert(msg.end(), block.merkle_root.begin(), block.merkle_root.end());
  append_u64be(msg, seed);
  return read_u64be(std::span(sha3_256(msg)).first(8));
}

/// Scans nonce offsets in ascending order across `jobs` workers and returns
/// the smallest winning offset, so the result is independent of job count.
std::optional<uint64_t> scan_nonces(const Bytes& header, uint64_t start,
                                    const HashBackend& backend, int difficulty,
                                    uint64_t max_attempts, int jobs) {
  constexpr uint64_t kChunk = 256;
  std::atomic<uint64_t> next_chunk{0};
  std::atomic<uint64_t> best{UINT64_MAX};

  auto worker = [&]() {
    for (;;) {
      const uint64_t chunk_begin = next_chunk.fetch_add(kChunk);
      if (chunk_begin >= max_attempts || chunk_begin > best.load()) return;
      const uint64_t chunk_end = std::min(max_attempts, chunk_begin + kChunk);
      for (uint64_t offset = chunk_begin; offset < chunk_end; ++offset) {
        const Hash256 digest = lighthash_digest(header, start + offset, backend);
        if (meets_difficulty(digest, difficulty)) {
          uint64_t cur = best.load();
          while (offset < cur && !best.compare_exchange_weak(cur, offset)) {
          }
          return;
        }
      }
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(jobs));
    for (int i = 0; i < jobs; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  const uint64_t found = best.load();
  if (found == UINT64_MAX) return std::nullopt;
  return found;
}

}  // namespace

MineResult mine_block(const Block* tip, const std::vector<Bytes>& transactions,
                      const MiningParams& params) {
  Block block;
  block.height = tip == nullptr ? 0 : tip->height + 1;
  block.prev_hash = tip == nullptr ? Hash256{} : tip->hash;
  block.merkle_root = merkle_root(transactions);
  block.difficulty = params.schedule.at(block.height);
  block.n = params.n;
  block.k = params.k;
  block.transactions = transactions;

  // program the device once per block: derive Q, threshold, and the backend
  const BlockMatrix q = generate_block_matrix(block.prev_hash, block.merkle_root, params.n, params.k);
  block.t_int = select_threshold(q, params.n, params.k);

  LightHashParams hash_params;
  hash_params.n = params.n;
  hash_params.k = params.k;
  hash_params.t_int = block.t_int;
  hash_params.mode = params.mode;
  hash_params.r_copies = params.backend.kind == BackendKind::Corrected ? 4 : 1;
  const auto backend = make_backend(params.backend, q, hash_params);

  const Bytes header = header_bytes(block);
  const uint64_t start = nonce_start(block, params.seed);
  const auto offset = scan_nonces(header, start, *backend, block.difficulty,
                                  params.max_attempts, params.jobs);
  if (!offset.has_value()) {
    return {std::nullopt, params.max_attempts};
  }
  block.nonce = start + *offset;
  block.hash = lighthash_digest(header, block.nonce, *backend);
  return {block, *offset + 1};
}

std::optional<Violation> validate_block(const Block& block, const Block* prev,
                                        const DifficultySchedule& schedule) {
  if (prev == nullptr) {
    if (block.height != 0) return Violation{"height", "genesis block must have height 0"};
    if (block.prev_hash != Hash256{}) {
      return Violation{"prev_hash", "genesis block must link to the all-zero hash"};
    }
  } else {
    if (block.height != prev->height + 1) {
      return Violation{"height", "height does not extend the previous block"};
    }
    if (block.prev_hash != prev->hash) {
      return Violation{"prev_hash", "prev_hash does not match the previous block"};
    }
  }

  LightHashParams params;
  params.n = block.n;
  params.k = block.k;
  params.t_int = block.t_int;
  try {
    params.validate();
  } catch (const std::exception& e) {
    return Violation{"params", e.what()};
  }

  if (block.transactions.empty()) return Violation{"transactions", "no transactions"};
  if (merkle_root(block.transactions) != block.merkle_root) {
    return Violation{"merkle_root", "merkle root does not match the transactions"};
  }

  if (block.difficulty != schedule.at(block.height)) {
    return Violation{"difficulty", "difficulty does not match the schedule"};
  }

  const BlockMatrix q = generate_block_matrix(block.prev_hash, block.merkle_root, block.n, block.k);
  if (select_threshold(q, block.n, block.k) != block.t_int) {
    return Violation{"t_int", "threshold does not match the derived value"};
  }

  const OracleBackend backend(q, params);
  const Hash256 digest = lighthash_digest(header_bytes(block), block.nonce, backend);
  if (digest != block.hash) return Violation{"hash", "stored hash does not match the digest"};
  if (!meets_difficulty(block.hash, block.difficulty)) {
    return Violation{"difficulty", "digest does not meet the difficulty target"};
  }
  return std::nullopt;
}

std::optional<ChainViolation> validate_chain(std::span<const Block> blocks,
                                             const DifficultySchedule& schedule) {
  const Block* prev = nullptr;
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (auto v = validate_block(blocks[i], prev, schedule)) {
      return ChainViolation{i, *v};
    }
    prev = &blocks[i];
  }
  return std::nullopt;
}

namespace {
std::string hash_to_hex(const Hash256& h) { return hex_encode(h); }

Hash256 hash_from_hex(const std::string& s) {
  const auto bytes = hex_decode(s);
  if (!bytes || bytes->size() != 32) throw std::invalid_argument("bad 32-byte hex field");
  Hash256 out;
  std::copy(bytes->begin(), bytes->end(), out.begin());
  return out;
}
}  // namespace

std::string block_to_json(const Block& block) {
  json j;
  j["height"] = block.height;
  j["prev_hash"] = hash_to_hex(block.prev_hash);
  j["merkle_root"] = hash_to_hex(block.merkle_root);
  j["n"] = block.n;
  j["k"] = block.k;
  j["difficulty"] = block.difficulty;
  j["t_int"] = block.t_int;
  j["nonce"] = block.nonce;
  j["hash"] = hash_to_hex(block.hash);
  json txs = json::array();
  for (const auto& tx : block.transactions) txs.push_back(hex_encode(tx));
  j["transactions"] = txs;
  return j.dump(2);
}

Block block_from_json(const std::string& text) {
  const json j = json::parse(text);
  Block b;
  b.height = j.at("height").get<uint64_t>();
  b.prev_hash = hash_from_hex(j.at("prev_hash").get<std::string>());
  b.merkle_root = hash_from_hex(j.at("merkle_root").get<std::string>());
  b.n = j.at("n").get<int>();
  b.k = j.at("k").get<int>();
  b.difficulty = j.at("difficulty").get<int>();
  b.t_int = j.at("t_int").get<int>();
  b.nonce = j.at("nonce").get<uint64_t>();
  b.hash = hash_from_hex(j.at("hash").get<std::string>());
  for (const auto& tx : j.at("transactions")) {
    const auto bytes = hex_decode(tx.get<std::string>());
    if (!bytes) throw std::invalid_argument("bad transaction hex");
    b.transactions.push_back(*bytes);
  }
  return b;
}

std::filesystem::path write_block(const std::filesystem::path& dir, const Block& block) {
  std::filesystem::create_directories(dir);
  const std::string name = std::to_string(block.height) + "-" + hash_to_hex(block.hash) + ".json";
  const auto tmp = dir / (name + ".tmp");
  const auto final_path = dir / name;
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << block_to_json(block) << "\n";
  }
  std::filesystem::rename(tmp, final_path);
  return final_path;
}

std::vector<Block> load_chain(const std::filesystem::path& dir) {
  std::vector<Block> blocks;
  if (!std::filesystem::is_directory(dir)) {
    throw std::invalid_argument("not a chain directory: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    blocks.push_back(block_from_json(text));
  }
  std::sort(blocks.begin(), blocks.end(),
            [](const Block& a, const Block& b) { return a.height < b.height; });
  return blocks;
}

void PoolModel::validate() const {
  if (share_difficulty_bits < 0 || share_difficulty_bits > 256) {
    throw std::invalid_argument("PoolModel: share difficulty must be in [0, 256]");
  }
  if (hash_rate < 0) throw std::invalid_argument("PoolModel: hash rate must be non-negative");
  if (hash_error_rate < 0 || hash_error_rate > 1) {
    throw std::invalid_argument("PoolModel: hash error rate must be in [0, 1]");
  }
}

double expected_share_rate(const PoolModel& pool, double duration_s) {
  pool.validate();
  if (duration_s < 0) throw std::invalid_argument("expected_share_rate: negative duration");
  return pool.hash_rate * duration_s * std::exp2(-pool.share_difficulty_bits) *
         (1.0 - pool.hash_error_rate);
}

}  // namespace lighthash
