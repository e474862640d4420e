#include "checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace maskgan {

namespace {

constexpr char kMagic[8] = {'M', 'G', 'C', 'K', 'P', 'T', '0', '1'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kFlagSharedEmbedding = 1u << 0;
constexpr uint32_t kFlagHasDiscriminator = 1u << 1;

void write_u32(std::ostream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
               static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  out.write(b, 4);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  uint32_t n = read_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  return s;
}

void write_block(std::ostream& out, const std::string& name, const Tensor& t) {
  write_string(out, name);
  write_u32(out, static_cast<uint32_t>(t.rows()));
  write_u32(out, static_cast<uint32_t>(t.cols()));
  for (double v : t.values()) {
    float f = static_cast<float>(v);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32(out, bits);
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& stage,
                     const Seq2SeqModel& generator,
                     const Seq2SeqModel* discriminator) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  bool shared = discriminator &&
                discriminator->embedding.node() == generator.embedding.node();
  out.write(kMagic, 8);
  write_u32(out, kVersion);
  write_u32(out, static_cast<uint32_t>(generator.dims.vocab));
  write_u32(out, static_cast<uint32_t>(generator.dims.embed));
  write_u32(out, static_cast<uint32_t>(generator.dims.hidden));
  write_u32(out, static_cast<uint32_t>(generator.dims.layers));
  uint32_t flags = (shared ? kFlagSharedEmbedding : 0) |
                   (discriminator ? kFlagHasDiscriminator : 0);
  write_u32(out, flags);
  write_string(out, stage);

  std::vector<std::pair<std::string, Tensor>> blocks;
  for (auto& [name, t] : generator.named_params())
    blocks.emplace_back("gen." + name, t);
  if (discriminator)
    for (auto& [name, t] : discriminator->named_params()) {
      if (shared && name == "embedding") continue;
      blocks.emplace_back("disc." + name, t);
    }
  write_u32(out, static_cast<uint32_t>(blocks.size()));
  for (auto& [name, t] : blocks) write_block(out, name, t);
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  uint32_t version = read_u32(in);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  LoadedCheckpoint ckpt;
  ckpt.dims.vocab = static_cast<int>(read_u32(in));
  ckpt.dims.embed = static_cast<int>(read_u32(in));
  ckpt.dims.hidden = static_cast<int>(read_u32(in));
  ckpt.dims.layers = static_cast<int>(read_u32(in));
  uint32_t flags = read_u32(in);
  ckpt.shared_embedding = flags & kFlagSharedEmbedding;
  bool has_disc = flags & kFlagHasDiscriminator;
  ckpt.stage = read_string(in);

  Rng init_rng(0);
  ckpt.generator =
      Seq2SeqModel::create(ckpt.dims, ModelRole::kGenerator, init_rng);
  if (has_disc)
    ckpt.discriminator =
        ckpt.shared_embedding
            ? Seq2SeqModel::create_shared_embedding(
                  ckpt.dims, ckpt.generator.embedding, init_rng)
            : Seq2SeqModel::create(ckpt.dims, ModelRole::kDiscriminator,
                                   init_rng);

  std::map<std::string, Tensor> by_name;
  for (auto& [name, t] : ckpt.generator.named_params())
    by_name.emplace("gen." + name, t);
  if (ckpt.discriminator)
    for (auto& [name, t] : ckpt.discriminator->named_params())
      by_name.emplace("disc." + name, t);

  uint32_t n_blocks = read_u32(in);
  for (uint32_t i = 0; i < n_blocks; ++i) {
    std::string name = read_string(in);
    int rows = static_cast<int>(read_u32(in));
    int cols = static_cast<int>(read_u32(in));
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint: unknown block '" + name + "'");
    Tensor& t = it->second;
    if (t.rows() != rows || t.cols() != cols)
      throw std::runtime_error("checkpoint: shape mismatch for '" + name +
                               "'");
    auto vals = t.values();
    for (size_t j = 0; j < vals.size(); ++j) {
      uint32_t bits = read_u32(in);
      float f;
      std::memcpy(&f, &bits, 4);
      vals[j] = static_cast<double>(f);
    }
  }
  if (!in) throw std::runtime_error("checkpoint: truncated file: " + path);
  return ckpt;
}

}  // namespace maskgan
