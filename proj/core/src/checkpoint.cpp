#include "pivot/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace pivot::nn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian; add byte swapping for this target");

constexpr const char* kHeader = "pivot-checkpoint v1\n";

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedBlock>& blocks) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  out.write(kHeader, std::strlen(kHeader));
  write_u64(out, blocks.size());
  for (const auto& blk : blocks) {
    write_u64(out, blk.name.size());
    out.write(blk.name.data(), static_cast<std::streamsize>(blk.name.size()));
    write_u64(out, blk.tensor.shape.size());
    for (auto d : blk.tensor.shape) write_u64(out, static_cast<std::uint64_t>(d));
    out.write(reinterpret_cast<const char*>(blk.tensor.data.data()),
              static_cast<std::streamsize>(blk.tensor.data.size() * sizeof(double)));
  }
  out.flush();
  if (!out) throw std::runtime_error("checkpoint: I/O error writing '" + path + "'");
}

std::vector<NamedBlock> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  std::string header(std::strlen(kHeader), '\0');
  in.read(header.data(), static_cast<std::streamsize>(header.size()));
  if (!in || header != kHeader) throw std::runtime_error("checkpoint: bad header in '" + path + "'");

  const std::uint64_t count = read_u64(in);
  std::vector<NamedBlock> blocks;
  blocks.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedBlock blk;
    const std::uint64_t name_len = read_u64(in);
    blk.name.resize(name_len);
    in.read(blk.name.data(), static_cast<std::streamsize>(name_len));
    const std::uint64_t rank = read_u64(in);
    std::vector<std::int64_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::int64_t>(read_u64(in));
    blk.tensor = Tensor(shape);
    in.read(reinterpret_cast<char*>(blk.tensor.data.data()),
            static_cast<std::streamsize>(blk.tensor.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated block '" + blk.name + "'");
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

std::vector<NamedBlock> registry_blocks(const ParamRegistry& reg) {
  std::vector<NamedBlock> blocks;
  blocks.reserve(reg.all().size());
  for (const auto* p : reg.all()) blocks.push_back({p->name, p->value});
  return blocks;
}

void restore_registry(ParamRegistry& reg, const std::vector<NamedBlock>& blocks) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& b : blocks) by_name[b.name] = &b.tensor;
  for (auto* p : reg.all()) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint: missing block '" + p->name + "'");
    if (!it->second->same_shape(p->value)) {
      throw std::runtime_error("checkpoint: shape mismatch for block '" + p->name + "'");
    }
    p->value.data = it->second->data;
  }
}

}  // namespace pivot::nn
