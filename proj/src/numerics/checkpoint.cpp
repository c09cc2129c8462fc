#include "qoie/numerics/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qoie::numerics {

namespace {

static_assert(sizeof(float) == 4);

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) return false;
  v = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
      (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
  return true;
}

std::uint32_t must_u32(std::istream& in, const std::string& what) {
  std::uint32_t v = 0;
  if (!get_u32(in, v)) throw std::runtime_error("checkpoint truncated while reading " + what);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  out << kCheckpointMagic << '\n';
  for (const auto& p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put_u32(out, 2);
    put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    for (Index i = 0; i < p->value.size(); ++i) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(p->value.data()[i])));
    }
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string magic;
  std::getline(in, magic);
  if (magic != kCheckpointMagic) {
    throw std::runtime_error("not a checkpoint (bad header): " + path.string());
  }

  std::vector<NamedTensor> tensors;
  std::uint32_t name_len = 0;
  while (get_u32(in, name_len)) {
    NamedTensor t;
    t.name.resize(name_len);
    if (!in.read(t.name.data(), name_len)) throw std::runtime_error("checkpoint truncated in name");
    const std::uint32_t rank = must_u32(in, "rank of " + t.name);
    std::size_t count = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.dims.push_back(must_u32(in, "dims of " + t.name));
      count *= t.dims.back();
    }
    t.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      t.values[i] = std::bit_cast<float>(must_u32(in, "values of " + t.name));
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void load_checkpoint(const std::filesystem::path& path, ParameterSet& params) {
  const std::vector<NamedTensor> tensors = read_checkpoint(path);
  std::size_t matched = 0;
  for (const NamedTensor& t : tensors) {
    Parameter* p = params.find(t.name);
    if (p == nullptr) throw std::runtime_error("checkpoint tensor not in model: " + t.name);
    if (t.dims.size() != 2 || t.dims[0] != p->value.rows() || t.dims[1] != p->value.cols()) {
      std::string dims;
      for (auto d : t.dims) dims += (dims.empty() ? "" : "x") + std::to_string(d);
      throw std::runtime_error("shape mismatch for " + t.name + ": checkpoint " + dims + ", model " +
                               std::to_string(p->value.rows()) + "x" +
                               std::to_string(p->value.cols()));
    }
    for (std::size_t i = 0; i < t.values.size(); ++i) p->value.data()[i] = t.values[i];
    ++matched;
  }
  if (matched != params.size()) {
    for (const auto& p : params) {
      bool present = false;
      for (const auto& t : tensors) present = present || t.name == p->name;
      if (!present) throw std::runtime_error("checkpoint is missing tensor: " + p->name);
    }
  }
}

}  // namespace qoie::numerics
