#include "segloc/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace segloc::nn {

namespace {

constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw std::runtime_error("checkpoint: truncated file");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(std::ostream& out, Sequential& net) {
  out.write("SMNN", 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(net.size()));
  for (std::size_t i = 0; i < net.size(); ++i) {
    Layer& l = net.layer(i);
    put_u32(out, static_cast<std::uint32_t>(l.kind()));
    const auto params = l.params();
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const Param* p : params) {
      put_u32(out, static_cast<std::uint32_t>(p->shape.size()));
      for (int d : p->shape) put_u32(out, static_cast<std::uint32_t>(d));
      for (double v : p->value) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

void save_checkpoint(const std::string& path, Sequential& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  save_checkpoint(out, net);
}

void load_checkpoint(std::istream& in, Sequential& net) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SMNN", 4) != 0) throw std::runtime_error("checkpoint: bad magic");
  if (get_u32(in) != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  if (get_u32(in) != net.size()) throw std::runtime_error("checkpoint: layer count mismatch");
  for (std::size_t i = 0; i < net.size(); ++i) {
    Layer& l = net.layer(i);
    if (get_u32(in) != static_cast<std::uint32_t>(l.kind()))
      throw std::runtime_error("checkpoint: layer " + std::to_string(i) + " kind mismatch, expected " + l.name());
    auto params = l.params();
    if (get_u32(in) != params.size()) throw std::runtime_error("checkpoint: array count mismatch at layer " + std::to_string(i));
    for (Param* p : params) {
      Shape shape(get_u32(in));
      for (auto& d : shape) d = static_cast<int>(get_u32(in));
      if (shape != p->shape)
        throw std::runtime_error("checkpoint: " + l.name() + "." + p->name + " has shape " + shape_string(shape) +
                                 ", expected " + shape_string(p->shape));
      for (auto& v : p->value) v = static_cast<double>(std::bit_cast<float>(get_u32(in)));
    }
  }
}

void load_checkpoint(const std::string& path, Sequential& net) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  load_checkpoint(in, net);
}

}  // namespace segloc::nn
