#include "uavnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace uavnet::checkpoint {

namespace {

constexpr char kMagic[8] = {'U', 'A', 'V', 'N', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw CheckpointError("checkpoint truncated");
  return v;
}

}  // namespace

void write(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t d : t.value.shape()) put<std::uint64_t>(out, d);
    for (double v : t.value.data()) put<double>(out, v);
  }
  if (!out) throw CheckpointError("failed writing " + path.string());
}

std::vector<NamedTensor> read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get<std::uint32_t>(in);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto len = get<std::uint32_t>(in);
    t.name.resize(len);
    in.read(t.name.data(), len);
    const auto rank = get<std::uint32_t>(in);
    if (rank > 2) throw CheckpointError("tensor '" + t.name + "' has unsupported rank");
    std::vector<std::size_t> shape;
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      shape.push_back(static_cast<std::size_t>(get<std::uint64_t>(in)));
      n *= shape.back();
    }
    std::vector<double> data(n);
    for (double& v : data) v = get<double>(in);
    t.value = ad::Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<NamedTensor> collect(training::MultiAgent& agents) {
  std::vector<NamedTensor> out;
  for (std::size_t k = 0; k < agents.num_networks(); ++k) {
    for (const auto& [name, p] : agents.network_at(k).parameters()) {
      ad::Tensor v = p.value;
      v.set_requires_grad(false);
      out.push_back({"agent" + std::to_string(k) + "/" + name, std::move(v)});
    }
  }
  return out;
}

void save(const std::filesystem::path& path, training::MultiAgent& agents) {
  write(path, collect(agents));
}

void load(const std::filesystem::path& path, training::MultiAgent& agents) {
  std::map<std::string, ad::Tensor> stored;
  for (auto& t : read(path)) stored.emplace(t.name, std::move(t.value));

  std::size_t expected = 0;
  for (std::size_t k = 0; k < agents.num_networks(); ++k) {
    for (const auto& [name, p] : agents.network_at(k).parameters()) {
      ++expected;
      const std::string key = "agent" + std::to_string(k) + "/" + name;
      auto it = stored.find(key);
      if (it == stored.end()) throw CheckpointError("checkpoint lacks tensor '" + key + "'");
      if (it->second.shape() != p.value.shape()) {
        throw CheckpointError("tensor '" + key + "' has shape " + ad::shape_string(it->second.shape()) +
                              " but the configured network expects " + ad::shape_string(p.value.shape()));
      }
    }
  }
  if (stored.size() != expected) {
    throw CheckpointError("checkpoint holds " + std::to_string(stored.size()) +
                          " tensors but the configured networks have " + std::to_string(expected));
  }
  for (std::size_t k = 0; k < agents.num_networks(); ++k) {
    for (auto& [name, p] : agents.network_at(k).parameters()) {
      const auto& src = stored.at("agent" + std::to_string(k) + "/" + name);
      std::copy(src.data().begin(), src.data().end(), p.value.data().begin());
    }
  }
}

}  // namespace uavnet::checkpoint
