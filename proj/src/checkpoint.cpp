#include "mmner/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "mmner/error.hpp"

namespace mmner {

namespace {

constexpr char kMagic[8] = {'M', 'M', 'N', 'E', 'R', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <typename T>
void write_raw(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) {
    throw IoError("checkpoint: truncated file " + path);
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const std::vector<NamedParam>& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("checkpoint: cannot open " + path + " for writing");
  }
  out.write(kMagic, sizeof(kMagic));
  write_raw<uint32_t>(out, header.version);
  write_raw<uint32_t>(out, header.model_kind);
  write_raw<uint64_t>(out, header.config_hash);
  write_raw<uint32_t>(out, static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    write_raw<uint32_t>(out, static_cast<uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const Shape& shape = p.tensor.shape();
    write_raw<uint32_t>(out, static_cast<uint32_t>(shape.size()));
    for (int64_t d : shape) {
      write_raw<int64_t>(out, d);
    }
    const auto data = p.tensor.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) {
    throw IoError("checkpoint: write failed for " + path);
  }
}

namespace {

CheckpointHeader read_header(std::ifstream& in, const std::string& path) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("checkpoint: " + path + " is not a checkpoint file");
  }
  CheckpointHeader header;
  header.version = read_raw<uint32_t>(in, path);
  if (header.version != kCheckpointVersion) {
    throw IoError("checkpoint: unsupported version " + std::to_string(header.version) +
                  " in " + path);
  }
  header.model_kind = read_raw<uint32_t>(in, path);
  header.config_hash = read_raw<uint64_t>(in, path);
  return header;
}

}  // namespace

CheckpointHeader load_checkpoint(const std::string& path, std::vector<NamedParam>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("checkpoint: cannot open " + path);
  }
  CheckpointHeader header = read_header(in, path);
  const uint32_t count = read_raw<uint32_t>(in, path);
  params.clear();
  params.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_raw<uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const uint32_t ndim = read_raw<uint32_t>(in, path);
    Shape shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) {
      shape[d] = read_raw<int64_t>(in, path);
    }
    std::vector<double> values(static_cast<size_t>(shape_numel(shape)));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) {
      throw IoError("checkpoint: truncated file " + path);
    }
    params.push_back({std::move(name), Tensor::leaf(std::move(shape), std::move(values), true)});
  }
  return header;
}

CheckpointHeader peek_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("checkpoint: cannot open " + path);
  }
  return read_header(in, path);
}

void assign_params(const std::vector<NamedParam>& loaded, std::vector<NamedParam>& target) {
  std::unordered_map<std::string, const NamedParam*> by_name;
  for (const auto& p : loaded) {
    by_name[p.name] = &p;
  }
  for (auto& t : target) {
    auto it = by_name.find(t.name);
    if (it == by_name.end()) {
      throw IoError("checkpoint: missing parameter '" + t.name + "'");
    }
    const Tensor& src = it->second->tensor;
    if (src.shape() != t.tensor.shape()) {
      throw ShapeError("checkpoint: parameter '" + t.name + "' has shape " +
                       shape_str(src.shape()) + ", model expects " + shape_str(t.tensor.shape()));
    }
    std::copy(src.data().begin(), src.data().end(), t.tensor.data().begin());
  }
}

}  // namespace mmner
