#include "checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

namespace peakgen {

namespace {

constexpr char kMagic[4] = {'P', 'K', 'G', 'N'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const NamedParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    write_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<uint32_t>(tensor->shape.size()));
    for (int d : tensor->shape) write_u32(out, static_cast<uint32_t>(d));
    out.write(reinterpret_cast<const char*>(tensor->data.data()),
              static_cast<std::streamsize>(tensor->data.size() * sizeof(double)));
  }
  out.flush();
  if (!out) throw IoError("checkpoint write failed: " + path);
}

void load_checkpoint(const std::string& path, const NamedParams& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a checkpoint file: " + path);
  }
  const uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const uint32_t count = read_u32(in);
  std::map<std::string, Tensor*> by_name;
  for (const auto& [name, tensor] : params) by_name[name] = tensor;
  if (count != by_name.size()) {
    throw IoError("checkpoint has " + std::to_string(count) +
                  " tensors, model expects " + std::to_string(by_name.size()));
  }
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw IoError("checkpoint truncated");
    const uint32_t ndims = read_u32(in);
    std::vector<int> shape(ndims);
    size_t n = 1;
    for (uint32_t d = 0; d < ndims; ++d) {
      shape[d] = static_cast<int>(read_u32(in));
      n *= static_cast<size_t>(shape[d]);
    }
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw IoError("checkpoint tensor '" + name + "' unknown to this model");
    }
    if (it->second->shape != shape) {
      throw IoError("checkpoint tensor '" + name + "' has shape " +
                    shape_str(shape) + ", model expects " +
                    shape_str(it->second->shape));
    }
    in.read(reinterpret_cast<char*>(it->second->data.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw IoError("checkpoint truncated");
  }
}

}  // namespace peakgen
