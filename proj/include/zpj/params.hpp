#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "zpj/tensor.hpp"

namespace zpj {

// theta: encoder/decoder/reconstructor; gamma: the ZP labeler.
enum class Group : std::uint8_t { theta = 0, gamma = 1 };

const char* group_name(Group g);

struct Parameter {
  std::string name;
  Group group;
  Tensor value;
};

// Named, grouped, insertion-ordered collection of trainable tensors.
class ParameterStore {
 public:
  // Registers a parameter initialised uniformly in [-scale, scale].
  Tensor add(const std::string& name, Shape shape, Group group, std::mt19937_64& rng,
             double scale = 0.1);
  Tensor add(const std::string& name, Tensor value, Group group);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<Parameter>& entries() const { return params_; }
  std::vector<Parameter>& entries() { return params_; }
  std::size_t size() const { return params_.size(); }

  // Total scalar count, optionally restricted to one group.
  std::size_t count() const;
  std::size_t count(Group g) const;

  void zero_grad();
  // Deep copy of values; the copy has fresh grads.
  ParameterStore clone() const;
  // FNV-1a over names and value bits.
  std::uint64_t hash() const;

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Checkpoint layout (little-endian):
//   magic "ZPJCKPT\0", u32 version,
//   u32 meta count, then per entry: u32 len + key bytes, u32 len + value bytes,
//   u32 tensor count, then per tensor: u32 len + name, u8 group, u32 rank,
//   u32 dims[rank], f64 values[prod(dims)].
struct Checkpoint {
  std::map<std::string, std::string> meta;
  ParameterStore params;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params,
                     const std::map<std::string, std::string>& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace zpj
