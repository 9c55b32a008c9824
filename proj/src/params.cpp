#include "zpj/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "zpj/error.hpp"

namespace zpj {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

const char* group_name(Group g) { return g == Group::theta ? "theta" : "gamma"; }

Tensor ParameterStore::add(const std::string& name, Shape shape, Group group,
                           std::mt19937_64& rng, double scale) {
  std::size_t n = 1;
  for (int d : shape) n *= d;
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return add(name, Tensor::from(std::move(shape), std::move(v), true), group);
}

Tensor ParameterStore::add(const std::string& name, Tensor value, Group group) {
  if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
  if (!value.requires_grad()) value = Tensor::from(value.shape(), {value.values().begin(), value.values().end()}, true);
  index_[name] = params_.size();
  params_.push_back({name, group, value});
  return value;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter: " + name);
  return params_[it->second].value;
}

std::size_t ParameterStore::count() const {
  std::size_t n = 0;
  for (auto& p : params_) n += p.value.size();
  return n;
}

std::size_t ParameterStore::count(Group g) const {
  std::size_t n = 0;
  for (auto& p : params_)
    if (p.group == g) n += p.value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.value.zero_grad();
}

ParameterStore ParameterStore::clone() const {
  ParameterStore out;
  for (auto& p : params_)
    out.add(p.name,
            Tensor::from(p.value.shape(), {p.value.values().begin(), p.value.values().end()}, true),
            p.group);
  return out;
}

std::uint64_t ParameterStore::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (auto& p : params_) {
    mix(p.name.data(), p.name.size());
    mix(p.value.values().data(), p.value.size() * sizeof(double));
  }
  return h;
}

namespace {

constexpr char kMagic[8] = {'Z', 'P', 'J', 'C', 'K', 'P', 'T', '\0'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_str(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw FormatError(path.string() + ": truncated checkpoint");
  return v;
}

std::string get_str(std::istream& is, const std::filesystem::path& path) {
  auto n = get<std::uint32_t>(is, path);
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n)) throw FormatError(path.string() + ": truncated checkpoint");
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params,
                     const std::map<std::string, std::string>& meta) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(meta.size()));
  for (auto& [k, v] : meta) {
    put_str(os, k);
    put_str(os, v);
  }
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (auto& p : params.entries()) {
    put_str(os, p.name);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(p.group));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.value.shape().size()));
    for (int d : p.value.shape()) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(p.value.values().data()),
             static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError(path.string() + ": not a checkpoint file");
  auto version = get<std::uint32_t>(is, path);
  if (version != kCheckpointVersion)
    throw FormatError(path.string() + ": unsupported checkpoint version " +
                      std::to_string(version));
  Checkpoint ck;
  auto nmeta = get<std::uint32_t>(is, path);
  for (std::uint32_t i = 0; i < nmeta; ++i) {
    auto k = get_str(is, path);
    ck.meta[k] = get_str(is, path);
  }
  auto count = get<std::uint32_t>(is, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = get_str(is, path);
    auto group = get<std::uint8_t>(is, path);
    if (group > 1) throw FormatError(path.string() + ": bad group tag for " + name);
    auto rank = get<std::uint32_t>(is, path);
    if (rank == 0 || rank > 2) throw FormatError(path.string() + ": bad rank for " + name);
    Shape shape;
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      shape.push_back(static_cast<int>(get<std::uint32_t>(is, path)));
      n *= shape.back();
    }
    std::vector<double> v(n);
    if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double))))
      throw FormatError(path.string() + ": truncated values for " + name);
    ck.params.add(name, Tensor::from(std::move(shape), std::move(v), true), static_cast<Group>(group));
  }
  return ck;
}

}  // namespace zpj
