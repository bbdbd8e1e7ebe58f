#include "rrm/params.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "rrm/errors.hpp"
#include "rrm/json_io.hpp"

namespace rrm {

static_assert(std::endian::native == std::endian::little, "checkpoint blobs assume a little-endian host");

ad::Tensor &ParamStore::add(const std::string &name, ad::Matrix init) {
  auto [it, inserted] = params_.emplace(name, ad::Tensor::parameter(std::move(init)));
  if (!inserted)
    throw ContractViolation("duplicate parameter '" + name + "'");
  return it->second;
}

const ad::Tensor &ParamStore::get(const std::string &name) const {
  const auto it = params_.find(name);
  if (it == params_.end())
    throw ContractViolation("unknown parameter '" + name + "'");
  return it->second;
}

std::vector<ad::Tensor> ParamStore::tensors() const {
  std::vector<ad::Tensor> out;
  out.reserve(params_.size());
  for (const auto &[name, t] : params_)
    out.push_back(t);
  return out;
}

ParamStore ParamStore::snapshot() const {
  ParamStore out;
  for (const auto &[name, t] : params_)
    out.params_.emplace(name, ad::Tensor::constant(t.value()));
  return out;
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const auto &[name, t] : params_)
    out.params_.emplace(name, ad::Tensor::parameter(t.value()));
  return out;
}

void ParamStore::copy_values_from(const ParamStore &other) {
  for (auto &[name, t] : params_) {
    const auto &src = other.get(name);
    if (src.rows() != t.rows() || src.cols() != t.cols())
      throw ContractViolation("shape mismatch for parameter '" + name + "'");
    t.mutable_value() = src.value();
  }
}

Eigen::Index ParamStore::parameter_count() const {
  Eigen::Index total = 0;
  for (const auto &[name, t] : params_)
    total += t.value().size();
  return total;
}

ad::Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-bound, bound);
  ad::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = u(rng);
  return m;
}

void save_checkpoint(const std::filesystem::path &dir, const ParamStore &params, const nlohmann::json &metadata,
                     std::int64_t optimizer_step) {
  std::filesystem::create_directories(dir);
  json tensors = json::array();
  for (const auto &[name, t] : params.items()) {
    const std::string file = name + ".bin";
    std::ofstream out(dir / file, std::ios::binary);
    if (!out)
      throw std::runtime_error("cannot write " + (dir / file).string());
    out.write(reinterpret_cast<const char *>(t.value().data()),
              static_cast<std::streamsize>(t.value().size() * sizeof(double)));
    tensors.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}, {"file", file}});
  }
  write_json_file(dir / "manifest.json", json{{"format", "rrm-checkpoint-v1"},
                                              {"optimizer_step", optimizer_step},
                                              {"metadata", metadata},
                                              {"tensors", tensors}});
}

Checkpoint load_checkpoint(const std::filesystem::path &dir) {
  const json manifest = read_json_file(dir / "manifest.json");
  if (manifest.value("format", "") != "rrm-checkpoint-v1")
    throw ValidationError("format", "not an rrm checkpoint manifest");
  Checkpoint ck;
  ck.optimizer_step = manifest.value("optimizer_step", std::int64_t{0});
  ck.metadata = manifest.value("metadata", json::object());
  for (const auto &entry : manifest.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
    if (shape.size() != 2)
      throw ValidationError("tensors.shape", "expected [rows, cols] for '" + name + "'");
    ad::Matrix value(shape[0], shape[1]);
    const auto path = dir / entry.at("file").get<std::string>();
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw std::runtime_error("cannot open " + path.string());
    const auto bytes = static_cast<std::streamsize>(value.size() * sizeof(double));
    in.read(reinterpret_cast<char *>(value.data()), bytes);
    if (in.gcount() != bytes)
      throw ValidationError("tensors.file", "blob for '" + name + "' is truncated");
    ck.params.add(name, std::move(value));
  }
  return ck;
}

} // namespace rrm
