#include "mft/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "mft/digest.hpp"
#include "mft/error.hpp"

namespace mft::checkpoint {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'M', 'F', 'T', 'H', 'E', 'A', 'D', '\0'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename T>
  void le(T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>(u & 0xFF));
      u = static_cast<U>(u >> 8);
    }
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  void need(std::size_t n) const {
    if (size_ - pos_ < n) throw Error(ErrorCode::kIntegrity, "checkpoint: truncated content");
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<std::make_unsigned_t<T>>(data_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == size_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

json metadata(const train::TrainedHead& head) {
  json domains = json::array();
  for (auto d : head.domains) domains.push_back(to_string(d));
  json epochs = json::array();
  for (const auto& e : head.epochs) {
    epochs.push_back({{"ce_moral", e.ce_moral}, {"ce_domain", e.ce_domain}, {"l_norm", e.l_norm},
                      {"l_rec", e.l_rec}, {"total", e.total}});
  }
  const auto& mc = head.model_config;
  return json{
      {"foundation", to_string(head.foundation)},
      {"threshold", head.threshold},
      {"model", {{"embed_dim", mc.embed_dim},
                 {"hidden_dim", mc.hidden_dim},
                 {"num_classes", mc.num_classes},
                 {"num_domains", mc.num_domains},
                 {"lambda", mc.lambda},
                 {"regularizers_enabled", mc.regularizers_enabled},
                 {"use_bias", mc.use_bias},
                 {"init_seed", mc.init_seed},
                 {"init_noise", mc.init_noise},
                 {"norm_penalty", model::to_string(mc.norm_penalty)}}},
      {"train_config", train::to_json(head.train_config)},
      {"config_digest", head.config_digest},
      {"domains", domains},
      {"epochs", epochs},
  };
}

}  // namespace

std::vector<std::uint8_t> serialize(const train::TrainedHead& head) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.le<std::uint32_t>(kVersion);
  const auto meta = metadata(head).dump();
  w.le<std::uint64_t>(meta.size());
  w.bytes(meta.data(), meta.size());

  const auto tensors = head.params.tensors();
  const auto& names = model::ModelParams::names();
  w.le<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const auto& m = tensors[t]->value;
    w.le<std::uint32_t>(static_cast<std::uint32_t>(names[t].size()));
    w.bytes(names[t].data(), names[t].size());
    w.le<std::uint64_t>(m.rows());
    w.le<std::uint64_t>(m.cols());
    for (double v : m.flat()) {
      const auto f = static_cast<float>(v);
      if (static_cast<double>(f) != v) {
        throw Error(ErrorCode::kInvalidArgument,
                    "checkpoint: parameter '" + std::string(names[t]) + "' is not float32-representable");
      }
      w.f32(f);
    }
  }
  const auto digest = sha256(w.buffer());
  w.bytes(digest.data(), digest.size());
  return std::move(w.buffer());
}

train::TrainedHead deserialize(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t kPrefix = sizeof(kMagic) + sizeof(std::uint32_t);
  if (bytes.size() < kPrefix || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kIntegrity, "checkpoint: not a head checkpoint (bad magic)");
  }
  {
    Reader r(bytes.data() + sizeof(kMagic), sizeof(std::uint32_t));
    const auto version = r.le<std::uint32_t>();
    if (version != kVersion) {
      throw Error(ErrorCode::kVersionMismatch, "checkpoint: version " + std::to_string(version) +
                                                   ", expected " + std::to_string(kVersion));
    }
  }
  if (bytes.size() < kPrefix + 32) throw Error(ErrorCode::kIntegrity, "checkpoint: truncated content");
  const std::size_t body = bytes.size() - 32;
  const auto digest = sha256({bytes.data(), body});
  if (std::memcmp(digest.data(), bytes.data() + body, 32) != 0) {
    throw Error(ErrorCode::kIntegrity, "checkpoint: digest mismatch (corrupt or truncated file)");
  }

  Reader r(bytes.data() + kPrefix, body - kPrefix);
  const auto meta_len = r.le<std::uint64_t>();
  json meta;
  try {
    meta = json::parse(r.str(meta_len));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kIntegrity, std::string("checkpoint: bad metadata: ") + e.what());
  }

  train::TrainedHead head;
  try {
    const auto f = foundation_from_string(meta.at("foundation").get<std::string>());
    if (!f) throw Error(ErrorCode::kIntegrity, "checkpoint: unknown foundation");
    head.foundation = *f;
    head.threshold = meta.at("threshold").get<double>();
    const auto& m = meta.at("model");
    auto& mc = head.model_config;
    mc.embed_dim = m.at("embed_dim").get<std::size_t>();
    mc.hidden_dim = m.at("hidden_dim").get<std::size_t>();
    mc.num_classes = m.at("num_classes").get<std::size_t>();
    mc.num_domains = m.at("num_domains").get<std::size_t>();
    mc.lambda = m.at("lambda").get<double>();
    mc.regularizers_enabled = m.at("regularizers_enabled").get<bool>();
    mc.use_bias = m.at("use_bias").get<bool>();
    mc.init_seed = m.at("init_seed").get<std::uint64_t>();
    mc.init_noise = m.at("init_noise").get<double>();
    mc.norm_penalty = model::norm_penalty_from_string(m.at("norm_penalty").get<std::string>());
    head.train_config = train::train_config_from_json(meta.at("train_config"));
    head.config_digest = meta.at("config_digest").get<std::string>();
    for (const auto& d : meta.at("domains")) {
      const auto tag = domain_from_string(d.get<std::string>());
      if (!tag) throw Error(ErrorCode::kIntegrity, "checkpoint: unknown domain");
      head.domains.push_back(*tag);
    }
    for (const auto& e : meta.at("epochs")) {
      head.epochs.push_back({e.at("ce_moral").get<double>(), e.at("ce_domain").get<double>(),
                             e.at("l_norm").get<double>(), e.at("l_rec").get<double>(),
                             e.at("total").get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIntegrity, std::string("checkpoint: bad metadata: ") + e.what());
  }

  const auto count = r.le<std::uint32_t>();
  const auto& names = model::ModelParams::names();
  if (count != names.size()) throw Error(ErrorCode::kIntegrity, "checkpoint: wrong array count");
  auto tensors = head.params.tensors();
  for (std::size_t t = 0; t < count; ++t) {
    const auto name = r.str(r.le<std::uint32_t>());
    if (name != names[t]) throw Error(ErrorCode::kIntegrity, "checkpoint: unexpected array '" + name + "'");
    const auto rows = r.le<std::uint64_t>();
    const auto cols = r.le<std::uint64_t>();
    r.need(rows * cols * 4);
    Tensor tensor(rows, cols);
    for (double& v : tensor.value.flat()) v = static_cast<double>(r.f32());
    *tensors[t] = std::move(tensor);
  }
  if (!r.done()) throw Error(ErrorCode::kIntegrity, "checkpoint: trailing bytes");
  return head;
}

void save(const train::TrainedHead& head, const std::filesystem::path& path) {
  const auto bytes = serialize(head);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

train::TrainedHead load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::filesystem::path head_path(const std::filesystem::path& dir, Foundation f) {
  return dir / (std::string(to_string(f)) + std::string(kExtension));
}

}  // namespace mft::checkpoint
