#include "aquagan/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace aquagan {

namespace {

constexpr std::array<char, 8> kMagic = {'A', 'Q', 'G', 'N', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void append_pod(std::vector<std::uint8_t>& buf, const T& v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T read_pod(const std::vector<std::uint8_t>& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw CheckpointError("checkpoint truncated");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void to_json(nlohmann::json& j, const GeneratorSpec& s) {
  j = {{"kind", "generator"},
       {"input_size", s.input_size},
       {"encoder_channels", s.encoder_channels},
       {"leaky_slope", s.leaky_slope}};
}

void from_json(const nlohmann::json& j, GeneratorSpec& s) {
  j.at("input_size").get_to(s.input_size);
  j.at("encoder_channels").get_to(s.encoder_channels);
  j.at("leaky_slope").get_to(s.leaky_slope);
}

void to_json(nlohmann::json& j, const ClassifierSpec& s) {
  j = {{"kind", "classifier"},
       {"backbone", to_string(s.backbone)},
       {"input_size", s.input_size},
       {"channels", s.channels},
       {"leaky_slope", s.leaky_slope}};
}

void from_json(const nlohmann::json& j, ClassifierSpec& s) {
  s.backbone = backbone_from_string(j.at("backbone").get<std::string>());
  j.at("input_size").get_to(s.input_size);
  j.at("channels").get_to(s.channels);
  j.at("leaky_slope").get_to(s.leaky_slope);
}

void to_json(nlohmann::json& j, const LossWeights& w) {
  j = {{"w_gan", w.w_gan}, {"w_sim", w.w_sim}};
  if (w.lambda_ang) j["lambda_ang"] = *w.lambda_ang;
  if (w.lambda_gdl) j["lambda_gdl"] = *w.lambda_gdl;
}

void from_json(const nlohmann::json& j, LossWeights& w) {
  j.at("w_gan").get_to(w.w_gan);
  j.at("w_sim").get_to(w.w_sim);
  w.lambda_ang.reset();
  w.lambda_gdl.reset();
  if (j.contains("lambda_ang")) w.lambda_ang = j.at("lambda_ang").get<double>();
  if (j.contains("lambda_gdl")) w.lambda_gdl = j.at("lambda_gdl").get<double>();
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  std::visit([&](const auto& s) { header["spec"] = s; }, ckpt.spec);
  header["meta"] = {{"variant", ckpt.meta.variant},
                    {"epoch", ckpt.meta.epoch},
                    {"config", ckpt.meta.config}};
  if (ckpt.meta.weights) header["meta"]["weights"] = *ckpt.meta.weights;
  auto tensors = nlohmann::json::array();
  for (const auto& e : ckpt.params.entries()) {
    const Shape& s = e.value.shape();
    tensors.push_back({{"name", e.name},
                       {"shape", {s.n, s.c, s.h, s.w}},
                       {"trainable", e.trainable}});
  }
  header["tensors"] = std::move(tensors);
  const std::string text = header.dump();

  std::vector<std::uint8_t> buf(kMagic.begin(), kMagic.end());
  append_pod(buf, kCheckpointVersion);
  append_pod(buf, static_cast<std::uint64_t>(text.size()));
  buf.insert(buf.end(), text.begin(), text.end());
  for (const auto& e : ckpt.params.entries()) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(e.value.data());
    buf.insert(buf.end(), p, p + e.value.numel() * sizeof(float));
  }
  append_pod(buf, crc32_bytes(buf));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw CheckpointError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = " in '" + path.string() + "'";
  if (buf.size() < kMagic.size() + 4 + 8 + 4 ||
      std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0) {
    throw CheckpointError("not a checkpoint file" + where);
  }
  std::size_t pos = kMagic.size();
  const auto version = read_pod<std::uint32_t>(buf, pos);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")" + where);
  }
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
  if (crc32_bytes({buf.data(), buf.size() - 4}) != stored_crc) {
    throw CheckpointError("checksum mismatch, file is corrupted" + where);
  }
  const auto header_len = read_pod<std::uint64_t>(buf, pos);
  if (pos + header_len > buf.size() - 4) throw CheckpointError("header truncated" + where);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                                   buf.begin() + static_cast<std::ptrdiff_t>(pos + header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed header: ") + e.what() + where);
  }
  pos += header_len;

  Checkpoint ckpt;
  try {
    const auto& spec = header.at("spec");
    if (spec.at("kind") == "generator") {
      ckpt.spec = spec.get<GeneratorSpec>();
    } else {
      ckpt.spec = spec.get<ClassifierSpec>();
    }
    const auto& meta = header.at("meta");
    ckpt.meta.variant = meta.at("variant").get<std::string>();
    ckpt.meta.epoch = meta.at("epoch").get<int>();
    ckpt.meta.config = meta.at("config");
    if (meta.contains("weights")) ckpt.meta.weights = meta.at("weights").get<LossWeights>();
    for (const auto& t : header.at("tensors")) {
      const auto dims = t.at("shape").get<std::vector<int>>();
      if (dims.size() != 4) throw CheckpointError("bad tensor shape" + where);
      Tensor& v = ckpt.params.add(t.at("name").get<std::string>(), {dims[0], dims[1], dims[2], dims[3]},
                                  t.at("trainable").get<bool>());
      const std::size_t bytes = v.numel() * sizeof(float);
      if (pos + bytes > buf.size() - 4) throw CheckpointError("tensor data truncated" + where);
      std::memcpy(v.data(), buf.data() + pos, bytes);
      pos += bytes;
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed header: ") + e.what() + where);
  }
  if (pos != buf.size() - 4) throw CheckpointError("trailing bytes" + where);
  return ckpt;
}

Checkpoint load_generator(const std::filesystem::path& path,
                          const std::optional<GeneratorSpec>& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  const auto* spec = std::get_if<GeneratorSpec>(&ckpt.spec);
  if (!spec) throw CheckpointError("'" + path.string() + "' holds a classifier, not a generator");
  if (expected && !(*spec == *expected)) {
    throw CheckpointError("generator spec mismatch in '" + path.string() + "': stored " +
                          nlohmann::json(*spec).dump() + ", expected " +
                          nlohmann::json(*expected).dump());
  }
  // Guards against hand-edited headers whose tensors disagree with the spec.
  const ParamSet reference = Generator(*spec).init_params(0);
  for (const auto& e : reference.entries()) {
    if (!ckpt.params.contains(e.name) || ckpt.params.at(e.name).shape() != e.value.shape()) {
      throw CheckpointError("checkpoint '" + path.string() + "' lacks parameter " + e.name);
    }
  }
  return ckpt;
}

Checkpoint load_classifier(const std::filesystem::path& path,
                           const std::optional<ClassifierSpec>& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  const auto* spec = std::get_if<ClassifierSpec>(&ckpt.spec);
  if (!spec) throw CheckpointError("'" + path.string() + "' holds a generator, not a classifier");
  if (expected && !(*spec == *expected)) {
    throw CheckpointError("classifier spec mismatch in '" + path.string() + "': stored " +
                          nlohmann::json(*spec).dump() + ", expected " +
                          nlohmann::json(*expected).dump());
  }
  const ParamSet reference = Classifier(*spec).init_params(0);
  for (const auto& e : reference.entries()) {
    if (!ckpt.params.contains(e.name) || ckpt.params.at(e.name).shape() != e.value.shape()) {
      throw CheckpointError("checkpoint '" + path.string() + "' lacks parameter " + e.name);
    }
  }
  return ckpt;
}

}  // namespace aquagan
