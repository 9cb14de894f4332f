#include "nagm/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace nagm {

namespace {

constexpr char kMagic[8] = {'N', 'A', 'G', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"hidden_dim", c.hidden_dim},
          {"vocab_size", c.vocab_size},
          {"margin", c.margin},
          {"alpha", c.alpha},
          {"use_attention", c.use_attention},
          {"use_sentence_type", c.use_sentence_type},
          {"share_ensemble_weights", c.share_ensemble_weights},
          {"max_decode_len", c.max_decode_len}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.margin = j.at("margin").get<double>();
  c.alpha = j.at("alpha").get<double>();
  c.use_attention = j.at("use_attention").get<bool>();
  c.use_sentence_type = j.at("use_sentence_type").get<bool>();
  c.share_ensemble_weights = j.at("share_ensemble_weights").get<bool>();
  c.max_decode_len = j.at("max_decode_len").get<std::size_t>();
  return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json header;
  header["config"] = config_to_json(ckpt.config);
  header["vocab"] = {
      {"kind",
       ckpt.vocab.kind() == TokenizerKind::Bigram ? "bigram" : "word"},
      {"tokens", ckpt.vocab.tokens()}};
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& [name, tensor] : ckpt.params.params()) {
    manifest.push_back({{"name", name}, {"shape", tensor.shape}});
  }
  header["tensors"] = manifest;
  std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out.write(kMagic, sizeof(kMagic));
  std::uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  std::uint64_t hlen = header_str.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header_str.data(), static_cast<std::streamsize>(hlen));
  for (const auto& [name, tensor] : ckpt.params.params()) {
    out.write(reinterpret_cast<const char*>(tensor.data.data()),
              static_cast<std::streamsize>(tensor.size() * sizeof(double)));
  }
  if (!out) throw IoError("short write to checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("checkpoint " + path + ": bad magic");
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != kVersion) {
    throw IoError("checkpoint " + path + ": unsupported version " +
                  std::to_string(version));
  }
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || hlen > (1ull << 32)) {
    throw IoError("checkpoint " + path + ": corrupt header length");
  }
  std::string header_str(hlen, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw IoError("checkpoint " + path + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint " + path + ": malformed header: " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.config = config_from_json(header.at("config"));
    TokenizerKind kind =
        header.at("vocab").at("kind").get<std::string>() == "word"
            ? TokenizerKind::Word
            : TokenizerKind::Bigram;
    ckpt.vocab = Vocabulary(
        header.at("vocab").at("tokens").get<std::vector<std::string>>(), kind);
    for (const auto& entry : header.at("tensors")) {
      std::string name = entry.at("name").get<std::string>();
      auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      Tensor t = Tensor::zeros(shape);
      in.read(reinterpret_cast<char*>(t.data.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
      if (!in) {
        throw IoError("checkpoint " + path + ": truncated tensor " + name);
      }
      ckpt.params.add(name, std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint " + path + ": malformed header: " + e.what());
  }
  return ckpt;
}

void validate_checkpoint_shapes(const Checkpoint& ckpt,
                                const ModelConfig& expected) {
  auto shapes = model_param_shapes(expected);
  for (const auto& [name, shape] : shapes) {
    if (!ckpt.params.has(name)) {
      throw SchemaError("checkpoint missing tensor " + name);
    }
    if (ckpt.params.at(name).shape != shape) {
      throw SchemaError("checkpoint tensor " + name + " has shape " +
                    ckpt.params.at(name).shape_str() + ", expected " +
                    Tensor::zeros(shape).shape_str());
    }
  }
}

}  // namespace nagm
