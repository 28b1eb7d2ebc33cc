#include "docdial/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include <json.hpp>
#include <zlib.h>

namespace docdial {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blob is little-endian float32");

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json config_to_json(const ModelConfig& c) {
  return json{{"d_model", c.d_model},
              {"n_heads", c.n_heads},
              {"n_enc_layers", c.n_enc_layers},
              {"n_dec_layers", c.n_dec_layers},
              {"d_ff", c.d_ff},
              {"vocab_size", c.vocab_size},
              {"max_positions", c.max_positions},
              {"dropout_rate", c.dropout_rate},
              {"init_seed", c.init_seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.n_enc_layers = j.at("n_enc_layers").get<int>();
  c.n_dec_layers = j.at("n_dec_layers").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_positions = j.at("max_positions").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.init_seed = j.at("init_seed").get<uint64_t>();
  return c;
}

std::string crc_hex(uint32_t crc) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", crc);
  return buf;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const Vocabulary& vocab,
                     const ModelParams<float>& params, double inference_tau, int max_input_len,
                     const std::string& prompt_style) {
  const auto views = tensor_views(params);
  json manifest = json::array();
  size_t blob_bytes = 0;
  for (const auto& t : views) {
    manifest.push_back(json::array({t.name, json::array({t.rows, t.cols})}));
    blob_bytes += static_cast<size_t>(t.size()) * sizeof(float);
  }

  uLong crc = crc32(0L, Z_NULL, 0);
  for (const auto& t : views) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(t.data),
                static_cast<uInt>(t.size() * sizeof(float)));
  }

  json header{{"format_version", kFormatVersion},
              {"model_config", config_to_json(cfg)},
              {"vocab", vocab.id_to_token},
              {"manifest", manifest},
              {"blob_bytes", blob_bytes},
              {"blob_crc32", crc_hex(static_cast<uint32_t>(crc))},
              {"inference_tau", inference_tau},
              {"max_input_len", max_input_len},
              {"prompt_style", prompt_style}};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << header.dump() << '\n';
  for (const auto& t : views) {
    out.write(reinterpret_cast<const char*>(t.data),
              static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("short write on checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw CheckpointError("checkpoint '" + path + "': missing header");
  }
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw CheckpointError("checkpoint '" + path + "': bad header: " + e.what());
  }
  if (header.at("format_version").get<int>() != kFormatVersion) {
    throw CheckpointError("checkpoint '" + path + "': unsupported format_version");
  }

  Checkpoint ckpt;
  ckpt.config = config_from_json(header.at("model_config"));
  ckpt.config.validate();
  ckpt.vocab = Vocabulary::from_token_list(header.at("vocab").get<std::vector<std::string>>());
  ckpt.inference_tau = header.value("inference_tau", 1.0);
  ckpt.max_input_len = header.value("max_input_len", ckpt.config.max_positions);
  ckpt.prompt_style = header.value("prompt_style", std::string("connected"));
  if (ckpt.config.vocab_size != ckpt.vocab.size()) {
    throw CheckpointError("checkpoint '" + path + "': vocab listing size " +
                          std::to_string(ckpt.vocab.size()) + " != config vocab_size");
  }

  ckpt.params = zeros_like_config<float>(ckpt.config);
  auto views = tensor_views(ckpt.params);
  const auto& manifest = header.at("manifest");
  if (manifest.size() != views.size()) {
    throw CheckpointError("checkpoint '" + path + "': manifest has " +
                          std::to_string(manifest.size()) + " tensors, expected " +
                          std::to_string(views.size()));
  }
  for (size_t i = 0; i < views.size(); ++i) {
    const std::string name = manifest[i][0].get<std::string>();
    const auto rows = manifest[i][1][0].get<Eigen::Index>();
    const auto cols = manifest[i][1][1].get<Eigen::Index>();
    if (name != views[i].name || rows != views[i].rows || cols != views[i].cols) {
      throw CheckpointError("checkpoint '" + path + "': manifest entry " + std::to_string(i) +
                            " ('" + name + "') does not match the expected layout");
    }
  }

  uLong crc = crc32(0L, Z_NULL, 0);
  for (auto& t : views) {
    in.read(reinterpret_cast<char*>(t.data),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!in) throw CheckpointError("checkpoint '" + path + "': truncated blob");
    crc = crc32(crc, reinterpret_cast<const Bytef*>(t.data),
                static_cast<uInt>(t.size() * sizeof(float)));
  }
  ckpt.blob_crc32 = crc_hex(static_cast<uint32_t>(crc));
  const std::string expected = header.at("blob_crc32").get<std::string>();
  if (ckpt.blob_crc32 != expected) {
    throw CheckpointError("checkpoint '" + path + "': checksum mismatch (blob crc32 " +
                          ckpt.blob_crc32 + ", header says " + expected + ")");
  }
  return ckpt;
}

}  // namespace docdial
