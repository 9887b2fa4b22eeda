#include "vascan/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace vascan {
namespace detail {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

void write_checkpoint_file(const std::string& path, const std::string& header,
                           const std::vector<double>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  const std::uint32_t len = static_cast<std::uint32_t>(header.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

std::string read_checkpoint_file(const std::string& path,
                                 std::vector<double>& values) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  char magic[sizeof(kCheckpointMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 20)) {
    throw std::runtime_error("corrupt checkpoint header: " + path);
  }
  std::string header(len, '\0');
  in.read(header.data(), len);
  std::vector<char> payload((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
  if (payload.size() % sizeof(double) != 0) {
    throw std::runtime_error("corrupt checkpoint payload: " + path);
  }
  values.resize(payload.size() / sizeof(double));
  std::memcpy(values.data(), payload.data(), payload.size());
  return header;
}

std::string encode_header(const nn::ModelConfig& cfg, std::int64_t params,
                          std::int64_t buffers) {
  nlohmann::json j;
  j["variant"] = cfg.variant;
  j["input_res"] = cfg.input_res;
  j["widths"] = cfg.widths;
  j["batch_norm"] = cfg.batch_norm;
  j["gru_kernel"] = cfg.gru_kernel;
  j["init_seed"] = cfg.init_seed;
  j["param_count"] = params;
  j["buffer_count"] = buffers;
  return j.dump();
}

nn::ModelConfig decode_header(const std::string& header, std::int64_t& params,
                              std::int64_t& buffers) {
  const nlohmann::json j = nlohmann::json::parse(header);
  nn::ModelConfig cfg;
  cfg.variant = j.at("variant").get<std::string>();
  cfg.input_res = j.at("input_res").get<int>();
  cfg.widths = j.at("widths").get<std::vector<int>>();
  cfg.batch_norm = j.at("batch_norm").get<bool>();
  cfg.gru_kernel = j.at("gru_kernel").get<int>();
  cfg.init_seed = j.at("init_seed").get<std::uint64_t>();
  params = j.at("param_count").get<std::int64_t>();
  buffers = j.at("buffer_count").get<std::int64_t>();
  return cfg;
}

}  // namespace detail

nn::ModelConfig peek_checkpoint(const std::string& path) {
  std::vector<double> values;
  std::int64_t params = 0, buffers = 0;
  return detail::decode_header(detail::read_checkpoint_file(path, values),
                               params, buffers);
}

}  // namespace vascan
