#pragma once

#include <string>
#include <vector>

#include "vascan/nn/model.hpp"

namespace vascan {

// Checkpoints are a magic line, a length-prefixed JSON header describing
// the model configuration and array sizes, then every parameter and
// batch-norm buffer as little-endian float64 in collection order.
inline constexpr char kCheckpointMagic[] = "VASCKPT1\n";

namespace detail {
void write_checkpoint_file(const std::string& path, const std::string& header,
                           const std::vector<double>& values);
// Returns the header; appends the payload to values.
std::string read_checkpoint_file(const std::string& path,
                                 std::vector<double>& values);
std::string encode_header(const nn::ModelConfig& cfg, std::int64_t params,
                          std::int64_t buffers);
nn::ModelConfig decode_header(const std::string& header, std::int64_t& params,
                              std::int64_t& buffers);
}  // namespace detail

template <typename S>
void save_checkpoint(const std::string& path, nn::SegNet<S>& net,
                     const nn::ModelConfig& cfg) {
  nn::ParamList<S> params, buffers;
  net.collect_params(params);
  net.collect_buffers(buffers);
  std::vector<double> values;
  for (const nn::ParamList<S>* list : {&params, &buffers}) {
    for (const auto& span : *list) {
      for (std::int64_t i = 0; i < span.count; ++i) {
        values.push_back(static_cast<double>(span.value[i]));
      }
    }
  }
  const std::int64_t param_count = nn::total_param_count(params);
  detail::write_checkpoint_file(
      path,
      detail::encode_header(cfg, param_count,
                            static_cast<std::int64_t>(values.size()) -
                                param_count),
      values);
}

// Reads only the stored configuration, for constructing a matching net.
nn::ModelConfig peek_checkpoint(const std::string& path);

template <typename S>
nn::ModelConfig load_checkpoint(const std::string& path, nn::SegNet<S>& net) {
  std::vector<double> values;
  std::int64_t param_count = 0, buffer_count = 0;
  const nn::ModelConfig cfg = detail::decode_header(
      detail::read_checkpoint_file(path, values), param_count, buffer_count);
  nn::ParamList<S> params, buffers;
  net.collect_params(params);
  net.collect_buffers(buffers);
  if (nn::total_param_count(params) != param_count ||
      nn::total_param_count(buffers) != buffer_count) {
    throw std::runtime_error("checkpoint shape does not match model: " + path);
  }
  size_t at = 0;
  for (nn::ParamList<S>* list : {&params, &buffers}) {
    for (auto& span : *list) {
      for (std::int64_t i = 0; i < span.count; ++i) {
        span.value[i] = static_cast<S>(values[at++]);
      }
    }
  }
  return cfg;
}

}  // namespace vascan
