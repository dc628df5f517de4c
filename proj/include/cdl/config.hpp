#pragma once

// Hyperparameters and the flat key=value configuration format.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cdl/cf.hpp"

namespace cdl {

struct HyperParams {
  double lambda_u = 0.1;
  double lambda_v = 10.0;
  double lambda_n = 100.0;
  double lambda_w = 1e-3;
  // Layer precision. The MAP path always uses the deterministic limit; the
  // sampler needs a finite value and falls back to 100 when this is infinite.
  double lambda_s = std::numeric_limits<double>::infinity();
  Confidence conf;
  std::size_t rank = 50;  // K
  std::vector<std::size_t> widths;  // empty: derived from the fields below
  std::size_t encoder_layers = 2;   // L / 2
  std::size_t hidden_units = 200;
  double noise_level = 0.3;
  double dropout_rate = 0.1;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t epochs_per_block = 5;
  std::size_t max_sweeps = 30;
  double tolerance = 1e-6;  // relative objective change for early stopping
  std::size_t patience = 3;
  std::size_t max_restarts = 5;
  double init_scale = 0.01;  // std-dev of the initial item offsets
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  /// Throws a validation error naming every offending field.
  void validate() const;

  /// Layer widths for a vocabulary of `vocab_size` words.
  std::vector<std::size_t> resolve_widths(std::size_t vocab_size) const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

/// Ordered key=value pairs. Lines are "key = value"; '#' starts a comment.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "");
  static Config load(const std::filesystem::path& path);

  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  bool contains(const std::string& key) const { return get(key).has_value(); }
  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string to_string() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Keys accepted in a training configuration besides the hyperparameters.
const std::vector<std::string>& data_config_keys();
const std::vector<std::string>& hyper_config_keys();

/// Builds and validates hyperparameters. Unknown keys, missing lambda_u,
/// lambda_v, lambda_n or lambda_w, malformed and out-of-range values are all
/// collected into one validation error.
HyperParams hyper_from_config(const Config& config);

/// Inverse of hyper_from_config; doubles are written as round-trip
/// hexfloats.
Config config_from_hyper(const HyperParams& hyper);

std::vector<std::size_t> parse_size_list(const std::string& text);

}  // namespace cdl
