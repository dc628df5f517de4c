#include "cdl/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cdl/error.hpp"
#include "cdl/sdae.hpp"
#include "text_util.hpp"

namespace cdl {

namespace {

using Setter = std::function<bool(HyperParams&, const std::string&)>;

bool set_double(double& field, const std::string& text) {
  return detail::parse_double(text, field);
}

bool set_size(std::size_t& field, const std::string& text) {
  std::uint64_t v = 0;
  if (!detail::parse_uint(text, v)) return false;
  field = static_cast<std::size_t>(v);
  return true;
}

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"lambda_u", [](HyperParams& h, const std::string& t) { return set_double(h.lambda_u, t); }},
      {"lambda_v", [](HyperParams& h, const std::string& t) { return set_double(h.lambda_v, t); }},
      {"lambda_n", [](HyperParams& h, const std::string& t) { return set_double(h.lambda_n, t); }},
      {"lambda_w", [](HyperParams& h, const std::string& t) { return set_double(h.lambda_w, t); }},
      {"lambda_s", [](HyperParams& h, const std::string& t) { return set_double(h.lambda_s, t); }},
      {"a", [](HyperParams& h, const std::string& t) { return set_double(h.conf.a, t); }},
      {"b", [](HyperParams& h, const std::string& t) { return set_double(h.conf.b, t); }},
      {"K", [](HyperParams& h, const std::string& t) { return set_size(h.rank, t); }},
      {"widths",
       [](HyperParams& h, const std::string& t) {
         try {
           h.widths = parse_size_list(t);
           return true;
         } catch (const Error&) {
           return false;
         }
       }},
      {"encoder_layers", [](HyperParams& h, const std::string& t) { return set_size(h.encoder_layers, t); }},
      {"hidden_units", [](HyperParams& h, const std::string& t) { return set_size(h.hidden_units, t); }},
      {"noise_level", [](HyperParams& h, const std::string& t) { return set_double(h.noise_level, t); }},
      {"dropout_rate", [](HyperParams& h, const std::string& t) { return set_double(h.dropout_rate, t); }},
      {"learning_rate", [](HyperParams& h, const std::string& t) { return set_double(h.learning_rate, t); }},
      {"momentum", [](HyperParams& h, const std::string& t) { return set_double(h.momentum, t); }},
      {"epochs_per_block", [](HyperParams& h, const std::string& t) { return set_size(h.epochs_per_block, t); }},
      {"max_sweeps", [](HyperParams& h, const std::string& t) { return set_size(h.max_sweeps, t); }},
      {"tolerance", [](HyperParams& h, const std::string& t) { return set_double(h.tolerance, t); }},
      {"patience", [](HyperParams& h, const std::string& t) { return set_size(h.patience, t); }},
      {"max_restarts", [](HyperParams& h, const std::string& t) { return set_size(h.max_restarts, t); }},
      {"init_scale", [](HyperParams& h, const std::string& t) { return set_double(h.init_scale, t); }},
      {"seed",
       [](HyperParams& h, const std::string& t) {
         std::uint64_t v = 0;
         if (!detail::parse_uint(t, v)) return false;
         h.seed = v;
         return true;
       }},
      {"threads", [](HyperParams& h, const std::string& t) { return set_size(h.threads, t); }},
  };
  return table;
}

const std::vector<std::string> kRequired = {"lambda_u", "lambda_v", "lambda_n",
                                            "lambda_w"};

}  // namespace

void HyperParams::validate() const {
  std::vector<std::string> bad;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0)) bad.push_back(name);
  };
  positive(lambda_u, "lambda_u");
  positive(lambda_v, "lambda_v");
  positive(lambda_n, "lambda_n");
  positive(lambda_w, "lambda_w");
  positive(lambda_s, "lambda_s");
  if (!(conf.a > conf.b)) bad.push_back("a");
  if (!(conf.b >= 0.0)) bad.push_back("b");
  if (rank == 0) bad.push_back("K");
  if (!widths.empty()) {
    try {
      validate_widths(widths);
      if (widths[(widths.size() - 1) / 2] != rank) bad.push_back("widths");
    } catch (const Error&) {
      bad.push_back("widths");
    }
  } else {
    if (encoder_layers == 0) bad.push_back("encoder_layers");
    if (hidden_units == 0) bad.push_back("hidden_units");
  }
  if (!(noise_level >= 0.0 && noise_level <= 1.0)) bad.push_back("noise_level");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) bad.push_back("dropout_rate");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    bad.push_back("learning_rate");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) bad.push_back("momentum");
  if (!(tolerance >= 0.0)) bad.push_back("tolerance");
  if (patience == 0) bad.push_back("patience");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) bad.push_back("init_scale");
  if (threads == 0) bad.push_back("threads");
  if (!bad.empty()) {
    std::string msg = "invalid hyperparameters:";
    for (const auto& k : bad) msg += " " + k;
    fail(ErrorKind::kValidation, msg);
  }
}

std::vector<std::size_t> HyperParams::resolve_widths(
    std::size_t vocab_size) const {
  if (!widths.empty()) {
    if (widths.front() != vocab_size) {
      fail(ErrorKind::kValidation,
           "widths start with " + std::to_string(widths.front()) +
               " but the vocabulary has " + std::to_string(vocab_size) +
               " words");
    }
    return widths;
  }
  std::vector<std::size_t> out{vocab_size};
  for (std::size_t l = 1; l < encoder_layers; ++l) out.push_back(hidden_units);
  out.push_back(rank);
  for (std::size_t l = 1; l < encoder_layers; ++l) out.push_back(hidden_units);
  out.push_back(vocab_size);
  return out;
}

Config Config::parse(const std::string& text, const std::string& source) {
  Config config;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    std::string_view view =
        detail::trim(std::string_view(line).substr(0, hash));
    if (view.empty()) continue;
    auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::kParse, source + ":" + std::to_string(lineno) +
                                  ": expected key=value");
    }
    std::string key(detail::trim(view.substr(0, eq)));
    std::string value(detail::trim(view.substr(eq + 1)));
    if (key.empty()) {
      fail(ErrorKind::kParse,
           source + ":" + std::to_string(lineno) + ": empty key");
    }
    if (config.contains(key)) {
      fail(ErrorKind::kParse, source + ":" + std::to_string(lineno) +
                                  ": key \"" + key + "\" repeated");
    }
    config.entries_.emplace_back(std::move(key), std::move(value));
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

std::optional<std::string> Config::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void Config::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

std::string Config::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

void Config::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  out << to_string();
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

const std::vector<std::string>& data_config_keys() {
  static const std::vector<std::string> keys = {
      "ratings",     "content",   "content_normalization",
      "test_ratings", "variant",  "m_grid",
      "select_m",    "folds",     "iterations",
      "burn_in",     "thin"};
  return keys;
}

const std::vector<std::string>& hyper_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
  }();
  return keys;
}

HyperParams hyper_from_config(const Config& config) {
  HyperParams hyper;
  std::vector<std::string> problems;
  const auto& data_keys = data_config_keys();
  for (const auto& [key, value] : config.entries()) {
    auto it = std::find_if(setters().begin(), setters().end(),
                           [&](const auto& s) { return s.first == key; });
    if (it == setters().end()) {
      if (std::find(data_keys.begin(), data_keys.end(), key) ==
          data_keys.end()) {
        problems.push_back(key + " (unknown key)");
      }
      continue;
    }
    if (!it->second(hyper, value)) {
      problems.push_back(key + " (malformed value \"" + value + "\")");
    }
  }
  for (const auto& key : kRequired) {
    if (!config.contains(key)) problems.push_back(key + " (missing)");
  }
  // range checks run even after parse failures so one pass reports everything
  try {
    hyper.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "configuration errors:";
    for (const auto& p : problems) msg += "\n  " + p;
    fail(ErrorKind::kValidation, msg);
  }
  return hyper;
}

Config config_from_hyper(const HyperParams& h) {
  Config c;
  auto put = [&](const char* key, double v) { c.set(key, detail::format_hex(v)); };
  auto put_size = [&](const char* key, std::size_t v) {
    c.set(key, std::to_string(v));
  };
  put("lambda_u", h.lambda_u);
  put("lambda_v", h.lambda_v);
  put("lambda_n", h.lambda_n);
  put("lambda_w", h.lambda_w);
  put("lambda_s", h.lambda_s);
  put("a", h.conf.a);
  put("b", h.conf.b);
  put_size("K", h.rank);
  if (!h.widths.empty()) {
    std::string w;
    for (std::size_t k = 0; k < h.widths.size(); ++k) {
      w += (k ? "," : "") + std::to_string(h.widths[k]);
    }
    c.set("widths", w);
  }
  put_size("encoder_layers", h.encoder_layers);
  put_size("hidden_units", h.hidden_units);
  put("noise_level", h.noise_level);
  put("dropout_rate", h.dropout_rate);
  put("learning_rate", h.learning_rate);
  put("momentum", h.momentum);
  put_size("epochs_per_block", h.epochs_per_block);
  put_size("max_sweeps", h.max_sweeps);
  put("tolerance", h.tolerance);
  put_size("patience", h.patience);
  put_size("max_restarts", h.max_restarts);
  put("init_scale", h.init_scale);
  c.set("seed", std::to_string(h.seed));
  put_size("threads", h.threads);
  return c;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (auto field : detail::split_on(text, ',')) {
    std::uint64_t v = 0;
    if (!detail::parse_uint(field, v)) {
      fail(ErrorKind::kParse, "malformed integer list \"" + text + "\"");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace cdl
