#include "hebb/io/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hebb/errors.hpp"

namespace hebb::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad(int line, const std::string& msg) {
  throw FormatError("config line " + std::to_string(line) + ": " + msg);
}

template <typename T>
T parse_number(std::string_view v, int line, std::string_view key) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars for doubles is missing on older toolchains; strtod with a full-consumption check.
    const std::string s(v);
    char* end = nullptr;
    out = static_cast<T>(std::strtod(s.c_str(), &end));
    if (s.empty() || end != s.c_str() + s.size()) bad(line, "invalid number for " + std::string(key));
  } else {
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad(line, "invalid integer for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view v, int line, std::string_view key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad(line, "expected true or false for " + std::string(key));
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void apply_layer_key(NetworkConfig& cfg, std::string_view key, std::string_view value, int line) {
  const auto dot = key.find('.');
  const std::string_view index_text = key.substr(5, dot - 5);
  const std::string_view field = key.substr(dot + 1);
  const int index = parse_number<int>(index_text, line, key);
  if (index < 1 || index > static_cast<int>(cfg.layers.size())) {
    bad(line, std::string(key) + " refers to a layer beyond layers = " + std::to_string(cfg.layers.size()));
  }
  LayerSpec& s = cfg.layers[index - 1];
  if (field == "filters") {
    s.filters = parse_number<int>(value, line, key);
  } else if (field == "kernel") {
    s.kernel = parse_number<int>(value, line, key);
  } else if (field == "activation") {
    const auto mode = parse_activation(value);
    if (!mode) bad(line, "unknown activation '" + std::string(value) + "'");
    s.activation = *mode;
  } else if (field == "plasticity_k") {
    s.plasticity_k = parse_number<int>(value, line, key);
  } else if (field == "prune_density") {
    s.prune_density = parse_number<double>(value, line, key);
  } else {
    bad(line, "unknown key '" + std::string(key) + "'");
  }
}

}  // namespace

NetworkConfig parse_config(std::string_view text, const NetworkConfig& base) {
  NetworkConfig cfg = base;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) bad(line, "expected key = value");
    const std::string_view key = trim(s.substr(0, eq));
    const std::string_view value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) bad(line, "expected key = value");

    if (key == "rule") {
      const auto rule = parse_hebb_rule(value);
      if (!rule) bad(line, "unknown rule '" + std::string(value) + "'");
      cfg.rule = *rule;
    } else if (key == "epochs") {
      cfg.epochs = parse_number<int>(value, line, key);
    } else if (key == "batch_size") {
      cfg.batch_size = parse_number<int>(value, line, key);
    } else if (key == "learning_rate") {
      cfg.learning_rate = parse_number<double>(value, line, key);
    } else if (key == "threshold_rate") {
      cfg.threshold_rate = parse_number<double>(value, line, key);
    } else if (key == "ema_horizon") {
      cfg.ema_horizon = parse_number<double>(value, line, key);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(value, line, key);
    } else if (key == "greedy") {
      cfg.greedy = parse_bool(value, line, key);
    } else if (key == "zca_epsilon") {
      cfg.zca_epsilon = parse_number<double>(value, line, key);
    } else if (key == "ridge_scale") {
      cfg.ridge_scale = parse_number<double>(value, line, key);
    } else if (key == "input_channels") {
      cfg.input_channels = parse_number<int>(value, line, key);
    } else if (key == "input_size") {
      cfg.input_size = parse_number<int>(value, line, key);
    } else if (key == "layers") {
      const int n = parse_number<int>(value, line, key);
      if (n < 1) bad(line, "layers must be >= 1");
      cfg.layers.resize(static_cast<std::size_t>(n));
    } else if (key.starts_with("layer") && key.find('.') != std::string_view::npos) {
      apply_layer_key(cfg, key, value, line);
    } else {
      bad(line, "unknown key '" + std::string(key) + "'");
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return cfg;
}

NetworkConfig load_config(const std::filesystem::path& file, const NetworkConfig& base) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string format_config(const NetworkConfig& c) {
  std::ostringstream os;
  os << "rule = " << to_string(c.rule) << '\n'
     << "epochs = " << c.epochs << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "learning_rate = " << num(c.learning_rate) << '\n'
     << "threshold_rate = " << num(c.threshold_rate) << '\n'
     << "ema_horizon = " << num(c.ema_horizon) << '\n'
     << "seed = " << c.seed << '\n'
     << "greedy = " << (c.greedy ? "true" : "false") << '\n'
     << "zca_epsilon = " << num(c.zca_epsilon) << '\n'
     << "ridge_scale = " << num(c.ridge_scale) << '\n'
     << "input_channels = " << c.input_channels << '\n'
     << "input_size = " << c.input_size << '\n'
     << "layers = " << c.layers.size() << '\n';
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    const LayerSpec& s = c.layers[l];
    const std::string p = "layer" + std::to_string(l + 1) + ".";
    os << p << "filters = " << s.filters << '\n'
       << p << "kernel = " << s.kernel << '\n'
       << p << "activation = " << to_string(s.activation) << '\n'
       << p << "plasticity_k = " << s.plasticity_k << '\n'
       << p << "prune_density = " << num(s.prune_density) << '\n';
  }
  return os.str();
}

}  // namespace hebb::io
