#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "errors.hpp"
#include "lateral.hpp"
#include "oja.hpp"
#include "report.hpp"

namespace hebbsal {

// Every tunable of a run. Serialized as `key = value` lines; `#` starts a comment.
//
//   patch_size                 patch edge in pixels (16)
//   num_layers                 intensity layers per channel (10); `epsilon = 0.1` is accepted as 1/num_layers
//   seed                       RNG seed for sample shuffling (0)
//   workers                    images processed concurrently (1)
//   output_dir                 run directory
//   emit_diagnostics           also write per-patch weight CSVs (false)
//   learn.mu, learn.epochs, learn.alpha, learn.init (w1,w2),
//   learn.input_scale, learn.anneal_steps, learn.min_updates
//   saliency.dissim_threshold, saliency.count_threshold,
//   saliency.use_absolute_dot, saliency.cutoff_mode (incidence | mean_frequency)
struct RunConfig {
  int patch_size = kDefaultPatchSize;
  int num_layers = kDefaultLayers;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output_dir = "hebbsal_out";
  bool emit_diagnostics = false;
  LearnConfig learn;
  SaliencyConfig saliency;

  // Learning parameters with the run seed applied.
  LearnConfig effective_learn() const {
    LearnConfig l = learn;
    l.seed = seed;
    return l;
  }

  void validate() const {
    if (patch_size < 2) throw ValidationError("patch_size must be >= 2");
    if (num_layers < 1) throw ValidationError("num_layers must be >= 1");
    if (workers < 1) throw ValidationError("workers must be >= 1");
    learn.validate();
    saliency.validate();
  }
};

inline bool operator==(const RunConfig& a, const RunConfig& b) {
  const auto& la = a.learn;
  const auto& lb = b.learn;
  const auto& sa = a.saliency;
  const auto& sb = b.saliency;
  return a.patch_size == b.patch_size && a.num_layers == b.num_layers && a.seed == b.seed && a.workers == b.workers &&
         a.output_dir == b.output_dir && a.emit_diagnostics == b.emit_diagnostics && la.mu == lb.mu &&
         la.epochs == lb.epochs && la.alpha == lb.alpha && la.init == lb.init && la.input_scale == lb.input_scale &&
         la.anneal_steps == lb.anneal_steps && la.min_updates == lb.min_updates && sa.dissim_threshold == sb.dissim_threshold &&
         sa.count_threshold == sb.count_threshold && sa.use_absolute_dot == sb.use_absolute_dot &&
         sa.cutoff_mode == sb.cutoff_mode;
}

// Converts a layer step into a layer count; the step must divide 1 evenly.
inline int layers_from_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must be in (0, 1]");
  const double n = std::round(1.0 / epsilon);
  if (std::abs(n * epsilon - 1.0) > 1e-9) throw ValidationError("epsilon must be 1/n for an integer n");
  return static_cast<int>(n);
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size())
    throw ValidationError("config: bad value for " + key + ": '" + value + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ValidationError("config: bad boolean for " + key + ": '" + value + "'");
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_number;
  if (key == "patch_size") cfg.patch_size = parse_number<int>(key, value);
  else if (key == "num_layers") cfg.num_layers = parse_number<int>(key, value);
  else if (key == "epsilon") cfg.num_layers = layers_from_epsilon(parse_number<double>(key, value));
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "workers") cfg.workers = parse_number<int>(key, value);
  else if (key == "output_dir") cfg.output_dir = value;
  else if (key == "emit_diagnostics") cfg.emit_diagnostics = parse_bool(key, value);
  else if (key == "learn.mu") cfg.learn.mu = parse_number<double>(key, value);
  else if (key == "learn.epochs") cfg.learn.epochs = parse_number<int>(key, value);
  else if (key == "learn.alpha") cfg.learn.alpha = parse_number<double>(key, value);
  else if (key == "learn.input_scale") cfg.learn.input_scale = parse_number<double>(key, value);
  else if (key == "learn.anneal_steps") cfg.learn.anneal_steps = parse_number<double>(key, value);
  else if (key == "learn.min_updates") cfg.learn.min_updates = parse_number<int>(key, value);
  else if (key == "learn.init") {
    const auto comma = value.find(',');
    if (comma == std::string::npos) throw ValidationError("config: learn.init expects 'w1,w2'");
    cfg.learn.init = {parse_number<double>(key, detail::trim(value.substr(0, comma))),
                      parse_number<double>(key, detail::trim(value.substr(comma + 1)))};
  } else if (key == "saliency.dissim_threshold") cfg.saliency.dissim_threshold = parse_number<double>(key, value);
  else if (key == "saliency.count_threshold") cfg.saliency.count_threshold = parse_number<int>(key, value);
  else if (key == "saliency.use_absolute_dot") cfg.saliency.use_absolute_dot = parse_bool(key, value);
  else if (key == "saliency.cutoff_mode") cfg.saliency.cutoff_mode = parse_cutoff_mode(value);
  else throw ValidationError("config: unknown key '" + key + "'");
}

// Applies the entries in `text` on top of `cfg`. Returns the set of keys seen.
inline std::map<std::string, std::string> parse_config(const std::string& text, RunConfig& cfg) {
  std::map<std::string, std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    apply_config_entry(cfg, key, value);
    seen[key] = value;
  }
  return seen;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  const auto bytes = detail::read_file_bytes(path);
  parse_config(std::string(bytes.begin(), bytes.end()), base);
  return base;
}

inline std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "patch_size = " << cfg.patch_size << '\n'
      << "num_layers = " << cfg.num_layers << '\n'
      << "seed = " << cfg.seed << '\n'
      << "workers = " << cfg.workers << '\n'
      << "output_dir = " << cfg.output_dir << '\n'
      << "emit_diagnostics = " << (cfg.emit_diagnostics ? "true" : "false") << '\n'
      << "learn.mu = " << format_double(cfg.learn.mu) << '\n'
      << "learn.epochs = " << cfg.learn.epochs << '\n'
      << "learn.alpha = " << format_double(cfg.learn.alpha) << '\n'
      << "learn.init = " << format_double(cfg.learn.init.x) << ',' << format_double(cfg.learn.init.y) << '\n'
      << "learn.input_scale = " << format_double(cfg.learn.input_scale) << '\n'
      << "learn.anneal_steps = " << format_double(cfg.learn.anneal_steps) << '\n'
      << "learn.min_updates = " << cfg.learn.min_updates << '\n'
      << "saliency.dissim_threshold = " << format_double(cfg.saliency.dissim_threshold) << '\n'
      << "saliency.count_threshold = " << cfg.saliency.count_threshold << '\n'
      << "saliency.use_absolute_dot = " << (cfg.saliency.use_absolute_dot ? "true" : "false") << '\n'
      << "saliency.cutoff_mode = " << cutoff_mode_name(cfg.saliency.cutoff_mode) << '\n';
  return out.str();
}

}  // namespace hebbsal
