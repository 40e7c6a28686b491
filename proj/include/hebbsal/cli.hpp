#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "eval.hpp"
#include "image.hpp"
#include "ingest.hpp"
#include "lateral.hpp"
#include "report.hpp"

namespace hebbsal {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// Stable, collision-free directory names derived from input file stems.
inline std::vector<std::string> unique_stems(const std::vector<fs::path>& paths) {
  std::vector<std::string> names;
  std::set<std::string> used;
  for (const auto& p : paths) {
    std::string base = p.stem().string();
    if (base.empty()) base = "image";
    std::string name = base;
    for (int k = 2; used.count(name); ++k) name = base + "_" + std::to_string(k);
    used.insert(name);
    names.push_back(name);
  }
  return names;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename F>
void parallel_for(std::size_t n, int workers, F fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline json config_json(const RunConfig& cfg) {
  json j = json::object();
  RunConfig scratch;
  const auto entries = parse_config(serialize_config(cfg), scratch);
  for (const auto& [k, v] : entries) j[k] = v;
  return j;
}

}  // namespace detail

struct ImageOutcome {
  std::string image;
  std::string output_dir;
  bool ok = false;
  std::string error;
  std::vector<std::string> files;
};

// Detects saliency for each image and writes one subdirectory per image plus a
// run manifest. Returns kExitFailure if any image failed.
inline int cmd_detect(const std::vector<fs::path>& images, const RunConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate();
  const fs::path out_dir = cfg.output_dir;
  fs::create_directories(out_dir);
  detail::write_text(out_dir / "config.txt", serialize_config(cfg));

  const auto names = detail::unique_stems(images);
  std::vector<ImageOutcome> outcomes(images.size());
  std::mutex log_mutex;
  const LearnConfig learn = cfg.effective_learn();

  detail::parallel_for(images.size(), cfg.workers, [&](std::size_t i) {
    ImageOutcome& o = outcomes[i];
    o.image = images[i].string();
    o.output_dir = names[i];
    try {
      const RgbImage img = load_image(images[i], cfg.patch_size);
      const Detection d = detect_with_weights(img, cfg.saliency, learn, cfg.num_layers, cfg.patch_size);
      const fs::path dir = out_dir / names[i];
      fs::create_directories(dir);
      detail::write_text(dir / "saliency.json", saliency_to_json(d.grid, images[i].filename().string()).dump(2) + "\n");
      save_gray_png(dir / "mask.png", upsample_mask(d.grid.salient, cfg.patch_size));
      save_png(dir / "overlay.png", render_overlay(pad_image(img, cfg.patch_size), d.grid.salient));
      o.files = {"saliency.json", "mask.png", "overlay.png"};
      if (cfg.emit_diagnostics) {
        std::ofstream csv(dir / "weights.csv", std::ios::binary);
        write_weights_csv(csv, d.weights);
        if (!csv) throw IoError("write failed: " + (dir / "weights.csv").string());
        o.files.push_back("weights.csv");
      }
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
      std::lock_guard lock(log_mutex);
      log << "hebbsal: " << images[i].string() << ": " << e.what() << '\n';
    }
  });

  json manifest;
  manifest["config"] = detail::config_json(cfg);
  manifest["images"] = json::array();
  bool all_ok = true;
  for (const auto& o : outcomes) {
    json e{{"image", o.image}, {"output_dir", o.output_dir}, {"status", o.ok ? "ok" : "error"}};
    if (o.ok) e["files"] = o.files;
    else e["error"] = o.error;
    all_ok = all_ok && o.ok;
    manifest["images"].push_back(std::move(e));
  }
  detail::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return all_ok ? kExitOk : kExitFailure;
}

// Evaluates saliency results (saliency JSON files or raw images, which are
// detected first) against ROI maps paired by position. All inputs are
// validated before anything is computed or written.
inline int cmd_evaluate(const std::vector<fs::path>& inputs, const std::vector<fs::path>& rois, const RunConfig& cfg,
                        std::ostream& log = std::cerr) {
  cfg.validate();
  if (inputs.empty()) throw ValidationError("evaluate: no inputs");
  if (inputs.size() != rois.size()) {
    throw ValidationError("evaluate: " + std::to_string(inputs.size()) + " inputs but " + std::to_string(rois.size()) +
                          " ROI maps");
  }

  struct Pending {
    std::string name;
    std::optional<SaliencyGrid> grid;  // set for JSON inputs
    std::optional<RgbImage> image;     // set for image inputs
    RoiMap roi;
  };
  std::vector<Pending> pending(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Pending& p = pending[i];
    int width = 0, height = 0, patch = cfg.patch_size;
    if (detail::lower_extension(inputs[i]) == ".json") {
      const auto bytes = detail::read_file_bytes(inputs[i]);
      json doc;
      try {
        doc = json::parse(bytes.begin(), bytes.end());
      } catch (const json::exception& e) {
        throw ValidationError(inputs[i].string() + ": " + e.what());
      }
      try {
        p.grid = saliency_from_json(doc);
      } catch (const FormatError& e) {
        throw ValidationError(inputs[i].string() + ": " + e.what());
      }
      const std::string named = doc.value("image", "");
      p.name = named.empty() ? inputs[i].stem().string() : named;
      width = p.grid->image_width;
      height = p.grid->image_height;
      patch = p.grid->patch_size;
    } else {
      try {
        p.image = load_image(inputs[i], cfg.patch_size);
      } catch (const FormatError& e) {
        throw ValidationError(e.what());
      }
      p.name = inputs[i].filename().string();
      width = p.image->width();
      height = p.image->height();
    }
    try {
      p.roi = load_roi_map(rois[i], width, height, patch);
    } catch (const FormatError& e) {
      throw ValidationError(e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(rois[i].string() + ": " + e.what());
    }
  }

  const fs::path out_dir = cfg.output_dir;
  const LearnConfig learn = cfg.effective_learn();
  std::vector<EvalReport> reports(pending.size());
  std::vector<std::optional<RgbImage>> overlays(pending.size());
  detail::parallel_for(pending.size(), cfg.workers, [&](std::size_t i) {
    Pending& p = pending[i];
    if (!p.grid) {
      p.grid = detect(*p.image, cfg.saliency, learn, cfg.num_layers, cfg.patch_size);
      overlays[i] = render_overlay(*p.image, p.grid->salient, &p.roi);
    }
    reports[i] = evaluate(p.name, p.grid->salient, p.roi);
  });

  fs::create_directories(out_dir);
  std::ostringstream csv;
  write_eval_csv(csv, reports);
  detail::write_text(out_dir / "eval.csv", csv.str());
  detail::write_text(out_dir / "eval.json", eval_to_json(reports).dump(2) + "\n");
  const auto names = detail::unique_stems(inputs);
  for (std::size_t i = 0; i < overlays.size(); ++i) {
    if (overlays[i]) save_png(out_dir / (names[i] + "_overlay.png"), *overlays[i]);
  }
  log << "hebbsal: evaluated " << reports.size() << " image(s) -> " << (out_dir / "eval.csv").string() << '\n';
  return kExitOk;
}

inline const std::vector<std::string>& inspect_stages() {
  static const std::vector<std::string> stages{"channels", "layers", "weights"};
  return stages;
}

// Dumps one intermediate stage of the pipeline for a single image.
inline int cmd_inspect(const fs::path& image, const std::string& stage, const RunConfig& cfg) {
  cfg.validate();
  const auto& stages = inspect_stages();
  if (std::find(stages.begin(), stages.end(), stage) == stages.end()) {
    throw ValidationError("inspect: unknown stage '" + stage + "' (expected channels, layers or weights)");
  }
  const RgbImage img = load_image(image, cfg.patch_size);
  const fs::path dir = fs::path(cfg.output_dir) / image.stem();
  fs::create_directories(dir);
  const auto planes = split_channels(img);
  if (stage == "channels") {
    for (const auto& plane : planes)
      save_gray_png(dir / ("channel_" + std::string(channel_name(plane.channel)) + ".png"), plane.values);
  } else if (stage == "layers") {
    for (const auto& plane : planes) {
      for (const auto& layer : decompose_layers(plane, cfg.num_layers)) {
        save_gray_png(dir / ("layer_" + std::string(channel_name(layer.channel)) + "_" +
                             std::to_string(layer.layer_index) + ".png"),
                      layer.mask);
      }
    }
  } else {
    const auto weights = learn_weight_grids(img, cfg.effective_learn(), cfg.num_layers, cfg.patch_size);
    std::ofstream csv(dir / "weights.csv", std::ios::binary);
    write_weights_csv(csv, weights);
    if (!csv) throw IoError("write failed: " + (dir / "weights.csv").string());
  }
  return kExitOk;
}

// Full command-line entry point: `hebbsal detect|evaluate|inspect ...`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Bottom-up saliency detection with Hebbian (Oja) patch learners", "hebbsal"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> epsilon;
  std::optional<int> patch_size;
  std::optional<double> dissim_threshold;
  std::optional<int> count_threshold;
  bool no_absolute_dot = false;
  bool emit_diagnostics = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "RNG seed (falls back to HEBBSAL_SEED)");
    sub->add_option("--workers", workers, "images processed concurrently");
    sub->add_option("--epsilon", epsilon, "intensity layer step, 1/num_layers");
    sub->add_option("--patch-size", patch_size, "patch edge in pixels");
    sub->add_option("--dissim-threshold", dissim_threshold, "neighbour dissimilarity threshold on |w_c . w_i|");
    sub->add_option("--count-threshold", count_threshold, "per-channel dissimilar-neighbour count threshold");
    sub->add_flag("--no-absolute-dot", no_absolute_dot, "compare the signed dot product");
    sub->add_flag("--emit-diagnostics", emit_diagnostics, "write per-patch weight CSVs");
  };

  std::vector<std::string> detect_images;
  auto* detect_cmd = app.add_subcommand("detect", "detect salient patches");
  detect_cmd->add_option("images", detect_images, "PNG or PPM images")->required();
  add_common(detect_cmd);

  std::vector<std::string> eval_inputs;
  std::vector<std::string> eval_rois;
  auto* eval_cmd = app.add_subcommand("evaluate", "score saliency against integrated ROI maps");
  eval_cmd->add_option("inputs", eval_inputs, "saliency JSON files or images")->required();
  eval_cmd->add_option("--roi", eval_rois, "ROI map per input, in the same order (PNG/PGM or CSV)")->required();
  add_common(eval_cmd);

  std::string inspect_image;
  std::string inspect_stage;
  auto* inspect_cmd = app.add_subcommand("inspect", "dump an intermediate pipeline stage");
  inspect_cmd->add_option("image", inspect_image, "PNG or PPM image")->required();
  inspect_cmd->add_option("--stage", inspect_stage, "channels | layers | weights")->required();
  add_common(inspect_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    RunConfig cfg;
    bool seed_from_file = false;
    if (!config_path.empty()) {
      const auto bytes = detail::read_file_bytes(config_path);
      seed_from_file = parse_config(std::string(bytes.begin(), bytes.end()), cfg).count("seed") > 0;
    }
    if (seed) {
      cfg.seed = *seed;
    } else if (!seed_from_file) {
      if (const char* env = std::getenv("HEBBSAL_SEED"); env && *env) {
        cfg.seed = detail::parse_number<std::uint64_t>("HEBBSAL_SEED", env);
      }
    }
    if (out_dir) cfg.output_dir = *out_dir;
    if (workers) cfg.workers = *workers;
    if (epsilon) cfg.num_layers = layers_from_epsilon(*epsilon);
    if (patch_size) cfg.patch_size = *patch_size;
    if (dissim_threshold) cfg.saliency.dissim_threshold = *dissim_threshold;
    if (count_threshold) cfg.saliency.count_threshold = *count_threshold;
    if (no_absolute_dot) cfg.saliency.use_absolute_dot = false;
    if (emit_diagnostics) cfg.emit_diagnostics = true;
    cfg.validate();

    if (*detect_cmd) {
      return cmd_detect({detect_images.begin(), detect_images.end()}, cfg, err);
    }
    if (*eval_cmd) {
      return cmd_evaluate({eval_inputs.begin(), eval_inputs.end()}, {eval_rois.begin(), eval_rois.end()}, cfg, err);
    }
    return cmd_inspect(inspect_image, inspect_stage, cfg);
  } catch (const ValidationError& e) {
    err << "hebbsal: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "hebbsal: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace hebbsal
