#pragma once

#include <charconv>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "eval.hpp"
#include "lateral.hpp"

namespace hebbsal {

using json = nlohmann::json;

// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf, end);
}

inline constexpr const char* kSaliencyFormat = "hebbsal.saliency/1";

namespace detail {

template <typename T>
json grid_to_json(const Grid<T>& g) {
  json arr = json::array();
  for (const T& v : g) arr.push_back(static_cast<long long>(v));
  return arr;
}

template <typename T>
Grid<T> grid_from_json(const json& arr, int rows, int cols, const char* field) {
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(rows) * cols)
    throw FormatError(std::string("saliency JSON: field '") + field + "' has wrong length");
  Grid<T> g(rows, cols);
  for (std::size_t i = 0; i < arr.size(); ++i) g[i] = static_cast<T>(arr[i].get<long long>());
  return g;
}

}  // namespace detail

inline json saliency_to_json(const SaliencyGrid& g, const std::string& image = {}) {
  json j;
  j["format"] = kSaliencyFormat;
  j["image"] = image;
  j["patch_size"] = g.patch_size;
  j["image_width"] = g.image_width;
  j["image_height"] = g.image_height;
  j["source_width"] = g.source_width;
  j["source_height"] = g.source_height;
  j["width_patches"] = g.cols();
  j["height_patches"] = g.rows();
  j["expected_value"] = g.expected_value;
  j["incidence_total"] = g.incidence_total;
  json counts, masks;
  for (Channel c : kChannels) {
    counts[channel_name(c)] = detail::grid_to_json(g.per_channel_counts[static_cast<int>(c)]);
    masks[channel_name(c)] = detail::grid_to_json(g.channel_masks[static_cast<int>(c)]);
  }
  j["per_channel_counts"] = std::move(counts);
  j["channel_masks"] = std::move(masks);
  j["frequencies"] = detail::grid_to_json(g.frequencies);
  j["salient"] = detail::grid_to_json(g.salient);
  return j;
}

inline SaliencyGrid saliency_from_json(const json& j) {
  try {
    if (j.value("format", "") != kSaliencyFormat) throw FormatError("not a saliency JSON document");
    SaliencyGrid g;
    const int rows = j.at("height_patches").get<int>();
    const int cols = j.at("width_patches").get<int>();
    if (rows <= 0 || cols <= 0) throw FormatError("saliency JSON: empty grid");
    g.patch_size = j.at("patch_size").get<int>();
    g.image_width = j.at("image_width").get<int>();
    g.image_height = j.at("image_height").get<int>();
    g.source_width = j.value("source_width", g.image_width);
    g.source_height = j.value("source_height", g.image_height);
    if (g.image_width != cols * g.patch_size || g.image_height != rows * g.patch_size)
      throw FormatError("saliency JSON: image size disagrees with the patch grid");
    g.expected_value = j.at("expected_value").get<double>();
    g.incidence_total = j.value("incidence_total", 0LL);
    for (Channel c : kChannels) {
      const int i = static_cast<int>(c);
      g.per_channel_counts[i] = detail::grid_from_json<int>(j.at("per_channel_counts").at(channel_name(c)), rows, cols,
                                                            "per_channel_counts");
      g.channel_masks[i] =
          detail::grid_from_json<std::uint8_t>(j.at("channel_masks").at(channel_name(c)), rows, cols, "channel_masks");
    }
    g.frequencies = detail::grid_from_json<int>(j.at("frequencies"), rows, cols, "frequencies");
    g.salient = detail::grid_from_json<std::uint8_t>(j.at("salient"), rows, cols, "salient");
    return g;
  } catch (const json::exception& e) {
    throw FormatError(std::string("saliency JSON: ") + e.what());
  }
}

inline void write_weights_csv(std::ostream& out, const WeightGrids& weights) {
  out << "channel,layer,row,col,w1,w2,status\n";
  for (Channel ch : kChannels) {
    for (const auto& layer : weights[static_cast<int>(ch)]) {
      for (int r = 0; r < layer.cells.rows(); ++r) {
        for (int c = 0; c < layer.cells.cols(); ++c) {
          const auto& cell = layer.cells(r, c);
          out << channel_name(ch) << ',' << layer.layer_index << ',' << r << ',' << c << ',';
          if (cell.active()) out << format_double(cell.w.x) << ',' << format_double(cell.w.y);
          else out << ',';
          out << ',' << status_name(cell.status) << '\n';
        }
      }
    }
  }
}

inline std::string format_metric(const Metric& m) { return m ? format_double(*m) : "NA"; }

inline void write_eval_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "image,recall,precision,weighted_recall,weighted_precision\n";
  for (const auto& r : reports) {
    out << r.image << ',' << format_metric(r.recall) << ',' << format_metric(r.precision) << ','
        << format_metric(r.weighted_recall) << ',' << format_metric(r.weighted_precision) << '\n';
  }
  const auto avg = average(reports);
  out << "Average," << format_metric(avg.recall) << ',' << format_metric(avg.precision) << ','
      << format_metric(avg.weighted_recall) << ',' << format_metric(avg.weighted_precision) << '\n';
}

inline json metric_json(const Metric& m) { return m ? json(*m) : json(nullptr); }

inline json eval_to_json(const std::vector<EvalReport>& reports) {
  json j;
  j["images"] = json::array();
  for (const auto& r : reports) {
    json e;
    e["image"] = r.image;
    e["tp"] = r.classes.tp;
    e["fp"] = r.classes.fp;
    e["fn"] = r.classes.fn;
    e["recall"] = metric_json(r.recall);
    e["precision"] = metric_json(r.precision);
    e["weighted_recall"] = metric_json(r.weighted_recall);
    e["weighted_precision"] = metric_json(r.weighted_precision);
    e["literal_tp_fp_mass"] = r.literal_tp_fp_mass;
    j["images"].push_back(std::move(e));
  }
  const auto avg = average(reports);
  j["average"] = {{"recall", metric_json(avg.recall)},
                  {"precision", metric_json(avg.precision)},
                  {"weighted_recall", metric_json(avg.weighted_recall)},
                  {"weighted_precision", metric_json(avg.weighted_precision)}};
  return j;
}

}  // namespace hebbsal
