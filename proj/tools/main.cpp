#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "nuclick/checkpoint.hpp"
#include "nuclick/http_service.hpp"
#include "nuclick/metrics.hpp"
#include "nuclick/pipeline.hpp"
#include "nuclick/png_io.hpp"
#include "nuclick/synth.hpp"
#include "nuclick/trainer.hpp"

using namespace nuclick;

namespace {

service::HttpService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

std::vector<GuideInput> read_guides(const std::filesystem::path& path) {
  const auto j = read_json(path);
  const auto& list = j.is_object() && j.contains("guides") ? j["guides"] : j;
  if (!list.is_array()) throw InvalidInput("guides file must hold an array of guides");
  std::vector<GuideInput> out;
  for (const auto& g : list) out.push_back(pipeline::guide_from_json(g));
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive click/squiggle segmentation for microscopy images"};
  app.require_subcommand(1);

  auto* serve = app.add_subcommand("serve", "Run the HTTP annotation service");
  std::string models_dir, data_dir, host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--models", models_dir, "Directory of .nuck checkpoints")->required();
  serve->add_option("--port", port, "TCP port (0 = any free port)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--data", data_dir, "Directory for session logs (default: in memory)");

  auto* segment = app.add_subcommand("segment", "Segment objects in one image from a guides file");
  std::string image_path, guides_path, checkpoint_path, out_path, rle_path;
  segment->add_option("--image", image_path, "RGB PNG")->required();
  segment->add_option("--guides", guides_path, "JSON array of {kind, points}")->required();
  segment->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
  segment->add_option("--out", out_path, "16-bit label map PNG")->required();
  segment->add_option("--rle", rle_path, "Also write per-object RLE JSON");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string synth_out, kind = "nucleus", synth_config;
  int count = 100;
  synth::SynthConfig sc;
  std::vector<int> canvas;
  std::vector<int> objects;
  std::vector<double> sizes;
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--count", count, "Number of images");
  synth_cmd->add_option("--config", synth_config, "JSON generator config (flags override it)");
  synth_cmd->add_option("--kind", kind, "nucleus | cell | gland");
  synth_cmd->add_option("--seed", sc.seed, "Seed of image 0 (image i uses seed + i)");
  synth_cmd->add_option("--canvas", canvas, "Width height")->expected(2);
  synth_cmd->add_option("--objects", objects, "Min max object count")->expected(2);
  synth_cmd->add_option("--size", sizes, "Min max object area in pixels")->expected(2);
  synth_cmd->add_option("--touching", sc.touching_prob, "Probability an object touches another");
  synth_cmd->add_option("--noise", sc.noise, "Texture noise level");
  synth_cmd->add_option("--lumen-in-label", sc.lumen_in_label_prob, "Glands: probability the lumen is labelled");

  auto* train = app.add_subcommand("train", "Train a model from a TOML config");
  std::string train_config;
  train->add_option("--config", train_config, "TOML file")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a labelled dataset");
  std::string eval_data, guide_mode = "gt-centroid", eval_json;
  std::uint64_t eval_seed = 7;
  eval->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--guide", guide_mode, "gt-interior | gt-centroid | jitter:<sigma>");
  eval->add_option("--seed", eval_seed, "Seed for sampled guides");
  eval->add_option("--json", eval_json, "Write the report as JSON");

  auto* metrics_cmd = app.add_subcommand("metrics", "Score a predicted label map against ground truth");
  std::string gt_path, pred_path;
  bool as_json = false;
  metrics_cmd->add_option("--gt", gt_path, "Ground-truth label PNG")->required();
  metrics_cmd->add_option("--pred", pred_path, "Predicted label PNG")->required();
  metrics_cmd->add_flag("--json", as_json, "Print JSON instead of a table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      service::SessionStore store(service::ModelRegistry::scan(models_dir), data_dir);
      service::HttpService http(store);
      const int bound = http.bind(host, port);
      if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
      g_service = &http;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on " << host << ":" << bound << std::endl;
      http.serve();
      g_service = nullptr;
    } else if (*segment) {
      const auto params = checkpoint::load(checkpoint_path);
      const auto image = png::read_rgb(image_path);
      const auto labels = pipeline::segment_sequence(params, image, read_guides(guides_path));
      png::write_labels(out_path, labels);
      if (!rle_path.empty()) {
        const nlohmann::json j{{"width", labels.width()}, {"height", labels.height()}, {"objects", postproc::label_map_rle(labels)}};
        write_text(rle_path, j.dump() + "\n");
      }
    } else if (*synth_cmd) {
      synth::SynthConfig config = synth_config.empty() ? synth::SynthConfig{} : synth::synth_config_from_json(read_json(synth_config));
      if (!synth_config.empty() && synth_cmd->count("--seed") == 0) sc.seed = config.seed;
      config.seed = sc.seed;
      if (synth_cmd->count("--kind")) config.kind = synth::parse_object_kind(kind);
      if (canvas.size() == 2) config.canvas = {canvas[0], canvas[1]};
      if (objects.size() == 2) {
        config.min_objects = objects[0];
        config.max_objects = objects[1];
      }
      if (sizes.size() == 2) {
        config.min_size = sizes[0];
        config.max_size = sizes[1];
      }
      if (synth_cmd->count("--touching")) config.touching_prob = sc.touching_prob;
      if (synth_cmd->count("--noise")) config.noise = sc.noise;
      if (synth_cmd->count("--lumen-in-label")) config.lumen_in_label_prob = sc.lumen_in_label_prob;
      synth::write_dataset(synth_out, config, count);
    } else if (*train) {
      const auto config = trainer::load_train_config(train_config);
      trainer::train(config, [](int epoch, double loss) { std::cout << "epoch " << epoch << " loss " << loss << std::endl; });
    } else if (*eval) {
      const auto params = checkpoint::load(checkpoint_path);
      const auto data = synth::load_dataset(eval_data);
      const auto result = trainer::evaluate(params, data, trainer::parse_guide_mode(guide_mode), eval_seed);
      std::cout << metrics::to_table(result.mean);
      if (!eval_json.empty()) write_text(eval_json, metrics::to_json(result.mean).dump(2) + "\n");
    } else if (*metrics_cmd) {
      const auto report = metrics::evaluate(png::read_labels(gt_path), png::read_labels(pred_path));
      std::cout << (as_json ? metrics::to_json(report).dump(2) + "\n" : metrics::to_table(report));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
