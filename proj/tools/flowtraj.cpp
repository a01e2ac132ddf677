#include <cmath>
#include <filesystem>
#include <iostream>

#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "flowtraj/pipeline.hpp"
#include "flowtraj/serialize.hpp"

namespace fs = std::filesystem;
using namespace flowtraj;

namespace {

int cmd_run(const fs::path& config_path, const std::string& sweep, const std::optional<std::uint64_t>& seed,
            const std::optional<fs::path>& out) {
  PipelineConfig cfg = load_config(config_path);
  if (!sweep.empty()) cfg.sweep = sweep;
  if (seed) cfg.seed = *seed;
  if (out) cfg.output = *out;
  cfg.validate();

  if (cfg.sweep != "none") {
    for (const auto& e : run_sweep(cfg)) {
      std::cout << cfg.sweep << '=' << e.value << " BP=" << e.result.counts.bp << " AP=" << e.result.counts.ap
                << " AL=" << e.result.counts.al << '\n';
    }
    return 0;
  }
  const RunResult r = run_pipeline(cfg);
  std::cout << "trajectories: " << r.trajectories.size() << " (BP=" << r.counts.bp << " AP=" << r.counts.ap
            << " AL=" << r.counts.al << ")\n"
            << "output: " << cfg.output.string() << '\n';
  return 0;
}

int cmd_eval(const fs::path& extracted, const fs::path& annotated, const std::string& metric, const std::string& reg,
             double diag, double lcs_eps, const std::optional<fs::path>& csv) {
  const auto ex = polylines_from_json(read_text(extracted));
  const auto an = polylines_from_json(read_text(annotated));
  const auto e = evaluate(an, ex, parse_metric(metric), parse_regularisation(reg), diag, lcs_eps);
  nlohmann::json matches = nlohmann::json::array();
  for (std::size_t r = 0; r < e.assignment.size(); ++r) {
    const int c = e.assignment[r];
    matches.push_back({{"annotated", r}, {"extracted", c}, {"distance", c >= 0 ? nlohmann::json(e.raw.at(int(r), c)) : nlohmann::json()}});
  }
  const CurvePoint* at_default = nullptr;
  for (const auto& p : e.curve) {
    if (p.tau == e.default_tau) at_default = &p;
  }
  nlohmann::json report{{"metric", to_string(e.metric)}, {"regularisation", to_string(e.reg)},
                        {"threshold", e.default_tau}, {"matches", matches}};
  if (at_default) {
    report["fp_rate"] = at_default->fp_rate;
    report["fn_rate"] = at_default->fn_rate;
    report["accumulated_error"] = at_default->acc_error;
  }
  std::cout << report.dump(2) << '\n';
  if (csv) write_text(*csv, curve_to_csv(e.curve));
  return 0;
}

int cmd_segment(const fs::path& run_dir, const fs::path& boxes_path, std::optional<double> radius,
                std::optional<double> cos_thresh) {
  const auto meta = nlohmann::json::parse(read_text(run_dir / "run.json"));
  const int w = meta.at("width").get<int>(), h = meta.at("height").get<int>();
  const auto tracks = tracks_from_json(read_text(run_dir / "trajectories.json"));
  const auto boxes = boxes_from_json(read_text(boxes_path));
  const double r = radius.value_or(meta.value("stamp_radius", 2.0));
  const double c = cos_thresh.value_or(meta.value("cos_thresh", 0.85));
  const auto seg = segment_trajectories(tracks, w, h, boxes, r, c);
  write_pgm(run_dir / "labels.pgm", label_image(seg.labels));
  const nlohmann::json score{{"labels", seg.labels.count},
                             {"correct", seg.score.correct},
                             {"incorrect", seg.score.incorrect},
                             {"missed", seg.score.missed}};
  write_text(run_dir / "segmentation.json", score.dump(1) + "\n");
  std::cout << score.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::cfg::load_env_levels();
  CLI::App app{"Long-range trajectory extraction from dense optical flow"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the pipeline from a config file");
  fs::path config;
  std::string sweep;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  run->add_option("--config", config, "key = value config file")->required()->check(CLI::ExistingFile);
  run->add_option("--sweep", sweep, "sweep a parameter")->check(CLI::IsMember({"minibatch", "memory"}));
  run->add_option("--seed", seed, "root random seed");
  run->add_option("--out", out, "output directory");

  auto* ev = app.add_subcommand("eval", "match extracted trajectories against annotated ones");
  fs::path extracted, annotated;
  std::string metric = "dtw", reg = "median_rls";
  double diag = 0.0, width = 0.0, height = 0.0, lcs_eps = 0.05;
  std::optional<fs::path> csv;
  ev->add_option("--extracted", extracted, "trajectory JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--annotated", annotated, "annotated trajectory JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--metric", metric, "euclidean, hausdorff, dtw or lcs");
  ev->add_option("--reg", reg, "cluster_threshold, quartile_threshold, median_rls or local_scaling_rls");
  ev->add_option("--diag", diag, "coordinate normaliser (frame diagonal)");
  ev->add_option("--width", width, "frame width, used when --diag is absent");
  ev->add_option("--height", height, "frame height, used when --diag is absent");
  ev->add_option("--lcs-eps", lcs_eps, "LCS match tolerance");
  ev->add_option("--curve", csv, "write the FP / accumulated error curve here");

  auto* seg = app.add_subcommand("segment", "segment the flow derived from a run's trajectories");
  fs::path run_dir, boxes;
  std::optional<double> radius, cos_thresh;
  seg->add_option("--run", run_dir, "run output directory")->required()->check(CLI::ExistingDirectory);
  seg->add_option("--boxes", boxes, "ground-truth boxes JSON")->required()->check(CLI::ExistingFile);
  seg->add_option("--stamp-radius", radius, "mask radius around trajectory segments");
  seg->add_option("--cos-thresh", cos_thresh, "direction coherence threshold");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, sweep, seed, out);
    if (*ev) {
      if (diag <= 0.0) diag = width > 0.0 && height > 0.0 ? std::hypot(width, height) : 1.0;
      return cmd_eval(extracted, annotated, metric, reg, diag, lcs_eps, csv);
    }
    if (*seg) return cmd_segment(run_dir, boxes, radius, cos_thresh);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
