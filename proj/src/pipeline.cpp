#include "flowtraj/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "flowtraj/serialize.hpp"
#include "json.hpp"

namespace flowtraj {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::Config, "invalid value '" + value + "' for key '" + key + "'");
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(d)) bad_value(key, value);
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

long long to_integer(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return v;
}

struct Field {
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <class T>
Field int_field(T PipelineConfig::*member, const std::string& key) {
  return {[member, key](PipelineConfig& c, const std::string& v) { c.*member = static_cast<T>(to_integer(key, v)); },
          [member](const PipelineConfig& c) { return std::to_string(c.*member); }};
}

Field double_field(double PipelineConfig::*member, const std::string& key) {
  return {[member, key](PipelineConfig& c, const std::string& v) { c.*member = to_double(key, v); },
          [member](const PipelineConfig& c) { return fmt_double(c.*member); }};
}

Field link_double(double LinkParams::*member, const std::string& key) {
  return {[member, key](PipelineConfig& c, const std::string& v) { c.link.*member = to_double(key, v); },
          [member](const PipelineConfig& c) { return fmt_double(c.link.*member); }};
}

Field link_int(int LinkParams::*member, const std::string& key) {
  return {[member, key](PipelineConfig& c, const std::string& v) {
            c.link.*member = static_cast<int>(to_integer(key, v));
          },
          [member](const PipelineConfig& c) { return std::to_string(c.link.*member); }};
}

Field string_field(std::string PipelineConfig::*member) {
  return {[member](PipelineConfig& c, const std::string& v) { c.*member = v; },
          [member](const PipelineConfig& c) { return c.*member; }};
}

Field path_field(fs::path PipelineConfig::*member) {
  return {[member](PipelineConfig& c, const std::string& v) { c.*member = v; },
          [member](const PipelineConfig& c) { return (c.*member).string(); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    f["source"] = string_field(&PipelineConfig::source);
    f["flow_dir"] = path_field(&PipelineConfig::flow_dir);
    f["width"] = int_field(&PipelineConfig::width, "width");
    f["height"] = int_field(&PipelineConfig::height, "height");
    f["frames"] = int_field(&PipelineConfig::frames, "frames");
    f["lane_gap"] = double_field(&PipelineConfig::lane_gap, "lane_gap");
    f["lane_speed"] = double_field(&PipelineConfig::lane_speed, "lane_speed");
    f["uniform_u"] = double_field(&PipelineConfig::uniform_u, "uniform_u");
    f["uniform_v"] = double_field(&PipelineConfig::uniform_v, "uniform_v");
    f["vortex_omega"] = double_field(&PipelineConfig::vortex_omega, "vortex_omega");
    f["kernel"] = int_field(&PipelineConfig::kernel, "kernel");
    f["sampling_step"] = int_field(&PipelineConfig::sampling_step, "sampling_step");
    f["lo"] = double_field(&PipelineConfig::lo, "lo");
    f["hi"] = double_field(&PipelineConfig::hi, "hi");
    f["outlier"] = string_field(&PipelineConfig::outlier);
    f["cell_width"] = int_field(&PipelineConfig::cell_width, "cell_width");
    f["cell_height"] = int_field(&PipelineConfig::cell_height, "cell_height");
    f["minibatch"] = int_field(&PipelineConfig::minibatch, "minibatch");
    f["memory"] = int_field(&PipelineConfig::memory, "memory");
    f["neighborhood"] = int_field(&PipelineConfig::neighborhood, "neighborhood");
    f["t_c"] = double_field(&PipelineConfig::t_c, "t_c");
    f["representation"] = string_field(&PipelineConfig::representation);
    f["particle_stride"] = int_field(&PipelineConfig::particle_stride, "particle_stride");
    f["spline_levels"] = int_field(&PipelineConfig::spline_levels, "spline_levels");
    f["smoothing"] = double_field(&PipelineConfig::smoothing, "smoothing");
    f["d_sep"] = double_field(&PipelineConfig::d_sep, "d_sep");
    f["d_rat"] = double_field(&PipelineConfig::d_rat, "d_rat");
    f["d_thr"] = link_double(&LinkParams::d_thr, "d_thr");
    f["theta_dir"] = link_double(&LinkParams::theta_dir_deg, "theta_dir");
    f["delta_dif"] = link_double(&LinkParams::delta_dif_deg, "delta_dif");
    f["alpha_decay"] = link_double(&LinkParams::alpha_decay, "alpha_decay");
    f["alpha_mix"] = link_double(&LinkParams::alpha_mix, "alpha_mix");
    f["sigma_a"] = link_double(&LinkParams::sigma_a, "sigma_a");
    f["sigma_m"] = link_double(&LinkParams::sigma_m, "sigma_m");
    f["sigma_p"] = link_double(&LinkParams::sigma_p, "sigma_p");
    f["n_a"] = link_int(&LinkParams::n_a, "n_a");
    f["n_v"] = link_int(&LinkParams::n_v, "n_v");
    f["terminal_cost"] = link_double(&LinkParams::terminal_cost, "terminal_cost");
    f["entropy_thresh"] = link_double(&LinkParams::entropy_thresh, "entropy_thresh");
    f["stamp_radius"] = double_field(&PipelineConfig::stamp_radius, "stamp_radius");
    f["cos_thresh"] = double_field(&PipelineConfig::cos_thresh, "cos_thresh");
    f["lcs_eps"] = double_field(&PipelineConfig::lcs_eps, "lcs_eps");
    f["seed"] = {[](PipelineConfig& c, const std::string& v) {
                   const long long s = to_integer("seed", v);
                   if (s < 0) bad_value("seed", v);
                   c.seed = static_cast<std::uint64_t>(s);
                 },
                 [](const PipelineConfig& c) { return std::to_string(c.seed); }};
    f["output"] = path_field(&PipelineConfig::output);
    f["annotations"] = path_field(&PipelineConfig::annotations);
    f["boxes"] = path_field(&PipelineConfig::boxes);
    f["sweep"] = string_field(&PipelineConfig::sweep);
    f["sweep_values"] = {[](PipelineConfig& c, const std::string& v) {
                           c.sweep_values.clear();
                           std::stringstream ss(v);
                           std::string item;
                           while (std::getline(ss, item, ',')) {
                             item = trim(item);
                             if (!item.empty()) c.sweep_values.push_back(static_cast<int>(to_integer("sweep_values", item)));
                           }
                         },
                         [](const PipelineConfig& c) {
                           std::string s;
                           for (std::size_t i = 0; i < c.sweep_values.size(); ++i) {
                             s += (i ? "," : "") + std::to_string(c.sweep_values[i]);
                           }
                           return s;
                         }};
    return f;
  }();
  return table;
}

[[noreturn]] void config_error(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::Config, key + ": " + why);
}

RepresentationLevel parse_level(const std::string& s) {
  if (s == "vectors") return RepresentationLevel::Vectors;
  if (s == "groups") return RepresentationLevel::Groups;
  if (s == "representative") return RepresentationLevel::Representative;
  config_error("representation", "expected vectors, groups or representative");
}

std::optional<OutlierMethod> parse_outlier(const std::string& s) {
  if (s == "ours") return outlier::Ours{};
  if (s == "std3") return outlier::Std3{};
  if (s == "zscore") return outlier::ZScore{};
  if (s == "mzscore") return outlier::ModifiedZScore{};
  if (s == "none") return std::nullopt;
  config_error("outlier", "expected ours, std3, zscore, mzscore or none");
}

}  // namespace

void PipelineConfig::validate() const {
  static const std::set<std::string> sources{"two_lane", "zero", "uniform", "vortex", "saddle", "flo_dir"};
  if (!sources.count(source)) config_error("source", "unknown flow source '" + source + "'");
  if (source == "flo_dir" && flow_dir.empty()) config_error("flow_dir", "required when source = flo_dir");
  if (source != "flo_dir") {
    if (width < 1) config_error("width", "must be positive");
    if (height < 1) config_error("height", "must be positive");
    if (frames < 1) config_error("frames", "must be positive");
  }
  if (kernel < 1 || kernel % 2 == 0) config_error("kernel", "must be a positive odd size");
  if (sampling_step < 1) config_error("sampling_step", "must be positive");
  if (lo < 0.0) config_error("lo", "must be non-negative");
  if (hi != 0.0 && hi <= lo) config_error("hi", "must exceed lo");
  parse_outlier(outlier);
  if (cell_width < 1) config_error("cell_width", "must be positive");
  if (cell_height < 1) config_error("cell_height", "must be positive");
  if (minibatch < 1) config_error("minibatch", "must be positive");
  if (memory < 1) config_error("memory", "must be positive");
  if (neighborhood < 1 || neighborhood % 2 == 0) config_error("neighborhood", "must be a positive odd size");
  if (!(t_c > 0.0 && t_c < 1.0)) config_error("t_c", "must lie in (0, 1)");
  parse_level(representation);
  if (particle_stride < 1) config_error("particle_stride", "must be positive");
  if (spline_levels < 1) config_error("spline_levels", "must be positive");
  if (smoothing < 0.0) config_error("smoothing", "must be non-negative");
  if (d_sep <= 0.0) config_error("d_sep", "must be positive");
  if (d_rat < 1.0) config_error("d_rat", "must be at least 1");
  if (link.d_thr <= 0.0) config_error("d_thr", "must be positive");
  if (!(link.theta_dir_deg > 0.0 && link.theta_dir_deg < 180.0)) config_error("theta_dir", "must lie in (0, 180)");
  if (!(link.delta_dif_deg > 0.0 && link.delta_dif_deg < 180.0)) config_error("delta_dif", "must lie in (0, 180)");
  if (!(link.alpha_decay > 0.0 && link.alpha_decay < 1.0)) config_error("alpha_decay", "must lie in (0, 1)");
  if (!(link.alpha_mix >= 0.0 && link.alpha_mix <= 1.0)) config_error("alpha_mix", "must lie in [0, 1]");
  if (link.sigma_a <= 0.0) config_error("sigma_a", "must be positive");
  if (link.sigma_m <= 0.0) config_error("sigma_m", "must be positive");
  if (link.sigma_p <= 0.0) config_error("sigma_p", "must be positive");
  if (link.n_a < 0) config_error("n_a", "must be non-negative");
  if (link.n_v < 0) config_error("n_v", "must be non-negative");
  if (link.n_a > 0 && link.n_v > link.n_a) config_error("n_v", "must not exceed n_a");
  if (link.terminal_cost < 0.0) config_error("terminal_cost", "must be non-negative");
  if (stamp_radius <= 0.0) config_error("stamp_radius", "must be positive");
  if (!(cos_thresh >= -1.0 && cos_thresh <= 1.0)) config_error("cos_thresh", "must lie in [-1, 1]");
  if (lcs_eps < 0.0) config_error("lcs_eps", "must be non-negative");
  if (sweep != "none" && sweep != "minibatch" && sweep != "memory") {
    config_error("sweep", "expected none, minibatch or memory");
  }
  for (int v : sweep_values) {
    if (v < 1) config_error("sweep_values", "values must be positive");
  }
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": expected key = value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) throw Error(ErrorCode::Config, "unknown key '" + key + "'");
    it->second.set(c, value);
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) { return parse_config(read_text(path)); }

std::string to_text(const PipelineConfig& config) {
  std::string out;
  for (const auto& [key, f] : fields()) out += key + " = " + f.get(config) + "\n";
  return out;
}

std::vector<FlowMap> load_frames(const PipelineConfig& config) {
  std::vector<FlowMap> frames;
  if (config.source == "flo_dir") {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(config.flow_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".flo") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::EmptyInput, "no .flo files in " + config.flow_dir.string());
    for (const auto& f : files) frames.push_back(read_flo_file(f));
    for (const auto& f : frames) {
      if (f.width() != frames[0].width() || f.height() != frames[0].height()) {
        throw Error(ErrorCode::DimensionMismatch, "flow files differ in size");
      }
    }
    return frames;
  }
  const int w = config.width, h = config.height;
  FieldKind kind = field::Uniform{0.0, 0.0};
  if (config.source == "two_lane") kind = field::TwoLane{config.lane_gap, config.lane_speed};
  if (config.source == "uniform") kind = field::Uniform{config.uniform_u, config.uniform_v};
  if (config.source == "vortex") kind = field::Vortex{0.5 * (w - 1), 0.5 * (h - 1), config.vortex_omega};
  if (config.source == "saddle") kind = field::Saddle{0.5 * (w - 1), 0.5 * (h - 1)};
  const FlowMap map = synth_field(kind, w, h);
  frames.assign(static_cast<std::size_t>(config.frames), map);
  return frames;
}

namespace {

struct Manifest {
  std::string config;
  std::map<int, std::string> windows;
};

std::string manifest_config(PipelineConfig c) {
  // Resuming is allowed into a different output directory.
  c.output.clear();
  return to_text(c);
}

Manifest read_manifest(const fs::path& path) {
  Manifest m;
  if (!fs::exists(path)) return m;
  try {
    const json j = json::parse(read_text(path));
    m.config = j.at("config").get<std::string>();
    for (const auto& w : j.at("windows")) m.windows[w.at("index").get<int>()] = w.at("tracks").get<std::string>();
  } catch (const json::exception& e) {
    spdlog::warn("ignoring unreadable manifest {}: {}", path.string(), e.what());
    return {};
  }
  return m;
}

void write_manifest(const fs::path& path, const Manifest& m) {
  json windows = json::array();
  for (const auto& [index, file] : m.windows) windows.push_back({{"index", index}, {"tracks", file}});
  write_text(path, json{{"config", m.config}, {"windows", windows}}.dump(1) + "\n");
}

std::string window_name(int w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "window_%03d", w);
  return buf;
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& config, const RunOptions& options) {
  config.validate();
  const std::vector<FlowMap> frames = load_frames(config);
  const int w = frames.front().width(), h = frames.front().height();
  const int t = static_cast<int>(frames.size());
  VideoVolumeConfig volume{w, h, t, config.cell_width, config.cell_height, config.minibatch, config.memory};
  volume.validate();

  const int n_batches = (t + config.minibatch - 1) / config.minibatch;
  const int n_windows = (n_batches + config.memory - 1) / config.memory;
  const auto method = parse_outlier(config.outlier);
  const RepresentationLevel level = parse_level(config.representation);
  const double hi = config.hi > 0.0 ? config.hi : 0.5 * std::min(w, h);

  SplineFitOptions spline;
  spline.levels = config.spline_levels;
  spline.smoothing = config.smoothing;
  FieldBuildOptions field_opts;
  field_opts.spline = spline;
  field_opts.lo = config.lo;
  field_opts.hi = hi;
  SeedingOptions seeding;
  seeding.d_sep = config.d_sep;
  seeding.d_rat = config.d_rat;

  const fs::path out = config.output;
  const fs::path manifest_path = out / "manifest.json";
  if (options.write) fs::create_directories(out);
  Manifest manifest;
  const std::string cfg_text = manifest_config(config);
  if (options.write && options.resume) {
    manifest = read_manifest(manifest_path);
    if (manifest.config != cfg_text) manifest = {};
  }
  manifest.config = cfg_text;

  RunResult result;
  auto wrote = [&](const fs::path& p) { result.written.push_back(p); };
  ParticleSystem particles(w, h, config.particle_stride, config.memory);
  int next_id = 0;

  for (int win = 0; win < n_windows; ++win) {
    if (options.max_windows && win >= *options.max_windows) {
      spdlog::info("stopping after {} windows", win);
      return result;
    }
    WindowResult wr;
    wr.index = win;
    wr.first_batch = win * config.memory;
    wr.last_batch = std::min(n_batches, (win + 1) * config.memory) - 1;
    FineToCoarse window_levels;
    std::vector<FlowMap> streaks;

    for (int b = wr.first_batch; b <= wr.last_batch; ++b) {
      const int f0 = b * config.minibatch, f1 = std::min(t, f0 + config.minibatch);
      CellGrid grid = make_grid(volume);
      for (int f = f0; f < f1; ++f) {
        const FlowMap& frame = frames[static_cast<std::size_t>(f)];
        const auto points = sample_keypoints(frame, sampling::Grid{config.sampling_step});
        auto vectors = dual_threshold(build_flow_vectors(points, frame, config.kernel, f), config.lo, hi);
        if (method) {
          distribute(remove_outliers(vectors, *method).kept, grid);
        } else {
          distribute(vectors, grid);
        }
      }
      quantise_and_cluster(grid, config.t_c);
      wr.entropy = cell_entropy(grid, config.neighborhood);
      window_levels.append(fine_to_coarse(grid));
      if (options.write) {
        const fs::path p = out / ("cells_b" + std::to_string(b) + ".json");
        write_text(p, cells_to_json(grid, wr.entropy));
        wrote(p);
      }

      const FlowMap avg = average_flow(std::span(frames).subspan(static_cast<std::size_t>(f0),
                                                                   static_cast<std::size_t>(f1 - f0)));
      particles.advect(avg);
      streaks.push_back(streak_flow(particles.streaklines(), w, h, spline).map);
    }
    wr.streak = average_flow(streaks);

    const auto stored = manifest.windows.find(win);
    if (options.write && stored != manifest.windows.end() && fs::exists(out / stored->second)) {
      wr.tracks = tracks_from_json(read_text(out / stored->second));
      wr.resumed = true;
      spdlog::info("window {}: resumed {} tracks", win, wr.tracks.size());
    } else {
      const VectorField field =
          build_combined_field(streaks, level_samples(window_levels, level), w, h, field_opts);
      const auto lines = seed_and_diffuse(field, seeding);
      for (const auto& s : lines) {
        Track tr = make_track(s.points, wr.streak, win, wr.first_batch, wr.last_batch);
        tr.id = next_id + static_cast<int>(wr.tracks.size());
        wr.tracks.push_back(std::move(tr));
      }
      spdlog::info("window {}: {} valid px, {} streamlines", win, field.valid_count(), lines.size());
      if (options.write) {
        const std::string name = window_name(win);
        write_text(out / (name + "_streamlines.json"), streamlines_to_json(lines));
        write_text(out / (name + ".json"), tracks_to_json(wr.tracks));
        wrote(out / (name + "_streamlines.json"));
        wrote(out / (name + ".json"));
        manifest.windows[win] = name + ".json";
        write_manifest(manifest_path, manifest);
      }
    }
    next_id += static_cast<int>(wr.tracks.size());
    if (options.write) {
      const fs::path p = out / (window_name(win) + "_streak.flo");
      write_flo_file(p, wr.streak);
      wrote(p);
    }
    result.windows.push_back(std::move(wr));
  }

  // Raw streamlines are pruned over the whole run before linking.
  std::vector<Track> all;
  for (const auto& wr : result.windows) all.insert(all.end(), wr.tracks.begin(), wr.tracks.end());
  result.counts.bp = static_cast<int>(all.size());
  const auto kept = prune(all);
  result.counts.ap = static_cast<int>(kept.size());

  std::vector<WindowTracks> linking(result.windows.size());
  for (std::size_t i = 0; i < result.windows.size(); ++i) {
    linking[i].streak = result.windows[i].streak;
    linking[i].entropy = result.windows[i].entropy;
  }
  for (const auto& tr : kept) linking[static_cast<std::size_t>(tr.window_first)].tracks.push_back(tr);
  LinkParams link = config.link;
  link.seed = config.seed;
  result.trajectories = link_windows(linking, link, config.cell_width, config.cell_height);
  result.counts.al = static_cast<int>(result.trajectories.size());
  spdlog::info("tracks: BP {} AP {} AL {}", result.counts.bp, result.counts.ap, result.counts.al);

  if (!options.write) return result;
  write_text(out / "trajectories.json", tracks_to_json(result.trajectories));
  write_text(out / "counts.csv", counts_csv({{"run", result.counts}}));
  write_text(out / "run.json", json{{"width", w}, {"height", h}, {"frames", t}, {"windows", n_windows},
                                    {"stamp_radius", config.stamp_radius}, {"cos_thresh", config.cos_thresh}}
                                       .dump(1) + "\n");
  wrote(out / "trajectories.json");
  wrote(out / "counts.csv");
  wrote(out / "run.json");
  if (config.source == "two_lane") {
    const GroundTruth gt = two_lane_ground_truth(config);
    write_text(out / "gt_centerlines.json", polylines_to_json(gt.centerlines));
    write_text(out / "gt_boxes.json", boxes_to_json(gt.boxes));
    wrote(out / "gt_centerlines.json");
    wrote(out / "gt_boxes.json");
  }

  const double diag = std::hypot(w, h);
  const auto extracted = track_polylines(result.trajectories);
  if (!config.annotations.empty()) {
    const auto annotated = polylines_from_json(read_text(config.annotations));
    const std::string param = config.sweep == "memory" ? "memory_" + std::to_string(config.memory)
                                                        : "minibatch_" + std::to_string(config.minibatch);
    for (auto& p : emit_plots(out, param, annotated, extracted, diag, config.lcs_eps)) wrote(p);
  }
  if (!config.boxes.empty()) {
    const auto boxes = boxes_from_json(read_text(config.boxes));
    const auto seg = segment_trajectories(result.trajectories, w, h, boxes, config.stamp_radius, config.cos_thresh);
    write_pgm(out / "labels.pgm", label_image(seg.labels));
    write_text(out / "segmentation.json", json{{"labels", seg.labels.count},
                                              {"correct", seg.score.correct},
                                              {"incorrect", seg.score.incorrect},
                                              {"missed", seg.score.missed}}
                                              .dump(1) + "\n");
    wrote(out / "labels.pgm");
    wrote(out / "segmentation.json");
  }
  return result;
}

std::vector<int> default_sweep_values(const std::string& param) {
  if (param == "minibatch") return {2, 4, 6, 8, 10};
  if (param == "memory") return {3, 6, 9, 12, 15, 20};
  throw Error(ErrorCode::Config, "sweep: expected minibatch or memory");
}

std::vector<SweepEntry> run_sweep(const PipelineConfig& config, const RunOptions& options) {
  const std::string param = config.sweep;
  const auto values = config.sweep_values.empty() ? default_sweep_values(param) : config.sweep_values;
  std::vector<SweepEntry> out;
  std::vector<std::pair<std::string, Counts>> rows;
  for (int v : values) {
    PipelineConfig c = config;
    if (param == "minibatch") {
      c.minibatch = v;
      c.memory = 10;
    } else {
      c.memory = v;
      c.minibatch = 5;
    }
    c.output = config.output / (param + "_" + std::to_string(v));
    spdlog::info("sweep {} = {}", param, v);
    out.push_back({v, run_pipeline(c, options)});
    rows.emplace_back(std::to_string(v), out.back().result.counts);
  }
  if (options.write) {
    fs::create_directories(config.output);
    write_text(config.output / "counts.csv", counts_csv(rows));
  }
  return out;
}

EvaluationOutput evaluate(std::span<const Polyline> annotated, std::span<const Polyline> extracted, Metric metric,
                          Regularisation reg, double diag, double lcs_eps) {
  EvaluationOutput e{metric, reg, {}, {}, 0.0, {}};
  e.raw = normalise(distance_matrix(annotated, extracted, metric, diag, lcs_eps));
  if (e.raw.d.empty()) {
    e.assignment.assign(annotated.size(), -1);
    return e;
  }
  e.assignment = hungarian_assign(regularise(e.raw, reg));
  e.default_tau = lowest_cluster_max(e.raw.d);
  std::vector<double> taus;
  for (int i = 0; i <= 20; ++i) taus.push_back(i / 20.0);
  taus.push_back(e.default_tau);
  e.curve = fp_error_curve(e.raw, e.assignment, taus);
  return e;
}

std::vector<fs::path> emit_plots(const fs::path& dir, const std::string& param,
                                 std::span<const Polyline> annotated, std::span<const Polyline> extracted,
                                 double diag, double lcs_eps) {
  std::vector<fs::path> written;
  fs::create_directories(dir);
  for (Metric m : {Metric::Euclidean, Metric::Hausdorff, Metric::Dtw, Metric::Lcs}) {
    for (Regularisation r : {Regularisation::ClusterThreshold, Regularisation::QuartileThreshold,
                             Regularisation::MedianRls, Regularisation::LocalScalingRls}) {
      const auto e = evaluate(annotated, extracted, m, r, diag, lcs_eps);
      const fs::path p = dir / ("curve_" + param + "_" + to_string(m) + "_" + to_string(r) + ".csv");
      write_text(p, curve_to_csv(e.curve));
      written.push_back(p);
    }
  }
  return written;
}

std::string counts_csv(const std::vector<std::pair<std::string, Counts>>& rows) {
  std::string s = "param,BP,AP,AL\n";
  for (const auto& [param, c] : rows) {
    s += param + "," + std::to_string(c.bp) + "," + std::to_string(c.ap) + "," + std::to_string(c.al) + "\n";
  }
  return s;
}

GroundTruth two_lane_ground_truth(const PipelineConfig& config) {
  const int w = config.width, h = config.height;
  const auto [top_end, bottom_begin] = two_lane_band(config.lane_gap, h);
  GroundTruth gt;
  Polyline top, bottom;
  const double yt = 0.5 * (top_end - 1), yb = 0.5 * (bottom_begin + h - 1);
  for (int x = 0; x < w; ++x) {
    top.push_back({double(x), yt});
    bottom.push_back({double(w - 1 - x), yb});
  }
  gt.centerlines = {top, bottom};
  gt.boxes = {{0, 0, w, top_end}, {0, bottom_begin, w, h}};
  return gt;
}

SegmentationResult segment_trajectories(std::span<const Track> trajectories, int width, int height,
                                        std::span<const Box> boxes, double stamp_radius, double cos_thresh) {
  const auto polys = track_polylines(trajectories);
  const VectorField field = traj_to_flow(polys, width, height, stamp_radius);
  SegmentationResult r;
  r.labels = segment(field, cos_thresh);
  r.score = score_segmentation(r.labels, boxes);
  return r;
}

double normalised_dtw(std::span<const Vec2> a, std::span<const Vec2> b, double diag) {
  const int n = std::max<int>(2, static_cast<int>(std::min(a.size(), b.size())));
  const auto fa = features(resample(a, n), diag);
  const auto fb = features(resample(b, n), diag);
  return traj_distance(fa, fb, Metric::Dtw) / n;
}

}  // namespace flowtraj
