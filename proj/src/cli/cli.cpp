#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lidarflow/enhance.hpp"
#include "lidarflow/error.hpp"
#include "lidarflow/estimate.hpp"
#include "lidarflow/io.hpp"
#include "lidarflow/kitti.hpp"
#include "lidarflow/log.hpp"
#include "lidarflow/metrics.hpp"
#include "lidarflow/synthetic.hpp"
#include "lidarflow/warp.hpp"

namespace lidarflow::cli {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string command;
  fs::path data;
  fs::path out = "out";
  fs::path spec;
  fs::path gt;
  fs::path est;
  std::string variant = "MPC_IMU";
  int clouds = 5;
  int patch = 0;  // 0: per-command default
  std::string task = "denoise";
  int window = 5;
  int sr_factor = 2;
  int jobs = 1;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool out_given = false;
  bool zero_motion = false;
  std::string axis;
  std::string values;
  std::string camera = "image_02";
  bool acceleration = false;
  int first = 0;
  int last = -1;
  bool flo = false;
};

void usage_error(const std::string& message) { throw Error(ErrorCode::kInvalidArgument, message); }

std::string fmt(double v, int precision = 6) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string opt_fmt(const std::optional<double>& v, int precision = 6) { return v ? fmt(*v, precision) : ""; }

std::string frame_name(std::size_t k, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%010zu%s", k, ext);
  return buf;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The exception of the
// lowest failing index is rethrown so failures do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::clamp(jobs, 1, 256));
  if (threads == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<int> parse_values(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      usage_error("--values: '" + item + "' is not an integer");
    }
  }
  return out;
}

// Dataset access ----------------------------------------------------------------

struct Dataset {
  KittiSequence sequence;
  std::size_t first = 0;
  std::size_t last = 0;
  SequenceContext context;
};

Dataset open_dataset(const RunConfig& cfg) {
  if (cfg.data.empty()) usage_error("--data is required");
  KittiOptions options;
  options.camera = cfg.camera;
  options.use_acceleration = cfg.acceleration;
  Dataset ds{KittiSequence(cfg.data, options), 0, 0, {}};
  const std::size_t n = ds.sequence.size();
  if (cfg.first < 0 || static_cast<std::size_t>(cfg.first) >= n) usage_error("--first is outside the sequence");
  ds.first = static_cast<std::size_t>(cfg.first);
  ds.last = cfg.last < 0 ? n - 1 : std::min(static_cast<std::size_t>(cfg.last), n - 1);
  if (ds.last < ds.first) usage_error("--last precedes --first");
  ds.context = ds.sequence.context(ds.first, ds.last);
  return ds;
}

EstimateOptions estimate_options(const RunConfig& cfg, int patch) {
  EstimateOptions o;
  o.variant = parse_variant(cfg.variant);
  o.merge.num_clouds = cfg.clouds;
  o.patch.patch = patch;
  o.merge.validate();
  o.patch.validate();
  return o;
}

int default_patch(const RunConfig& cfg) { return cfg.patch > 0 ? cfg.patch : PatchSpec{}.patch; }

EnhanceTask enhance_task(const RunConfig& cfg) {
  EnhanceTask t;
  t.kind = parse_task(cfg.task);
  t.window = cfg.window;
  t.sr_factor = cfg.sr_factor;
  t.validate();
  return t;
}

// estimate ------------------------------------------------------------------------

int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  Dataset ds = open_dataset(cfg);
  const MotionEstimator estimator(ds.context, estimate_options(cfg, default_patch(cfg)));
  const std::size_t pairs = ds.context.frame_count() - 1;
  std::vector<double> density(pairs), runtime_us(pairs);
  parallel_for(pairs, cfg.jobs, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    const MotionField field = estimator.estimate(i, i + 1);
    const auto t1 = std::chrono::steady_clock::now();
    runtime_us[i] = std::chrono::duration<double, std::micro>(t1 - t0).count();
    density[i] = field.density();
    write_lfmf(field, cfg.out / "fields" / frame_name(ds.first + i, ".lfmf"));
    if (cfg.flo) write_flo(field, cfg.out / "fields" / frame_name(ds.first + i, ".flo"));
  });
  std::string csv = "frame,density,runtime_us\n";
  double total_us = 0.0, total_density = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    csv += std::to_string(ds.first + i) + "," + fmt(density[i]) + "," + fmt(runtime_us[i], 1) + "\n";
    total_us += runtime_us[i];
    total_density += density[i];
  }
  write_file_atomic(cfg.out / "estimate.csv", csv);
  if (pairs > 0) {
    out << "estimated " << pairs << " fields (" << variant_name(estimator.options().variant)
        << "): mean density " << fmt(total_density / pairs, 4) << ", mean kernel time "
        << fmt(total_us / pairs / 1000.0, 3) << " ms\n";
  } else {
    out << "no frame pairs in range\n";
  }
  return 0;
}

// warp -----------------------------------------------------------------------------

int cmd_warp(const RunConfig& cfg, std::ostream& out) {
  Dataset ds = open_dataset(cfg);
  const int patch = default_patch(cfg);
  EstimateOptions single = estimate_options(cfg, 1);
  single.variant = Variant::kSpcImu;
  EstimateOptions merged = estimate_options(cfg, 1);
  merged.variant = Variant::kMpcImu;
  EstimateOptions patched = estimate_options(cfg, patch);
  patched.variant = Variant::kMpcImu;
  const MotionEstimator est_single(ds.context, single), est_merged(ds.context, merged),
      est_patched(ds.context, patched);

  const std::size_t pairs = ds.context.frame_count() - 1;
  std::vector<std::array<double, 6>> rows(pairs);
  parallel_for(pairs, cfg.jobs, [&](std::size_t i) {
    const Image src = ds.sequence.image(ds.first + i);
    const CameraIntrinsics& k = ds.context.calib.intrinsics;
    if (src.width != k.width || src.height != k.height) {
      throw Error(ErrorCode::kDimensionMismatch, "frame size differs from calibration");
    }
    std::vector<Image> panels;
    for (int v = 0; v < 3; ++v) {
      const MotionEstimator& e = v == 0 ? est_single : (v == 1 ? est_merged : est_patched);
      const MotionField field = cfg.zero_motion ? MotionField::zero(k.width, k.height) : e.estimate(i, i + 1);
      const WarpedImage w = forward_warp(src, field);
      rows[i][2 * v] = field.density();
      rows[i][2 * v + 1] = w.coverage_ratio();
      panels.push_back(w.image);
    }
    write_image(hconcat(panels), cfg.out / "warp" / frame_name(ds.first + i, ".png"));
  });
  std::string csv =
      "frame,single_density,single_coverage,merged_density,merged_coverage,patched_density,patched_coverage\n";
  for (std::size_t i = 0; i < pairs; ++i) {
    csv += std::to_string(ds.first + i);
    for (double v : rows[i]) csv += "," + fmt(v);
    csv += "\n";
  }
  write_file_atomic(cfg.out / "warp.csv", csv);
  out << "warped " << pairs << " frames (single / " << cfg.clouds << " merged / merged + " << patch << "x" << patch
      << " patch)\n";
  return 0;
}

// enhance / sweep ------------------------------------------------------------------

struct FrameResult {
  std::size_t frame = 0;
  QualityReport quality;
  QualityReport input;
  Image image;
};

struct EnhanceRun {
  std::vector<FrameResult> frames;
  QualityReport mean;
  QualityReport input_mean;
};

std::optional<double> mean_of(const std::vector<FrameResult>& rows, std::optional<double> QualityReport::*field,
                              bool input) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const FrameResult& r : rows) {
    const auto& v = (input ? r.input : r.quality).*field;
    if (!v) return std::nullopt;
    sum += *v;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

fs::path ground_truth_dir(const RunConfig& cfg) {
  if (!cfg.gt.empty()) {
    if (!fs::is_directory(cfg.gt)) throw Error(ErrorCode::kMissingFile, "ground-truth directory not found: " + cfg.gt.string());
    return cfg.gt;
  }
  const fs::path guess = cfg.data / "gt" / "clean";
  return fs::is_directory(guess) ? guess : fs::path();
}

EnhanceRun run_enhance(const RunConfig& cfg, const Dataset& ds, const EnhanceTask& task, EstimateOptions options,
                       bool keep_images) {
  const MotionEstimator estimator(ds.context, options);
  const std::size_t n = ds.context.frame_count();
  const auto half = static_cast<std::size_t>(task.window / 2);
  if (n < static_cast<std::size_t>(task.window)) {
    throw Error(ErrorCode::kWindowTooSmall, "window of " + std::to_string(task.window) + " frames needs at least " +
                                                std::to_string(task.window) + " frames, range has " +
                                                std::to_string(n));
  }
  const fs::path gt_dir = ground_truth_dir(cfg);
  const std::size_t centers = n - 2 * half;
  EnhanceRun run;
  run.frames.resize(centers);
  parallel_for(centers, cfg.jobs, [&](std::size_t ci) {
    const std::size_t c = ci + half;
    std::vector<Image> frames;
    std::vector<MotionField> fields;
    const CameraIntrinsics& k = ds.context.calib.intrinsics;
    double density_sum = 0.0;
    for (std::size_t j = c - half; j <= c + half; ++j) {
      frames.push_back(ds.sequence.image(ds.first + j));
      if (j == c || cfg.zero_motion) {
        fields.push_back(MotionField::zero(k.width, k.height));
      } else {
        fields.push_back(estimator.estimate(j, c));
      }
      if (j != c) density_sum += fields.back().density();
    }
    FrameResult& r = run.frames[ci];
    r.frame = ds.first + c;
    r.image = enhance(task, frames, fields, half);
    if (task.window > 1) r.quality.density = density_sum / static_cast<double>(task.window - 1);
    if (!gt_dir.empty()) {
      const fs::path gt_path = gt_dir / ds.sequence.manifest().frames[ds.first + c].image.filename();
      const Image reference = read_image(gt_path);
      if (!reference.same_shape(r.image)) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "reference " + gt_path.string() + " is " + std::to_string(reference.width) + "x" +
                        std::to_string(reference.height) + " but the " + std::string(task_name(task.kind)) + " output is " +
                        std::to_string(r.image.width) + "x" + std::to_string(r.image.height));
      }
      const QualityReport q = image_quality(r.image, reference);
      r.quality.psnr_db = q.psnr_db;
      r.quality.ssim = q.ssim;
      const Image baseline =
          task.kind == TaskKind::kSuperres ? upsample_bicubic(frames[half], task.sr_factor) : frames[half];
      r.input = image_quality(baseline, reference);
    }
    if (!keep_images) r.image = Image();
  });
  run.mean.psnr_db = mean_of(run.frames, &QualityReport::psnr_db, false);
  run.mean.ssim = mean_of(run.frames, &QualityReport::ssim, false);
  run.mean.density = mean_of(run.frames, &QualityReport::density, false);
  run.input_mean.psnr_db = mean_of(run.frames, &QualityReport::psnr_db, true);
  run.input_mean.ssim = mean_of(run.frames, &QualityReport::ssim, true);
  return run;
}

int cmd_enhance(const RunConfig& cfg, std::ostream& out) {
  const EnhanceTask task = enhance_task(cfg);
  const int patch = cfg.patch > 0 ? cfg.patch : task.default_patch();
  const EstimateOptions options = estimate_options(cfg, patch);
  Dataset ds = open_dataset(cfg);
  const EnhanceRun run = run_enhance(cfg, ds, task, options, true);

  std::string csv = "frame," + csv_header() + ",input_psnr_db,input_ssim\n";
  nlohmann::ordered_json frames = nlohmann::ordered_json::array();
  for (const FrameResult& r : run.frames) {
    write_image(r.image, cfg.out / "enhanced" / ds.sequence.manifest().frames[r.frame].image.filename());
    csv += std::to_string(r.frame) + "," + to_csv_row(r.quality) + "," + opt_fmt(r.input.psnr_db) + "," +
           opt_fmt(r.input.ssim) + "\n";
    nlohmann::ordered_json row;
    row["frame"] = r.frame;
    row["result"] = nlohmann::ordered_json::parse(to_json(r.quality));
    row["input"] = nlohmann::ordered_json::parse(to_json(r.input));
    frames.push_back(row);
  }
  write_file_atomic(cfg.out / "enhance.csv", csv);
  nlohmann::ordered_json summary;
  summary["task"] = task_name(task.kind);
  summary["variant"] = variant_name(options.variant);
  summary["zero_motion"] = cfg.zero_motion;
  summary["window"] = task.window;
  summary["patch"] = patch;
  summary["clouds"] = cfg.clouds;
  summary["mean"] = nlohmann::ordered_json::parse(to_json(run.mean));
  summary["input_mean"] = nlohmann::ordered_json::parse(to_json(run.input_mean));
  summary["frames"] = std::move(frames);
  write_file_atomic(cfg.out / "enhance.json", summary.dump(2) + "\n");

  out << task_name(task.kind) << ": " << run.frames.size() << " frames";
  if (run.mean.psnr_db) {
    out << ", PSNR " << fmt(*run.mean.psnr_db, 2) << " dB (input " << opt_fmt(run.input_mean.psnr_db, 2)
        << " dB), SSIM " << fmt(*run.mean.ssim, 4) << " (input " << opt_fmt(run.input_mean.ssim, 4) << ")";
  } else {
    out << ", no ground truth found";
  }
  out << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  std::string axis = cfg.axis;
  std::transform(axis.begin(), axis.end(), axis.begin(), [](unsigned char c) { return std::toupper(c); });
  if (axis != "PATCH" && axis != "CLOUDS") usage_error("--axis must be PATCH or CLOUDS");
  const std::vector<int> values = parse_values(cfg.values);
  if (values.empty()) usage_error("--values must list at least one value");
  const EnhanceTask task = enhance_task(cfg);
  for (int v : values) {
    if (v < 1 || v % 2 == 0) usage_error("--values entries must be odd and >= 1, got " + std::to_string(v));
  }
  Dataset ds = open_dataset(cfg);

  std::string csv = "parameter,psnr_db,ssim,density\n";
  for (int v : values) {
    RunConfig c = cfg;
    if (axis == "PATCH") {
      c.patch = v;
    } else {
      c.clouds = v;
    }
    const int patch = c.patch > 0 ? c.patch : task.default_patch();
    const EnhanceRun run = run_enhance(c, ds, task, estimate_options(c, patch), false);
    csv += std::to_string(v) + "," + opt_fmt(run.mean.psnr_db) + "," + opt_fmt(run.mean.ssim) + "," +
           opt_fmt(run.mean.density) + "\n";
  }
  write_file_atomic(cfg.out / "sweep.csv", csv);
  out << "sweep over " << axis << " (" << values.size() << " values) written to "
      << (cfg.out / "sweep.csv").string() << "\n";
  return 0;
}

// synth / eval ---------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  SyntheticSceneSpec spec;
  if (!cfg.spec.empty()) spec = parse_synthetic_spec(read_text_file(cfg.spec));
  if (cfg.seed_given) spec.seed = cfg.seed;
  spec.render_images = true;
  const SyntheticSequence seq = generate_synthetic(spec);
  write_synthetic_kitti(seq, cfg.out);
  out << "wrote " << spec.frames << " synthetic frames to " << cfg.out.string() << "\n";
  return 0;
}

QualityReport eval_pair(const fs::path& est, const fs::path& gt) {
  const std::string ext = est.extension().string();
  if (ext == ".png") return image_quality(read_image(est), read_image(gt));
  auto load = [](const fs::path& p) {
    return p.extension() == ".flo" ? read_flo(p) : read_lfmf(p);
  };
  if (ext == ".lfmf" || ext == ".flo") return endpoint_error(load(est), load(gt));
  usage_error("unsupported file type: " + est.string());
  return {};
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  if (cfg.est.empty() || cfg.gt.empty()) usage_error("eval needs --est and --gt");
  if (!fs::exists(cfg.est)) throw Error(ErrorCode::kMissingFile, "not found: " + cfg.est.string());
  if (!fs::exists(cfg.gt)) throw Error(ErrorCode::kMissingFile, "not found: " + cfg.gt.string());
  std::vector<std::pair<std::string, QualityReport>> rows;
  if (fs::is_directory(cfg.est)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(cfg.est)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".png" || ext == ".lfmf" || ext == ".flo")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      const fs::path ref = cfg.gt / f.filename();
      if (!fs::exists(ref)) throw Error(ErrorCode::kMissingFile, "no ground truth for " + f.string() + " at " + ref.string());
      rows.emplace_back(f.filename().string(), eval_pair(f, ref));
    }
  } else {
    rows.emplace_back(cfg.est.filename().string(), eval_pair(cfg.est, cfg.gt));
  }
  std::string csv = "name," + csv_header() + "\n";
  std::vector<QualityReport> reports;
  for (const auto& [name, q] : rows) {
    csv += name + "," + to_csv_row(q) + "\n";
    reports.push_back(q);
  }
  const std::string json = to_json(reports);
  if (cfg.out_given) {
    write_file_atomic(cfg.out / "eval.csv", csv);
    write_file_atomic(cfg.out / "eval.json", json);
  }
  out << json;
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"LiDAR-guided motion fields: estimation, warping, enhancement and evaluation", "lidarflow"};
  app.set_config("--config", "", "key = value file; command-line flags take precedence");
  app.require_subcommand(1, 1);
  app.add_option("--data", cfg.data, "Dataset root in KITTI raw layout");
  app.add_option("--out", cfg.out, "Output directory")->capture_default_str();
  app.add_option("--variant", cfg.variant, "SPC_IMU, SPC_R or MPC_IMU")->capture_default_str();
  app.add_option("--clouds", cfg.clouds, "Merged point clouds (odd)")->capture_default_str();
  app.add_option("--patch", cfg.patch, "Patch side (odd); default 3, or the task default for enhance/sweep");
  app.add_option("--task", cfg.task, "denoise, superres or deblur")->capture_default_str();
  app.add_option("--window", cfg.window, "Frames per enhancement window (odd)")->capture_default_str();
  app.add_option("--sr-factor", cfg.sr_factor, "Super-resolution factor")->capture_default_str();
  app.add_option("--jobs", cfg.jobs, "Worker threads")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Seed override for synth");
  app.add_flag("--zero-motion", cfg.zero_motion, "Use zero motion instead of estimated fields");
  app.add_option("--axis", cfg.axis, "Sweep axis: PATCH or CLOUDS");
  app.add_option("--values", cfg.values, "Comma-separated sweep values");
  app.add_option("--spec", cfg.spec, "Synthetic scene spec (JSON)");
  app.add_option("--gt", cfg.gt, "Ground truth (file or directory)");
  app.add_option("--est", cfg.est, "Estimate to evaluate (file or directory)");
  app.add_option("--camera", cfg.camera, "Camera directory, e.g. image_02 or image_03")->capture_default_str();
  app.add_flag("--acceleration", cfg.acceleration, "Integrate OXTS accelerations instead of velocities");
  app.add_option("--first", cfg.first, "First frame index")->capture_default_str();
  app.add_option("--last", cfg.last, "Last frame index (-1: end of sequence)")->capture_default_str();
  app.add_flag("--flo", cfg.flo, "Also write .flo files (estimate)");

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"estimate", "Motion field per consecutive frame pair, plus density/runtime CSV"},
      {"warp", "Forward-warped frames for single, merged and merged+patched fields"},
      {"enhance", "Motion-compensated denoise / superres / deblur with quality report"},
      {"sweep", "Quality and density across patch sizes or merged cloud counts"},
      {"synth", "Write a synthetic sequence with ground truth in KITTI layout"},
      {"eval", "PSNR/SSIM for images or EPE for motion fields"}};
  for (const auto& [name, help] : commands) {
    app.add_subcommand(name, help)->fallthrough()->callback([&cfg, n = name] { cfg.command = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }
  cfg.seed_given = app.count("--seed") > 0;
  cfg.out_given = app.count("--out") > 0;

  // Window-shrink warnings repeat for every field of a window; print each once.
  std::set<std::string, std::less<>> seen;
  WarningSink previous = set_warning_sink([&err, &seen](std::string_view msg) {
    if (seen.insert(std::string(msg)).second) err << "warning: " << msg << "\n";
  });
  struct Restore {
    WarningSink sink;
    ~Restore() { set_warning_sink(std::move(sink)); }
  } restore{std::move(previous)};

  try {
    if (cfg.command == "estimate") return cmd_estimate(cfg, out);
    if (cfg.command == "warp") return cmd_warp(cfg, out);
    if (cfg.command == "enhance") return cmd_enhance(cfg, out);
    if (cfg.command == "sweep") return cmd_sweep(cfg, out);
    if (cfg.command == "synth") return cmd_synth(cfg, out);
    if (cfg.command == "eval") return cmd_eval(cfg, out);
    err << "error: unknown command\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lidarflow::cli
