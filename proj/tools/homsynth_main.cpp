// Command-line front end: dataset generation, endoscope boundary handling,
// the classical per-pair estimator, and the evaluation harness.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "homsynth/endoscopy.hpp"
#include "homsynth/pipeline.hpp"

namespace {

int run_generate(const std::string& config_path, const std::string& out_dir,
                 std::size_t num, bool seed_set, std::uint64_t seed,
                 int threads) {
  homsynth::PipelineSetup setup = homsynth::load_pipeline_setup(config_path);
  if (seed_set) setup.config.master_seed = seed;
  homsynth::GenerationSummary summary = homsynth::generate_dataset(
      setup.dataset, setup.config, num, out_dir, threads);
  std::printf("wrote %zu sample(s), skipped %zu -> %s\n", summary.written,
              summary.skipped, summary.manifest_path.c_str());
  return summary.written == summary.requested ? 0 : 1;
}

int run_boundary(const std::string& in_path, bool as_json,
                 const std::string& crop_out, int samples, int threshold,
                 int height, int width) {
  homsynth::ImageBuffer img = homsynth::load_image(in_path);
  homsynth::BoundaryParams params;
  params.threshold = static_cast<std::uint8_t>(threshold);
  homsynth::Circle circle = homsynth::detect_boundary_circle(
      homsynth::to_grayscale(img), samples, params);
  if (as_json) {
    nlohmann::json j{{"center", {circle.center.x(), circle.center.y()}},
                     {"radius", circle.radius}};
    std::printf("%s\n", j.dump().c_str());
  } else {
    std::printf("center %.6f %.6f radius %.6f\n", circle.center.x(),
                circle.center.y(), circle.radius);
  }
  if (!crop_out.empty()) {
    homsynth::ImageBuffer cropped =
        homsynth::circle_crop(img, circle, height, width);
    homsynth::write_pnm(cropped, crop_out);
    std::fprintf(stderr, "cropped view -> %s\n", crop_out.c_str());
  }
  return 0;
}

int run_estimate(const std::string& frames_path, const std::string& out_path,
                 const homsynth::EstimateOptions& options) {
  std::vector<std::string> frames = homsynth::read_frame_list(frames_path);
  std::vector<homsynth::PredictionRecord> records =
      homsynth::estimate_consecutive(frames, options);
  homsynth::write_predictions_jsonl(records, out_path);
  std::size_t clean = 0;
  for (const homsynth::PredictionRecord& r : records) {
    if (r.status.empty()) ++clean;
  }
  std::printf("estimated %zu pair(s), %zu without consensus -> %s\n",
              records.size(), records.size() - clean, out_path.c_str());
  return 0;
}

int run_evaluate(const std::string& pred_path, const std::string& gt_path,
                 const std::string& landmarks_path, int frame_height,
                 int frame_width, const std::string& out_path,
                 const std::string& csv_path,
                 const std::vector<double>& percentiles) {
  std::vector<homsynth::PredictionRecord> predictions =
      homsynth::read_predictions_jsonl(pred_path);
  std::vector<homsynth::PredictionRecord> ground_truth;
  if (!gt_path.empty()) {
    ground_truth = homsynth::read_predictions_jsonl(gt_path);
  } else {
    ground_truth = homsynth::landmark_gt_records(
        homsynth::read_landmark_csv(landmarks_path), frame_height,
        frame_width);
  }
  auto pairs = homsynth::paired_mpds(predictions, ground_truth);
  std::vector<double> mpds;
  mpds.reserve(pairs.size());
  for (const auto& [id, mpd] : pairs) {
    (void)id;
    mpds.push_back(mpd);
  }
  homsynth::EvalReport report = homsynth::make_report(mpds, percentiles);

  std::ofstream out(out_path);
  if (!out) throw homsynth::Error(homsynth::Errc::IoError,
                                  "cannot write " + out_path);
  out << homsynth::report_to_json(report).dump(2) << '\n';
  if (!out) throw homsynth::Error(homsynth::Errc::IoError,
                                  "failed writing " + out_path);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) throw homsynth::Error(homsynth::Errc::IoError,
                                    "cannot write " + csv_path);
    csv << "pair_id,mpd\n";
    for (const auto& [id, mpd] : pairs) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", mpd);
      csv << id << ',' << buf << '\n';
    }
    if (!csv) throw homsynth::Error(homsynth::Errc::IoError,
                                    "failed writing " + csv_path);
  }
  std::printf("evaluated %zu pair(s) -> %s\n", report.count,
              out_path.c_str());
  for (const auto& [p, t] : report.thresholds) {
    std::printf("  t%-3g = %.4f px\n", p, t);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic camera-motion dataset tools"};
  app.set_version_flag("--version", homsynth::kToolVersion);
  app.require_subcommand(1);

  // generate
  std::string gen_config, gen_out;
  std::size_t gen_num = 0;
  std::uint64_t gen_seed = 0;
  int gen_threads = 1;
  CLI::App* generate =
      app.add_subcommand("generate", "emit a supervised training dataset");
  generate->add_option("--config", gen_config, "pipeline config JSON")
      ->required();
  generate->add_option("--out", gen_out, "output directory")->required();
  generate->add_option("--num", gen_num, "number of samples")->required();
  CLI::Option* gen_seed_opt =
      generate->add_option("--seed", gen_seed, "override the master seed");
  generate->add_option("--threads", gen_threads, "worker threads")
      ->check(CLI::PositiveNumber);

  // boundary
  std::string bnd_in, bnd_crop_out;
  bool bnd_json = false;
  int bnd_samples = 64, bnd_threshold = 16, bnd_height = 306, bnd_width = 408;
  CLI::App* boundary =
      app.add_subcommand("boundary", "detect the circular endoscopic view");
  boundary->add_option("--in", bnd_in, "input frame (PGM/PPM)")->required();
  boundary->add_flag("--json", bnd_json, "print the circle as JSON");
  boundary->add_option("--crop-out", bnd_crop_out,
                       "write the inscribed crop here");
  boundary->add_option("--samples", bnd_samples, "boundary rays")
      ->check(CLI::PositiveNumber);
  boundary->add_option("--threshold", bnd_threshold,
                       "bright/dark intensity threshold")
      ->check(CLI::Range(0, 255));
  boundary->add_option("--height", bnd_height, "crop output height")
      ->check(CLI::PositiveNumber);
  boundary->add_option("--width", bnd_width, "crop output width")
      ->check(CLI::PositiveNumber);

  // estimate
  std::string est_frames, est_out;
  homsynth::EstimateOptions est_options;
  CLI::App* estimate = app.add_subcommand(
      "estimate", "classical per-pair homography estimation");
  estimate->add_option("--frames", est_frames, "frame list file")->required();
  estimate->add_option("--out", est_out, "predictions JSONL")->required();
  estimate->add_option("--ransac-iters", est_options.ransac.iterations,
                       "sampling iterations");
  estimate->add_option("--ransac-thresh", est_options.ransac.inlier_threshold,
                       "inlier threshold in pixels");
  estimate->add_option("--seed", est_options.ransac.seed, "sampler seed");
  estimate->add_option("--max-corners", est_options.corners.max_corners,
                       "corner budget per frame");
  estimate->add_option("--search-radius", est_options.matching.search_radius,
                       "match search radius in pixels");
  estimate->add_option("--patch-radius", est_options.matching.patch_radius,
                       "correlation patch radius in pixels");

  // evaluate
  std::string ev_pred, ev_gt, ev_landmarks, ev_out, ev_csv;
  int ev_height = 0, ev_width = 0;
  std::vector<double> ev_percentiles = {30.0, 50.0, 70.0, 90.0};
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "MPD/CDF report for a prediction run");
  evaluate->add_option("--pred", ev_pred, "predictions JSONL")->required();
  CLI::Option* ev_gt_opt =
      evaluate->add_option("--gt", ev_gt, "ground-truth JSONL");
  CLI::Option* ev_lm_opt = evaluate->add_option(
      "--gt-landmarks", ev_landmarks, "tracked-landmark CSV");
  ev_gt_opt->excludes(ev_lm_opt);
  evaluate->add_option("--frame-height", ev_height,
                       "frame height for landmark ground truth")
      ->needs(ev_lm_opt);
  evaluate->add_option("--frame-width", ev_width,
                       "frame width for landmark ground truth")
      ->needs(ev_lm_opt);
  evaluate->add_option("--out", ev_out, "report JSON path")->required();
  evaluate->add_option("--csv", ev_csv, "per-pair MPD CSV path");
  evaluate->add_option("--percentiles", ev_percentiles,
                       "CDF percentiles to report")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      return run_generate(gen_config, gen_out, gen_num, !gen_seed_opt->empty(),
                          gen_seed, gen_threads);
    }
    if (*boundary) {
      return run_boundary(bnd_in, bnd_json, bnd_crop_out, bnd_samples,
                          bnd_threshold, bnd_height, bnd_width);
    }
    if (*estimate) {
      return run_estimate(est_frames, est_out, est_options);
    }
    if (*evaluate) {
      if (ev_gt.empty() && ev_landmarks.empty()) {
        std::fprintf(stderr, "evaluate needs --gt or --gt-landmarks\n");
        return 2;
      }
      if (!ev_landmarks.empty() && (ev_height <= 0 || ev_width <= 0)) {
        std::fprintf(stderr,
                     "--gt-landmarks needs --frame-height and --frame-width\n");
        return 2;
      }
      return run_evaluate(ev_pred, ev_gt, ev_landmarks, ev_height, ev_width,
                          ev_out, ev_csv, ev_percentiles);
    }
  } catch (const homsynth::Error& e) {
    std::fprintf(stderr, "homsynth: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "homsynth: unexpected error: %s\n", e.what());
    return 1;
  }
  return 2;
}
