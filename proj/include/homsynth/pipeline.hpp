#ifndef HOMSYNTH_PIPELINE_HPP
#define HOMSYNTH_PIPELINE_HPP

#include <atomic>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "homsynth/augment.hpp"
#include "homsynth/features.hpp"
#include "homsynth/metrics.hpp"
#include "homsynth/motion_gen.hpp"
#include "homsynth/ransac.hpp"
#include "json.hpp"

namespace homsynth {

inline constexpr const char* kToolName = "homsynth";
inline constexpr const char* kToolVersion = "0.1.0";

// One ordered, camera-motion-free frame sequence on disk.
struct FrameSequence {
  std::string name;
  std::vector<std::string> frames;
  double fps = 0.0;
};

struct SequenceDataset {
  std::vector<FrameSequence> sequences;

  std::size_t total_frames() const {
    std::size_t n = 0;
    for (const FrameSequence& s : sequences) n += s.frames.size();
    return n;
  }

  void validate() const {
    if (sequences.empty()) {
      throw Error(Errc::EmptyInput, "dataset has no sequences");
    }
    for (const FrameSequence& s : sequences) {
      if (s.frames.empty()) {
        throw Error(Errc::InvalidSpec, "sequence '" + s.name + "' is empty");
      }
    }
  }
};

// Per-op inclusion probabilities and magnitude ranges for the composite
// augmentation drawn for each training pair.
struct AugmentationPolicy {
  double p_hflip = 0.3;
  double p_vflip = 0.3;
  double p_crop = 0.3;
  double p_grayscale = 0.3;
  double p_brightness = 0.3;
  double p_contrast = 0.3;
  double p_blur = 0.3;
  double p_fog = 0.3;
  double brightness_range[2] = {0.5, 1.5};
  double contrast_range[2] = {0.5, 1.5};
  double blur_range[2] = {0.0, 3.0};
  double fog_range[2] = {0.0, 0.6};
  double crop_range[2] = {0.7, 1.0};

  void validate() const {
    for (double p : {p_hflip, p_vflip, p_crop, p_grayscale, p_brightness,
                     p_contrast, p_blur, p_fog}) {
      if (p < 0.0 || p > 1.0) {
        throw Error(Errc::InvalidSpec, "op probability outside [0, 1]");
      }
    }
    auto ordered = [](const double r[2]) { return r[0] <= r[1]; };
    if (!ordered(brightness_range) || !ordered(contrast_range) ||
        !ordered(blur_range) || !ordered(fog_range) || !ordered(crop_range)) {
      throw Error(Errc::InvalidSpec, "range low exceeds range high");
    }
    if (brightness_range[0] <= 0.0 || contrast_range[0] <= 0.0) {
      throw Error(Errc::InvalidSpec, "factor ranges must stay positive");
    }
    if (blur_range[0] < 0.0 || fog_range[0] < 0.0 || fog_range[1] > 1.0 ||
        crop_range[0] <= 0.0 || crop_range[1] > 1.0) {
      throw Error(Errc::InvalidSpec, "magnitude range outside valid domain");
    }
  }

  // Draws one composite spec. Every call consumes the same number of values
  // from the stream regardless of which ops are included, so toggling one
  // probability never shifts the randomness of anything drawn afterwards.
  AugmentationSpec sample(RandomStream& rng) const {
    using Kind = AugmentationOp::Kind;
    struct Row {
      Kind kind;
      double p;
      double lo, hi;
    };
    const Row rows[] = {
        {Kind::HFlip, p_hflip, 0.0, 0.0},
        {Kind::VFlip, p_vflip, 0.0, 0.0},
        {Kind::Crop, p_crop, crop_range[0], crop_range[1]},
        {Kind::Grayscale, p_grayscale, 0.0, 0.0},
        {Kind::Brightness, p_brightness, brightness_range[0],
         brightness_range[1]},
        {Kind::Contrast, p_contrast, contrast_range[0], contrast_range[1]},
        {Kind::GaussianBlur, p_blur, blur_range[0], blur_range[1]},
        {Kind::Fog, p_fog, fog_range[0], fog_range[1]},
    };
    AugmentationSpec spec;
    for (const Row& row : rows) {
      double u = rng.uniform_real(0.0, 1.0);
      double amount = row.hi > row.lo ? rng.uniform_real(row.lo, row.hi)
                                      : (static_cast<void>(rng.next_u64()),
                                         row.lo);
      if (u < row.p) spec.ops.push_back({row.kind, amount});
    }
    spec.seed = rng.next_u64();
    return spec;
  }
};

// Fixed rectangle removed from every raw frame before resizing, e.g. to drop
// status-indicator margins. Zero width or height disables it.
struct PreCrop {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool enabled() const { return width > 0 && height > 0; }
};

struct PipelineConfig {
  MotionConfig homgen;
  // Frame offset window: the second frame of a pair sits within
  // [-sequence_window, sequence_window] of the anchor.
  int sequence_window = 25;
  AugmentationPolicy augment;
  PreCrop pre_crop;
  int pre_resize_height = 306;
  int pre_resize_width = 408;
  std::string output_dir;
  std::uint64_t master_seed = 0;

  void validate() const {
    homgen.validate();
    augment.validate();
    if (sequence_window < 0) {
      throw Error(Errc::InvalidSpec, "sequence_window must be nonnegative");
    }
    if (pre_crop.x < 0 || pre_crop.y < 0 || pre_crop.width < 0 ||
        pre_crop.height < 0) {
      throw Error(Errc::InvalidSpec, "pre_crop fields must be nonnegative");
    }
    // The resized frame is the border frame of motion generation, so it must
    // cover it; a larger frame only adds content outside the border.
    if (pre_resize_height < homgen.border_height ||
        pre_resize_width < homgen.border_width) {
      throw Error(Errc::InvalidSpec,
                  "pre_resize must cover the motion border frame");
    }
  }
};

namespace detail {

inline void require_known_keys(const nlohmann::json& j,
                               std::initializer_list<const char*> known,
                               const char* where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) {
      throw Error(Errc::InvalidSpec,
                  std::string("unknown key '") + key + "' in " + where);
    }
  }
}

template <typename T>
void assign_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void assign_range(const nlohmann::json& j, const char* key,
                         double out[2]) {
  if (!j.contains(key)) return;
  auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 2) {
    throw Error(Errc::InvalidSpec, std::string(key) + " must be [low, high]");
  }
  out[0] = v[0];
  out[1] = v[1];
}

inline std::string zero_pad(long long value, int width = 6) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*lld", width, value);
  return buf;
}

}  // namespace detail

// Portable half of the configuration: everything that determines generated
// bytes. The output directory is deliberately excluded so manifests from
// different destinations stay comparable.
inline nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
  const AugmentationPolicy& a = cfg.augment;
  nlohmann::json j{
      {"master_seed", cfg.master_seed},
      {"sequence_window", cfg.sequence_window},
      {"pre_resize",
       {{"height", cfg.pre_resize_height}, {"width", cfg.pre_resize_width}}},
      {"homgen",
       {{"border_height", cfg.homgen.border_height},
        {"border_width", cfg.homgen.border_width},
        {"crop_height", cfg.homgen.crop_height},
        {"crop_width", cfg.homgen.crop_width},
        {"edge_deviation", cfg.homgen.edge_deviation},
        {"max_rollouts", cfg.homgen.max_rollouts}}},
      {"augment",
       {{"p_hflip", a.p_hflip},
        {"p_vflip", a.p_vflip},
        {"p_crop", a.p_crop},
        {"p_grayscale", a.p_grayscale},
        {"p_brightness", a.p_brightness},
        {"p_contrast", a.p_contrast},
        {"p_blur", a.p_blur},
        {"p_fog", a.p_fog},
        {"brightness_range", {a.brightness_range[0], a.brightness_range[1]}},
        {"contrast_range", {a.contrast_range[0], a.contrast_range[1]}},
        {"blur_range", {a.blur_range[0], a.blur_range[1]}},
        {"fog_range", {a.fog_range[0], a.fog_range[1]}},
        {"crop_range", {a.crop_range[0], a.crop_range[1]}}}}};
  if (cfg.pre_crop.enabled()) {
    j["pre_crop"] = {{"x", cfg.pre_crop.x},
                     {"y", cfg.pre_crop.y},
                     {"width", cfg.pre_crop.width},
                     {"height", cfg.pre_crop.height}};
  }
  return j;
}

struct PipelineSetup {
  PipelineConfig config;
  SequenceDataset dataset;
};

// Parses a configuration object; relative frame paths resolve against
// base_dir. Unknown keys are rejected so typos fail loudly.
inline PipelineSetup parse_pipeline_setup(const nlohmann::json& j,
                                          const std::string& base_dir) {
  namespace fs = std::filesystem;
  detail::require_known_keys(
      j,
      {"master_seed", "sequence_window", "pre_resize", "pre_crop", "homgen",
       "augment", "output_dir", "sequences"},
      "config");
  PipelineSetup setup;
  PipelineConfig& cfg = setup.config;
  try {
    detail::assign_if(j, "master_seed", cfg.master_seed);
    detail::assign_if(j, "sequence_window", cfg.sequence_window);
    detail::assign_if(j, "output_dir", cfg.output_dir);
    if (j.contains("pre_resize")) {
      const auto& r = j.at("pre_resize");
      detail::require_known_keys(r, {"height", "width"}, "pre_resize");
      detail::assign_if(r, "height", cfg.pre_resize_height);
      detail::assign_if(r, "width", cfg.pre_resize_width);
    }
    if (j.contains("pre_crop")) {
      const auto& r = j.at("pre_crop");
      detail::require_known_keys(r, {"x", "y", "width", "height"}, "pre_crop");
      detail::assign_if(r, "x", cfg.pre_crop.x);
      detail::assign_if(r, "y", cfg.pre_crop.y);
      detail::assign_if(r, "width", cfg.pre_crop.width);
      detail::assign_if(r, "height", cfg.pre_crop.height);
    }
    if (j.contains("homgen")) {
      const auto& h = j.at("homgen");
      detail::require_known_keys(h,
                                 {"border_height", "border_width",
                                  "crop_height", "crop_width",
                                  "edge_deviation", "max_rollouts"},
                                 "homgen");
      detail::assign_if(h, "border_height", cfg.homgen.border_height);
      detail::assign_if(h, "border_width", cfg.homgen.border_width);
      detail::assign_if(h, "crop_height", cfg.homgen.crop_height);
      detail::assign_if(h, "crop_width", cfg.homgen.crop_width);
      detail::assign_if(h, "edge_deviation", cfg.homgen.edge_deviation);
      detail::assign_if(h, "max_rollouts", cfg.homgen.max_rollouts);
    }
    if (j.contains("augment")) {
      const auto& a = j.at("augment");
      detail::require_known_keys(
          a,
          {"p_hflip", "p_vflip", "p_crop", "p_grayscale", "p_brightness",
           "p_contrast", "p_blur", "p_fog", "brightness_range",
           "contrast_range", "blur_range", "fog_range", "crop_range"},
          "augment");
      AugmentationPolicy& p = cfg.augment;
      detail::assign_if(a, "p_hflip", p.p_hflip);
      detail::assign_if(a, "p_vflip", p.p_vflip);
      detail::assign_if(a, "p_crop", p.p_crop);
      detail::assign_if(a, "p_grayscale", p.p_grayscale);
      detail::assign_if(a, "p_brightness", p.p_brightness);
      detail::assign_if(a, "p_contrast", p.p_contrast);
      detail::assign_if(a, "p_blur", p.p_blur);
      detail::assign_if(a, "p_fog", p.p_fog);
      detail::assign_range(a, "brightness_range", p.brightness_range);
      detail::assign_range(a, "contrast_range", p.contrast_range);
      detail::assign_range(a, "blur_range", p.blur_range);
      detail::assign_range(a, "fog_range", p.fog_range);
      detail::assign_range(a, "crop_range", p.crop_range);
    }
    if (!j.contains("sequences")) {
      throw Error(Errc::InvalidSpec, "config needs a 'sequences' list");
    }
    for (const auto& s : j.at("sequences")) {
      detail::require_known_keys(s, {"name", "frames", "fps"}, "sequence");
      FrameSequence seq;
      detail::assign_if(s, "fps", seq.fps);
      seq.name = s.contains("name")
                     ? s.at("name").get<std::string>()
                     : "seq" + std::to_string(setup.dataset.sequences.size());
      for (const auto& f : s.at("frames")) {
        fs::path p = f.get<std::string>();
        if (p.is_relative()) p = fs::path(base_dir) / p;
        seq.frames.push_back(p.lexically_normal().string());
      }
      setup.dataset.sequences.push_back(std::move(seq));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::InvalidSpec, std::string("bad config: ") + e.what());
  }
  cfg.validate();
  setup.dataset.validate();
  return setup;
}

inline PipelineSetup load_pipeline_setup(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
  return parse_pipeline_setup(
      j, std::filesystem::path(path).parent_path().string());
}

// Frame offset draw for one training pair: t is uniform over the integers of
// [-window, window] that keep n + t a valid index, so every draw is usable.
inline std::pair<int, int> sample_pair(int sequence_length, int n, int window,
                                       RandomStream& rng) {
  if (sequence_length < 1 || n < 0 || n >= sequence_length || window < 0) {
    throw Error(Errc::InvalidArgument, "anchor outside the sequence");
  }
  int lo = std::max(-window, -n);
  int hi = std::min(window, sequence_length - 1 - n);
  int t = static_cast<int>(rng.uniform_int(lo, hi));
  return {n, n + t};
}

// Raw frame to working frame: optional fixed crop, then resize to the
// configured working resolution.
inline ImageBuffer prepare_frame(const ImageBuffer& raw,
                                 const PipelineConfig& cfg) {
  const ImageBuffer* src = &raw;
  ImageBuffer cropped;
  if (cfg.pre_crop.enabled()) {
    cropped = crop_image(raw, rect_polygon(cfg.pre_crop.x, cfg.pre_crop.y,
                                           cfg.pre_crop.width,
                                           cfg.pre_crop.height));
    src = &cropped;
  }
  return resize_image(*src, cfg.pre_resize_height, cfg.pre_resize_width);
}

struct TrainingSample {
  ImageBuffer anchor_crop;
  ImageBuffer warped_offset_crop;
  // Corner displacements anchored at the crop corners; the same deltas apply
  // in crop-local coordinates since displacements survive translation.
  FourPointHomography label;
  Homography g_inverse;
  Polygon crop_polygon;
  int rollouts_used = 0;
  bool fallback = false;
  AugmentationSpec augmentation;
  // Provenance, filled by the stream.
  int sequence_index = 0;
  std::string sequence_name;
  int anchor_frame = 0;
  int offset_frame = 0;
  std::uint64_t sample_seed = 0;
};

// Core of the generator: one augmentation spec applied to both frames keeps
// the synthetic motion the only geometric difference between the two crops;
// the offset view is the warped second frame under the same crop window.
inline TrainingSample build_training_sample(const ImageBuffer& img_n,
                                            const ImageBuffer& img_nt,
                                            const PipelineConfig& cfg,
                                            RandomStream& rng) {
  cfg.validate();
  if (img_n.height() != cfg.pre_resize_height ||
      img_n.width() != cfg.pre_resize_width ||
      img_nt.height() != img_n.height() || img_nt.width() != img_n.width() ||
      img_nt.channels() != img_n.channels()) {
    throw Error(Errc::InvalidArgument,
                "pair frames must both match the working resolution");
  }
  TrainingSample sample;
  sample.augmentation = cfg.augment.sample(rng);
  ImageBuffer aug_n = apply_augmentation(img_n, sample.augmentation);
  ImageBuffer aug_nt = &img_nt == &img_n
                           ? aug_n
                           : apply_augmentation(img_nt, sample.augmentation);
  Polygon crop = sample_crop_polygon(cfg.homgen, rng);
  GeneratedMotion motion = generate_motion(cfg.homgen, crop, rng);
  sample.anchor_crop = crop_image(aug_n, crop);
  ImageBuffer warped = warp_image(aug_nt, motion.g_inverse,
                                  cfg.pre_resize_height, cfg.pre_resize_width);
  sample.warped_offset_crop = crop_image(warped, crop);
  sample.label = motion.four_point;
  sample.g_inverse = motion.g_inverse;
  sample.crop_polygon = std::move(crop);
  sample.rollouts_used = motion.rollouts_used;
  sample.fallback = motion.fallback;
  return sample;
}

// Streaming sample source: at(i) is a pure function of (dataset, config,
// master seed, i), so training loops can pull samples concurrently from
// independent streams and an offline emitter produces the same bytes.
class SampleStream {
 public:
  SampleStream(SequenceDataset dataset, PipelineConfig config)
      : dataset_(std::move(dataset)), config_(std::move(config)) {
    config_.validate();
    dataset_.validate();
  }

  const PipelineConfig& config() const { return config_; }
  const SequenceDataset& dataset() const { return dataset_; }

  TrainingSample at(std::size_t index) const {
    RandomStream rng(derive_seed(config_.master_seed, index));
    // Uniform over all frames, which weights sequences by their length.
    auto global = rng.uniform_int(
        0, static_cast<std::int64_t>(dataset_.total_frames()) - 1);
    std::size_t seq_index = 0;
    while (global >=
           static_cast<std::int64_t>(dataset_.sequences[seq_index].frames
                                         .size())) {
      global -= dataset_.sequences[seq_index].frames.size();
      ++seq_index;
    }
    const FrameSequence& seq = dataset_.sequences[seq_index];
    auto [n, nt] = sample_pair(static_cast<int>(seq.frames.size()),
                               static_cast<int>(global),
                               config_.sequence_window, rng);
    ImageBuffer img_n = prepared_frame(seq_index, n);
    TrainingSample sample =
        n == nt ? build_training_sample(img_n, img_n, config_, rng)
                : build_training_sample(img_n, prepared_frame(seq_index, nt),
                                        config_, rng);
    sample.sequence_index = static_cast<int>(seq_index);
    sample.sequence_name = seq.name;
    sample.anchor_frame = n;
    sample.offset_frame = nt;
    sample.sample_seed = derive_seed(config_.master_seed, index);
    return sample;
  }

  TrainingSample next() { return at(counter_++); }

 private:
  // Bounded cache of prepared frames; nearby samples usually revisit frames.
  // Returns a copy because concurrent callers may evict any entry.
  ImageBuffer prepared_frame(std::size_t seq, int frame) const {
    {
      std::lock_guard<std::mutex> lock(cache_mutex_);
      auto it = cache_.find({seq, frame});
      if (it != cache_.end()) return it->second;
    }
    ImageBuffer raw = load_image(dataset_.sequences[seq].frames[frame]);
    ImageBuffer prepared = prepare_frame(raw, config_);
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto key = std::make_pair(seq, frame);
    if (cache_.emplace(key, prepared).second) {
      cache_order_.push_back(key);
      if (cache_order_.size() > 32) {
        cache_.erase(cache_order_.front());
        cache_order_.pop_front();
      }
    }
    return prepared;
  }

  SequenceDataset dataset_;
  PipelineConfig config_;
  std::size_t counter_ = 0;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<std::size_t, int>, ImageBuffer> cache_;
  mutable std::deque<std::pair<std::size_t, int>> cache_order_;
};

inline nlohmann::json four_point_to_json(const FourPointHomography& fp) {
  nlohmann::json j = nlohmann::json::array();
  for (const Vec2& d : fp.deltas) j.push_back({d.x(), d.y()});
  return j;
}

inline FourPointHomography four_point_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw Error(Errc::ParseError, "four_point must be 4 [du, dv] pairs");
  }
  FourPointHomography fp;
  for (int i = 0; i < 4; ++i) {
    if (!j[i].is_array() || j[i].size() != 2) {
      throw Error(Errc::ParseError, "four_point must be 4 [du, dv] pairs");
    }
    fp.deltas[i] = Vec2(j[i][0].get<double>(), j[i][1].get<double>());
  }
  return fp;
}

inline nlohmann::json sample_record_json(const TrainingSample& s,
                                         std::size_t id,
                                         const std::string& anchor_file,
                                         const std::string& offset_file) {
  nlohmann::json aug = nlohmann::json::array();
  for (const AugmentationOp& op : s.augmentation.ops) {
    aug.push_back({{"kind", augmentation_kind_name(op.kind)},
                   {"amount", op.amount}});
  }
  nlohmann::json crop = nlohmann::json::array();
  for (const Vec2& v : s.crop_polygon.vertices) {
    crop.push_back({v.x(), v.y()});
  }
  std::vector<double> ginv(9);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) ginv[r * 3 + c] = s.g_inverse.matrix()(r, c);
  }
  return nlohmann::json{{"type", "sample"},
                        {"id", id},
                        {"sequence", s.sequence_name},
                        {"sequence_index", s.sequence_index},
                        {"anchor", s.anchor_frame},
                        {"offset", s.offset_frame},
                        {"seed", s.sample_seed},
                        {"anchor_image", anchor_file},
                        {"offset_image", offset_file},
                        {"four_point", four_point_to_json(s.label)},
                        {"g_inverse", ginv},
                        {"crop_polygon", crop},
                        {"rollouts_used", s.rollouts_used},
                        {"fallback", s.fallback},
                        {"augmentations", aug},
                        {"augmentation_seed", s.augmentation.seed}};
}

struct GenerationSummary {
  std::size_t requested = 0;
  std::size_t written = 0;
  std::size_t skipped = 0;
  std::string manifest_path;
};

// Emits n_samples to out_dir plus a manifest.jsonl describing each one.
// Sample i depends only on (dataset, config, master seed, i) and lines are
// written in id order, so the output bytes are independent of n_threads.
inline GenerationSummary generate_dataset(const SequenceDataset& dataset,
                                          const PipelineConfig& config,
                                          std::size_t n_samples,
                                          const std::string& out_dir,
                                          int n_threads = 1) {
  namespace fs = std::filesystem;
  if (n_threads < 1) {
    throw Error(Errc::InvalidArgument, "need at least one worker");
  }
  SampleStream stream(dataset, config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw Error(Errc::IoError, "cannot create " + out_dir + ": " +
                                   ec.message());
  }
  fs::path manifest_path = fs::path(out_dir) / "manifest.jsonl";
  std::ofstream manifest(manifest_path);
  if (!manifest) {
    throw Error(Errc::IoError, "cannot write " + manifest_path.string());
  }
  manifest << nlohmann::json{{"type", "header"},
                             {"tool", kToolName},
                             {"version", kToolVersion},
                             {"master_seed", config.master_seed},
                             {"num_samples_requested", n_samples},
                             {"config", pipeline_config_to_json(config)}}
                  .dump()
           << '\n';

  GenerationSummary summary;
  summary.requested = n_samples;
  summary.manifest_path = manifest_path.string();

  struct Built {
    std::optional<TrainingSample> sample;
    std::string error;
  };
  const std::size_t block = static_cast<std::size_t>(n_threads) * 8;
  std::vector<Built> results(std::min(block, n_samples ? n_samples : 1));
  for (std::size_t base = 0; base < n_samples; base += block) {
    std::size_t count = std::min(block, n_samples - base);
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
      for (std::size_t j = cursor.fetch_add(1); j < count;
           j = cursor.fetch_add(1)) {
        try {
          results[j].sample = stream.at(base + j);
          results[j].error.clear();
        } catch (const std::exception& e) {
          results[j].sample.reset();
          results[j].error = e.what();
        }
      }
    };
    if (n_threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }
    for (std::size_t j = 0; j < count; ++j) {
      std::size_t id = base + j;
      if (!results[j].sample) {
        manifest << nlohmann::json{{"type", "skip"},
                                   {"id", id},
                                   {"error", results[j].error}}
                        .dump()
                 << '\n';
        ++summary.skipped;
        continue;
      }
      const TrainingSample& s = *results[j].sample;
      const char* ext = s.anchor_crop.channels() == 3 ? ".ppm" : ".pgm";
      std::string stem = "sample_" + detail::zero_pad(
                                         static_cast<long long>(id));
      std::string anchor_file = stem + "_anchor" + ext;
      std::string offset_file = stem + "_offset" + ext;
      write_pnm(s.anchor_crop, (fs::path(out_dir) / anchor_file).string());
      write_pnm(s.warped_offset_crop,
                (fs::path(out_dir) / offset_file).string());
      manifest << sample_record_json(s, id, anchor_file, offset_file).dump()
               << '\n';
      ++summary.written;
    }
  }
  manifest << nlohmann::json{{"type", "summary"},
                             {"written", summary.written},
                             {"skipped", summary.skipped}}
                  .dump()
           << '\n';
  if (!manifest) {
    throw Error(Errc::IoError, "failed writing " + manifest_path.string());
  }
  return summary;
}

// One per-pair homography record of a prediction or ground-truth file.
struct PredictionRecord {
  std::string pair_id;
  FourPointHomography four_point = FourPointHomography::zero();
  // Empty for clean estimates; set when a pair fell back to the identity.
  std::string status;
};

inline std::vector<PredictionRecord> read_predictions_jsonl(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::vector<PredictionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      PredictionRecord rec;
      rec.pair_id = j.at("pair_id").get<std::string>();
      rec.four_point = four_point_from_json(j.at("four_point"));
      if (j.contains("status")) rec.status = j.at("status").get<std::string>();
      records.push_back(std::move(rec));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(Errc::ParseError,
                  path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

inline void write_predictions_jsonl(const std::vector<PredictionRecord>& recs,
                                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  for (const PredictionRecord& rec : recs) {
    nlohmann::json j{{"pair_id", rec.pair_id},
                     {"four_point", four_point_to_json(rec.four_point)}};
    if (!rec.status.empty()) j["status"] = rec.status;
    out << j.dump() << '\n';
  }
  if (!out) throw Error(Errc::IoError, "failed writing " + path);
}

// Strict pairing of predictions with ground truth: the id sets must match
// exactly and contain no duplicates. Returns (id, mpd) sorted by id.
inline std::vector<std::pair<std::string, double>> paired_mpds(
    const std::vector<PredictionRecord>& predictions,
    const std::vector<PredictionRecord>& ground_truth) {
  auto index = [](const std::vector<PredictionRecord>& recs,
                  const char* what) {
    std::map<std::string, const PredictionRecord*> byid;
    for (const PredictionRecord& r : recs) {
      if (!byid.emplace(r.pair_id, &r).second) {
        throw Error(Errc::ParseError, std::string("duplicate pair_id '") +
                                          r.pair_id + "' in " + what);
      }
    }
    return byid;
  };
  auto pred = index(predictions, "predictions");
  auto gt = index(ground_truth, "ground truth");
  for (const auto& [id, rec] : pred) {
    (void)rec;
    if (!gt.count(id)) {
      throw Error(Errc::IdMismatch, "pair '" + id + "' has no ground truth");
    }
  }
  for (const auto& [id, rec] : gt) {
    (void)rec;
    if (!pred.count(id)) {
      throw Error(Errc::IdMismatch, "pair '" + id + "' has no prediction");
    }
  }
  std::vector<std::pair<std::string, double>> out;
  out.reserve(gt.size());
  for (const auto& [id, rec] : gt) {
    out.emplace_back(id, mean_pairwise_distance(pred.at(id)->four_point,
                                                rec->four_point));
  }
  return out;
}

inline EvalReport evaluate_run(const std::string& predictions_path,
                               const std::string& ground_truth_path,
                               const std::vector<double>& percentiles = {
                                   30.0, 50.0, 70.0, 90.0}) {
  auto pairs = paired_mpds(read_predictions_jsonl(predictions_path),
                           read_predictions_jsonl(ground_truth_path));
  if (pairs.empty()) throw Error(Errc::EmptyInput, "no pairs to evaluate");
  std::vector<double> mpds;
  mpds.reserve(pairs.size());
  for (const auto& [id, mpd] : pairs) {
    (void)id;
    mpds.push_back(mpd);
  }
  return make_report(mpds, percentiles);
}

// Ground-truth records from a landmark file: one per consecutive frame pair
// (f, f+1) present in the annotations, keyed by the zero-padded first frame.
inline std::vector<PredictionRecord> landmark_gt_records(
    const std::vector<LandmarkTrack>& tracks, int frame_height,
    int frame_width) {
  std::set<int> frames;
  for (const LandmarkTrack& t : tracks) frames.insert(t.frame_index);
  CornerArray corners = image_corners(frame_height, frame_width);
  std::vector<PredictionRecord> records;
  for (int f : frames) {
    if (!frames.count(f + 1)) continue;
    PredictionRecord rec;
    rec.pair_id = detail::zero_pad(f);
    rec.four_point = gt_from_landmarks(tracks, f, f + 1, corners);
    records.push_back(std::move(rec));
  }
  if (records.empty()) {
    throw Error(Errc::EmptyInput, "no consecutive annotated frame pairs");
  }
  return records;
}

struct EstimateOptions {
  CornerDetectionParams corners;
  MatchingParams matching;
  RansacConfig ransac;
};

// Classical baseline over consecutive frames of an ordered list: corners on
// the first frame, matches into the second, robust fit, reparameterized as
// corner displacements of the full frame. Pairs without a consensus model
// fall back to the identity and carry a status tag instead of failing the
// whole run.
inline std::vector<PredictionRecord> estimate_consecutive(
    const std::vector<std::string>& frame_paths,
    const EstimateOptions& options = {}) {
  if (frame_paths.size() < 2) {
    throw Error(Errc::EmptyInput, "need at least two frames");
  }
  std::vector<PredictionRecord> records;
  ImageBuffer current = load_image(frame_paths[0]);
  for (std::size_t i = 0; i + 1 < frame_paths.size(); ++i) {
    ImageBuffer next = load_image(frame_paths[i + 1]);
    PredictionRecord rec;
    rec.pair_id = detail::zero_pad(static_cast<long long>(i));
    try {
      std::vector<Vec2> corners = detect_corners(current, options.corners);
      CorrespondenceSet matches =
          match_correspondences(current, next, corners, options.matching);
      RansacResult fit = ransac_homography(matches, options.ransac);
      rec.four_point = matrix_to_four_point(
          fit.homography, image_corners(current.height(), current.width()));
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::NoConsensus:
        case Errc::TooFewPoints:
        case Errc::EmptyInput:
          rec.four_point = FourPointHomography::zero();
          rec.status = errc_name(e.code());
          break;
        default:
          throw;
      }
    }
    records.push_back(std::move(rec));
    current = std::move(next);
  }
  return records;
}

// Frame list file: one image path per line, blanks and #-comments skipped,
// relative paths resolved against the list's directory.
inline std::vector<std::string> read_frame_list(const std::string& path) {
  namespace fs = std::filesystem;
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::vector<std::string> frames;
  std::string line;
  fs::path base = fs::path(path).parent_path();
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    auto end = line.find_last_not_of(" \t");
    fs::path p = line.substr(start, end - start + 1);
    if (p.is_relative()) p = base / p;
    frames.push_back(p.lexically_normal().string());
  }
  if (frames.empty()) throw Error(Errc::EmptyInput, "frame list is empty");
  return frames;
}

}  // namespace homsynth

#endif  // HOMSYNTH_PIPELINE_HPP
