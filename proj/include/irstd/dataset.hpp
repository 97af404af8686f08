#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "irstd/image.hpp"

namespace irstd {

struct BoundingBox {
  int y0 = 0, x0 = 0, y1 = 0, x1 = 0;  // inclusive corners
  int area() const noexcept { return (y1 - y0 + 1) * (x1 - x0 + 1); }
  bool contains(double y, double x) const noexcept { return y >= y0 && y <= y1 && x >= x0 && x <= x1; }
};

struct Centroid {
  double y = 0.0, x = 0.0;
};

/// One image with all annotation forms: image-level label, instance masks,
/// bounding boxes, semantic mask and instance centroids (spots).
struct AnnotatedSample {
  std::string id;
  GrayImage image;
  std::vector<BinaryMask> instance_masks;
  BinaryMask semantic_mask;
  std::vector<BoundingBox> boxes;
  std::vector<Centroid> centroids;
  bool has_target = false;
};

/// Split a semantic mask into 8-connected instances and fill every derived
/// annotation form.
AnnotatedSample annotate(std::string id, GrayImage image, const BinaryMask& semantic);

/// Build from explicit instance masks; they must be pairwise disjoint.
AnnotatedSample annotate_instances(std::string id, GrayImage image, std::vector<BinaryMask> instances);

// ---------------------------------------------------------------------------
// Corpus on disk:  <root>/images/<stem>.{png,pgm}, <root>/masks/<stem>.{png,pgm}
// and a JSON manifest {"train":[stems], "val":[...], "test":[...]} with an
// optional "ratios": {"train":0.5, "val":0.2, "test":0.3}.
// ---------------------------------------------------------------------------

struct Corpus {
  std::map<std::string, std::vector<AnnotatedSample>> splits;  // "train", "val", "test"
  std::size_t size() const noexcept;
  std::vector<const AnnotatedSample*> all() const;
};

/// Throws LoadError naming the offending path; never returns a partial corpus.
Corpus load_corpus(const std::filesystem::path& root, const std::filesystem::path& manifest);

/// All images/ stems with a matching mask, sorted, as a single "all" split.
Corpus load_directory(const std::filesystem::path& root);

/// Locate <dir>/<stem>.png or .pgm; throws LoadError if absent.
std::filesystem::path find_image(const std::filesystem::path& dir, const std::string& stem);

/// Writes images as 16-bit PNG, masks as 8-bit PNG and a manifest with every
/// sample listed under `split`.
void save_corpus(const std::filesystem::path& root, const std::vector<AnnotatedSample>& samples,
                 const std::string& split = "test");

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct CorpusStatistics {
  std::map<int, int> target_count_histogram;  // targets per image -> images
  std::vector<double> size_ratios;            // per target: pixels / image pixels
  std::vector<double> brightness_ranks;       // per target, in [0,1]
  std::vector<int> size_ratio_bins;           // counts over size_ratio_edges
  std::vector<double> size_ratio_edges;
  std::vector<int> brightness_bins;           // ten bins over [0,1]
  std::size_t images = 0;
  std::size_t targets = 0;
};

/// Fraction of image pixels strictly below the target's peak intensity.
double brightness_rank(const GrayImage& image, const BinaryMask& target);

CorpusStatistics statistics(const std::vector<const AnnotatedSample*>& samples);
nlohmann::json to_json(const CorpusStatistics& s);

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

struct SynthConfig {
  int height = 256;
  int width = 256;
  int count = 30;
  std::uint64_t seed = 1;
  /// P(k targets) for k = 0, 1, 2, ...
  std::vector<double> target_count_probs = {0.0, 0.9, 0.07, 0.03};
  double sigma_min = 1.0, sigma_max = 1.8;
  double amplitude_min = 0.5, amplitude_max = 0.8;
  /// Background: base + linear/quadratic ramp, smooth clutter blobs, noise.
  double background_level = 0.25;
  double ramp_amplitude = 0.15;
  int clutter_blobs = 4;
  double clutter_amplitude = 0.06;
  double clutter_sigma_min = 10.0, clutter_sigma_max = 25.0;
  double noise_std = 0.01;
  /// Footprint half-width; windows are (2 * radius + 1)^2. Max 4 (9 x 9).
  int target_radius = 4;
  /// Minimum distance from a target center to the border.
  int border_margin = 8;

  void validate() const;
};

struct PlantedTarget {
  int cy = 0, cx = 0;
  double sigma = 0.0, amplitude = 0.0;
  std::size_t mask_pixels = 0;
};

struct SynthSample {
  AnnotatedSample sample;
  std::vector<PlantedTarget> planted;
};

/// Deterministic in (seed, index); samples are generated in parallel from
/// independent per-index streams. Throws GenerationError if targets cannot
/// be placed without overlapping footprints.
std::vector<SynthSample> synth_generate(const SynthConfig& cfg);
SynthSample synth_one(const SynthConfig& cfg, int index);

SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthConfig& c);

}  // namespace irstd
