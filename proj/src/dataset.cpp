#include "irstd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include "irstd/error.hpp"
#include "irstd/image_io.hpp"
#include "irstd/imgproc.hpp"

namespace irstd {

namespace fs = std::filesystem;
using nlohmann::json;

AnnotatedSample annotate_instances(std::string id, GrayImage image, std::vector<BinaryMask> instances) {
  AnnotatedSample s;
  s.id = std::move(id);
  const int h = image.height(), w = image.width();
  s.semantic_mask = BinaryMask(h, w);
  for (const auto& m : instances) {
    if (!m.same_dims(h, w)) throw std::invalid_argument("instance mask dims differ from image dims");
    if (m.count() == 0) throw std::invalid_argument("instance mask is empty");
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m.get(i)) continue;
      if (s.semantic_mask.get(i)) throw std::invalid_argument("instance masks overlap");
      s.semantic_mask.set(i, true);
    }
    BoundingBox box{h, w, -1, -1};
    double sy = 0.0, sx = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (m(y, x)) {
          box.y0 = std::min(box.y0, y);
          box.x0 = std::min(box.x0, x);
          box.y1 = std::max(box.y1, y);
          box.x1 = std::max(box.x1, x);
          sy += y;
          sx += x;
          ++n;
        }
    s.boxes.push_back(box);
    s.centroids.push_back({sy / n, sx / n});
  }
  s.instance_masks = std::move(instances);
  s.has_target = !s.instance_masks.empty();
  s.image = std::move(image);
  return s;
}

AnnotatedSample annotate(std::string id, GrayImage image, const BinaryMask& semantic) {
  if (!semantic.same_dims(image.height(), image.width()))
    throw std::invalid_argument("mask dims differ from image dims");
  const Components cc = label_components(semantic);
  std::vector<BinaryMask> instances(cc.count, BinaryMask(image.height(), image.width()));
  for (std::size_t i = 0; i < cc.labels.size(); ++i)
    if (cc.labels[i] > 0) instances[cc.labels[i] - 1].set(i, true);
  return annotate_instances(std::move(id), std::move(image), std::move(instances));
}

std::size_t Corpus::size() const noexcept {
  std::size_t n = 0;
  for (const auto& [name, v] : splits) n += v.size();
  return n;
}

std::vector<const AnnotatedSample*> Corpus::all() const {
  std::vector<const AnnotatedSample*> out;
  for (const auto& [name, v] : splits)
    for (const auto& s : v) out.push_back(&s);
  return out;
}

fs::path find_image(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".png", ".pgm"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  throw LoadError("missing file: " + (dir / (stem + ".png")).string());
}

namespace {

AnnotatedSample load_sample(const fs::path& root, const std::string& stem) {
  const fs::path img_path = find_image(root / "images", stem);
  const fs::path mask_path = find_image(root / "masks", stem);
  GrayImage img = io::read_image(img_path);
  BinaryMask mask = io::read_mask(mask_path);
  if (!mask.same_dims(img.height(), img.width()))
    throw LoadError("mask dims differ from image dims: " + mask_path.string());
  return annotate(stem, std::move(img), mask);
}

}  // namespace

Corpus load_corpus(const fs::path& root, const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw LoadError("missing file: " + manifest.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw LoadError("malformed manifest " + manifest.string() + ": " + e.what());
  }
  Corpus corpus;
  std::map<std::string, double> ratios;
  try {
    for (const char* split : {"train", "val", "test"}) {
      auto& dst = corpus.splits[split];
      if (!j.contains(split)) continue;
      for (const auto& stem : j[split]) dst.push_back(load_sample(root, stem.get<std::string>()));
    }
    if (j.contains("ratios"))
      for (auto it = j["ratios"].begin(); it != j["ratios"].end(); ++it) ratios[it.key()] = it.value().get<double>();
  } catch (const json::exception& e) {
    throw LoadError("malformed manifest " + manifest.string() + ": " + e.what());
  }
  const double total = static_cast<double>(corpus.size());
  for (const auto& [split, want] : ratios) {
    auto it = corpus.splits.find(split);
    const double have = (it == corpus.splits.end() || total == 0.0) ? 0.0 : it->second.size() / total;
    if (std::abs(have - want) > 0.05)
      throw LoadError("split '" + split + "' holds " + std::to_string(have) + " of the corpus, manifest declares " +
                      std::to_string(want) + ": " + manifest.string());
  }
  return corpus;
}

Corpus load_directory(const fs::path& root) {
  const fs::path images = root / "images";
  if (!fs::is_directory(images)) throw LoadError("missing directory: " + images.string());
  std::set<std::string> stems;
  for (const auto& e : fs::directory_iterator(images)) {
    const auto ext = e.path().extension().string();
    if (ext == ".png" || ext == ".pgm") stems.insert(e.path().stem().string());
  }
  Corpus corpus;
  auto& dst = corpus.splits["all"];
  for (const auto& stem : stems) dst.push_back(load_sample(root, stem));
  return corpus;
}

void save_corpus(const fs::path& root, const std::vector<AnnotatedSample>& samples, const std::string& split) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  json stems = json::array();
  for (const auto& s : samples) {
    io::write_image(root / "images" / (s.id + ".png"), s.image, io::BitDepth::Sixteen);
    io::write_mask(root / "masks" / (s.id + ".png"), s.semantic_mask);
    stems.push_back(s.id);
  }
  json manifest = {{"train", json::array()}, {"val", json::array()}, {"test", json::array()}};
  manifest[split] = stems;
  std::ofstream(root / "manifest.json") << manifest.dump(2) << '\n';
}

double brightness_rank(const GrayImage& image, const BinaryMask& target) {
  double peak = -HUGE_VAL;
  const auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i)
    if (target.get(i)) peak = std::max(peak, px[i]);
  std::size_t below = 0;
  for (double v : px) below += v < peak ? 1 : 0;
  return static_cast<double>(below) / static_cast<double>(px.size());
}

CorpusStatistics statistics(const std::vector<const AnnotatedSample*>& samples) {
  if (samples.empty()) throw std::invalid_argument("statistics: empty corpus");
  CorpusStatistics st;
  st.size_ratio_edges = {0.0, 1e-5, 2e-5, 5e-5, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1.0};
  st.size_ratio_bins.assign(st.size_ratio_edges.size() - 1, 0);
  st.brightness_bins.assign(10, 0);
  for (const AnnotatedSample* s : samples) {
    ++st.images;
    ++st.target_count_histogram[static_cast<int>(s->instance_masks.size())];
    const double area = static_cast<double>(s->image.size());
    for (const auto& m : s->instance_masks) {
      ++st.targets;
      const double ratio = m.count() / area;
      st.size_ratios.push_back(ratio);
      const auto edge = std::upper_bound(st.size_ratio_edges.begin() + 1, st.size_ratio_edges.end() - 1, ratio);
      ++st.size_ratio_bins[std::distance(st.size_ratio_edges.begin() + 1, edge)];
      const double rank = brightness_rank(s->image, m);
      st.brightness_ranks.push_back(rank);
      ++st.brightness_bins[std::min(9, static_cast<int>(rank * 10.0))];
    }
  }
  return st;
}

json to_json(const CorpusStatistics& s) {
  json counts = json::object();
  for (const auto& [k, v] : s.target_count_histogram) counts[std::to_string(k)] = v;
  return {{"images", s.images},
          {"targets", s.targets},
          {"target_count_histogram", counts},
          {"size_ratio", {{"values", s.size_ratios}, {"edges", s.size_ratio_edges}, {"counts", s.size_ratio_bins}}},
          {"brightness_rank",
           {{"values", s.brightness_ranks},
            {"edges", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}},
            {"counts", s.brightness_bins}}}};
}

void SynthConfig::validate() const {
  if (height < 1 || width < 1 || count < 0) throw std::invalid_argument("SynthConfig: invalid dims or count");
  if (target_count_probs.empty()) throw std::invalid_argument("SynthConfig: target_count_probs is empty");
  double sum = 0.0;
  for (double p : target_count_probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("SynthConfig: negative target count probability");
    sum += p;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("SynthConfig: target count probabilities sum to zero");
  if (target_radius < 0 || target_radius > 4)
    throw std::invalid_argument("SynthConfig: target footprint must fit in 9x9 (radius <= 4)");
  if (!(sigma_min > 0.0 && sigma_min <= sigma_max)) throw std::invalid_argument("SynthConfig: bad sigma range");
  if (!(amplitude_min > 0.0 && amplitude_min <= amplitude_max))
    throw std::invalid_argument("SynthConfig: bad amplitude range");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("SynthConfig: noise_std must be >= 0");
  if (border_margin < target_radius) throw std::invalid_argument("SynthConfig: border_margin < target_radius");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

SynthSample synth_one(const SynthConfig& cfg, int index) {
  cfg.validate();
  std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int h = cfg.height, w = cfg.width;
  GrayImage img(h, w);

  const double a = uniform(-1, 1), b = uniform(-1, 1), c = uniform(-1, 1);
  for (int y = 0; y < h; ++y) {
    const double v = h > 1 ? 2.0 * y / (h - 1) - 1.0 : 0.0;
    for (int x = 0; x < w; ++x) {
      const double u = w > 1 ? 2.0 * x / (w - 1) - 1.0 : 0.0;
      img(y, x) = cfg.background_level + cfg.ramp_amplitude * (0.5 * a * u + 0.5 * b * v + 0.25 * c * (u * u - v * v));
    }
  }
  for (int k = 0; k < cfg.clutter_blobs; ++k) {
    const double by = uniform(0, h), bx = uniform(0, w);
    const double bs = uniform(cfg.clutter_sigma_min, cfg.clutter_sigma_max);
    const double amp = cfg.clutter_amplitude * uniform(-1, 1);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double r2 = (y - by) * (y - by) + (x - bx) * (x - bx);
        img(y, x) += amp * std::exp(-r2 / (2.0 * bs * bs));
      }
  }
  if (cfg.noise_std > 0.0)
    for (double& v : img.pixels()) v += cfg.noise_std * gauss(rng);

  std::discrete_distribution<int> count_dist(cfg.target_count_probs.begin(), cfg.target_count_probs.end());
  const int targets = count_dist(rng);

  // Chebyshev spacing keeps footprints disjoint and masks non-adjacent.
  const int spacing = 2 * cfg.target_radius + 2;
  const int lo_y = cfg.border_margin, hi_y = h - 1 - cfg.border_margin;
  const int lo_x = cfg.border_margin, hi_x = w - 1 - cfg.border_margin;
  if (targets > 0 && (hi_y < lo_y || hi_x < lo_x))
    throw GenerationError("image too small to place targets inside the border margin");
  std::uniform_int_distribution<int> py(std::max(lo_y, 0), std::max(hi_y, 0));
  std::uniform_int_distribution<int> px(std::max(lo_x, 0), std::max(hi_x, 0));

  SynthSample out;
  std::vector<BinaryMask> instances;
  for (int t = 0; t < targets; ++t) {
    PlantedTarget pt;
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      pt.cy = py(rng);
      pt.cx = px(rng);
      placed = std::all_of(out.planted.begin(), out.planted.end(), [&](const PlantedTarget& o) {
        return std::max(std::abs(o.cy - pt.cy), std::abs(o.cx - pt.cx)) >= spacing;
      });
    }
    if (!placed)
      throw GenerationError("cannot place " + std::to_string(targets) + " non-overlapping targets in a " +
                            std::to_string(h) + "x" + std::to_string(w) + " image");
    pt.sigma = uniform(cfg.sigma_min, cfg.sigma_max);
    pt.amplitude = uniform(cfg.amplitude_min, cfg.amplitude_max);
    BinaryMask mask(h, w);
    const int r = cfg.target_radius;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const double contrib = pt.amplitude * std::exp(-(dy * dy + dx * dx) / (2.0 * pt.sigma * pt.sigma));
        img(pt.cy + dy, pt.cx + dx) += contrib;
        if (contrib > 0.5 * pt.amplitude) mask.set(pt.cy + dy, pt.cx + dx, true);
      }
    pt.mask_pixels = mask.count();
    out.planted.push_back(pt);
    instances.push_back(std::move(mask));
  }
  for (double& v : img.pixels()) v = std::clamp(v, 0.0, 1.0);

  char id[32];
  std::snprintf(id, sizeof id, "synth_%05d", index);
  out.sample = annotate_instances(id, std::move(img), std::move(instances));
  return out;
}

std::vector<SynthSample> synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<SynthSample> out(static_cast<std::size_t>(cfg.count));
  std::string failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < cfg.count; ++i) {
    try {
      out[i] = synth_one(cfg, i);
    } catch (const GenerationError& e) {
#pragma omp critical
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw GenerationError(failure);
  return out;
}

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig c;
  auto read = [&](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  try {
    read("height", c.height);
    read("width", c.width);
    read("count", c.count);
    read("seed", c.seed);
    read("target_count_probs", c.target_count_probs);
    read("sigma_min", c.sigma_min);
    read("sigma_max", c.sigma_max);
    read("amplitude_min", c.amplitude_min);
    read("amplitude_max", c.amplitude_max);
    read("background_level", c.background_level);
    read("ramp_amplitude", c.ramp_amplitude);
    read("clutter_blobs", c.clutter_blobs);
    read("clutter_amplitude", c.clutter_amplitude);
    read("clutter_sigma_min", c.clutter_sigma_min);
    read("clutter_sigma_max", c.clutter_sigma_max);
    read("noise_std", c.noise_std);
    read("target_radius", c.target_radius);
    read("border_margin", c.border_margin);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed synth config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const SynthConfig& c) {
  return {{"height", c.height},
          {"width", c.width},
          {"count", c.count},
          {"seed", c.seed},
          {"target_count_probs", c.target_count_probs},
          {"sigma_min", c.sigma_min},
          {"sigma_max", c.sigma_max},
          {"amplitude_min", c.amplitude_min},
          {"amplitude_max", c.amplitude_max},
          {"background_level", c.background_level},
          {"ramp_amplitude", c.ramp_amplitude},
          {"clutter_blobs", c.clutter_blobs},
          {"clutter_amplitude", c.clutter_amplitude},
          {"clutter_sigma_min", c.clutter_sigma_min},
          {"clutter_sigma_max", c.clutter_sigma_max},
          {"noise_std", c.noise_std},
          {"target_radius", c.target_radius},
          {"border_margin", c.border_margin}};
}

}  // namespace irstd
