#include "taco/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "taco/error.hpp"
#include "taco/png_io.hpp"
#include "taco/rng.hpp"

namespace taco {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Per-dataset appearance derived from the dataset seed and its position in the
// corpus. Base intensities are spread by the golden ratio so any two datasets
// of one corpus sit at visibly different brightness levels.
struct Modality {
  double base = 0.5;
  double tint[3] = {1.0, 1.0, 1.0};
  int grid = 4;
  double grain = 0.02;
  double stripe_freq = 0.0;
  double stripe_amp = 0.0;
  std::vector<double> class_offset;
};

Modality make_modality(const DatasetSpec& d, std::size_t index, std::uint64_t dataset_seed) {
  Rng rng(dataset_seed);
  Modality m;
  const double golden = 0.6180339887498949;
  m.base = 0.18 + 0.55 * std::fmod(0.21 + golden * static_cast<double>(index), 1.0);
  if (!d.grayscale) {
    for (double& t : m.tint) t = uniform_real(rng, 0.55, 1.0);
  }
  m.grid = 3 + static_cast<int>(uniform_index(rng, 6));
  m.grain = uniform_real(rng, 0.0, 0.06);
  m.stripe_freq = uniform_real(rng, 0.05, 0.35);
  m.stripe_amp = uniform_real(rng, 0.0, 0.08);
  for (int c = 0; c < d.num_classes; ++c) {
    const double sign = m.base > 0.45 ? -1.0 : 1.0;
    m.class_offset.push_back(sign * uniform_real(rng, 0.15, 0.35));
  }
  return m;
}

// Low-frequency field: random coarse grid, bilinearly upsampled, in [-1, 1].
std::vector<double> smooth_field(int h, int w, int grid, Rng& rng) {
  std::vector<double> coarse(static_cast<std::size_t>(grid + 1) * (grid + 1));
  for (double& v : coarse) v = uniform_real(rng, -1.0, 1.0);
  std::vector<double> field(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    const double gy = static_cast<double>(y) / std::max(1, h - 1) * grid;
    const int y0 = std::min(static_cast<int>(gy), grid - 1);
    const double ty = gy - y0;
    for (int x = 0; x < w; ++x) {
      const double gx = static_cast<double>(x) / std::max(1, w - 1) * grid;
      const int x0 = std::min(static_cast<int>(gx), grid - 1);
      const double tx = gx - x0;
      auto at = [&](int yy, int xx) { return coarse[static_cast<std::size_t>(yy) * (grid + 1) + xx]; };
      const double top = at(y0, x0) * (1 - tx) + at(y0, x0 + 1) * tx;
      const double bot = at(y0 + 1, x0) * (1 - tx) + at(y0 + 1, x0 + 1) * tx;
      field[static_cast<std::size_t>(y) * w + x] = top * (1 - ty) + bot * ty;
    }
  }
  return field;
}

void draw_blob(Mask& mask, std::uint8_t label, const DatasetSpec& d, Rng& rng) {
  const int h = mask.height();
  const int w = mask.width();
  const double side = std::min(h, w);
  const double cy = uniform_real(rng, 0.0, h - 1);
  const double cx = uniform_real(rng, 0.0, w - 1);
  const double ry = uniform_real(rng, d.min_radius, d.max_radius) * side;
  const double rx = uniform_real(rng, d.min_radius, d.max_radius) * side;
  const double angle = uniform_real(rng, 0.0, kPi);
  const bool polygon = uniform01(rng) < 0.5;
  std::vector<double> radial;
  if (polygon) {
    const int vertices = 5 + static_cast<int>(uniform_index(rng, 4));
    for (int i = 0; i < vertices; ++i) radial.push_back(uniform_real(rng, 0.6, 1.0));
  }
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  auto inside = [&](double py, double px) {
    const double dy = py - cy;
    const double dx = px - cx;
    const double u = (dx * ca + dy * sa) / rx;
    const double v = (-dx * sa + dy * ca) / ry;
    const double r = std::sqrt(u * u + v * v);
    if (!polygon) return r <= 1.0;
    // Star-shaped polygon: piecewise-linear radius over the vertex angles.
    double theta = std::atan2(v, u);
    if (theta < 0) theta += 2 * kPi;
    const double seg = 2 * kPi / static_cast<double>(radial.size());
    const std::size_t i0 = static_cast<std::size_t>(theta / seg) % radial.size();
    const std::size_t i1 = (i0 + 1) % radial.size();
    const double t = theta / seg - std::floor(theta / seg);
    return r <= radial[i0] * (1 - t) + radial[i1] * t;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (inside(y, x)) mask.at(y, x) = label;
    }
  }
  // The blob center always carries the label so every blob is non-empty.
  mask.at(static_cast<int>(std::lround(cy)), static_cast<int>(std::lround(cx))) = label;
}

Sample generate_sample(const DatasetSpec& d, const Modality& m, std::uint64_t sample_seed, std::size_t index) {
  Rng rng(sample_seed);
  Sample s;
  s.dataset_id = d.dataset_id;
  std::ostringstream id;
  id << d.dataset_id << '_' << std::setw(5) << std::setfill('0') << index;
  s.sample_id = id.str();
  s.mask = Mask(d.height, d.width);
  const int blobs = d.min_blobs + static_cast<int>(uniform_index(rng, d.max_blobs - d.min_blobs + 1));
  for (int b = 0; b < blobs; ++b) {
    const auto label = static_cast<std::uint8_t>(1 + uniform_index(rng, d.num_classes));
    draw_blob(s.mask, label, d, rng);
  }
  const std::vector<double> field = smooth_field(d.height, d.width, m.grid, rng);
  const double phase = uniform_real(rng, 0.0, 2 * kPi);
  s.image = Image(d.height, d.width);
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      double v = m.base + d.texture_amplitude * field[static_cast<std::size_t>(y) * d.width + x];
      v += m.stripe_amp * std::sin(m.stripe_freq * (x + 0.5 * y) + phase);
      const int label = s.mask.at(y, x);
      if (label > 0) v += m.class_offset[label - 1];
      v += m.grain * standard_normal(rng);
      for (int c = 0; c < Image::kChannels; ++c) {
        const double tinted = d.grayscale ? v : v * m.tint[c] + 0.1 * (1.0 - m.tint[c]);
        s.image.at(c, y, x) = static_cast<float>(std::clamp(tinted, 0.0, 1.0));
      }
    }
  }
  return s;
}

json meta_to_json(const DatasetMeta& m) {
  return json{{"dataset_id", m.dataset_id},
              {"is_grayscale", m.is_grayscale},
              {"num_classes", m.num_classes},
              {"seen", m.seen},
              {"modality_tag", m.modality_tag}};
}

DatasetMeta meta_from_json(const json& j, const fs::path& where) {
  try {
    DatasetMeta m;
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.is_grayscale = j.at("is_grayscale").get<bool>();
    m.num_classes = j.at("num_classes").get<int>();
    m.seen = j.value("seen", true);
    m.modality_tag = j.value("modality_tag", std::string());
    if (m.num_classes < 1) throw DataError("num_classes must be positive in " + where.string());
    return m;
  } catch (const json::exception& e) {
    throw DataError("malformed " + where.string() + ": " + e.what());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

const DatasetMeta& Corpus::meta(const std::string& dataset_id) const {
  for (const auto& d : datasets) {
    if (d.dataset_id == dataset_id) return d;
  }
  throw DataError("unknown dataset " + dataset_id);
}

void CorpusSpec::validate() const {
  if (datasets.empty()) throw ConfigError("corpus spec has no datasets");
  std::set<std::string> ids;
  for (const auto& d : datasets) {
    if (d.dataset_id.empty()) throw ConfigError("dataset_id must be non-empty");
    if (!ids.insert(d.dataset_id).second) throw ConfigError("duplicate dataset_id " + d.dataset_id);
    if (d.height < 32 || d.width < 32) throw ConfigError(d.dataset_id + ": image sides must be >= 32");
    if (d.num_samples < 4) throw ConfigError(d.dataset_id + ": need at least 4 samples");
    if (d.num_classes < 1 || d.num_classes > 15) throw ConfigError(d.dataset_id + ": num_classes must be in [1, 15]");
    if (d.min_blobs < 1 || d.max_blobs < d.min_blobs) throw ConfigError(d.dataset_id + ": invalid blob count range");
    if (!(d.min_radius > 0) || d.max_radius < d.min_radius || d.max_radius > 1.0) {
      throw ConfigError(d.dataset_id + ": invalid blob radius range");
    }
    if (d.texture_amplitude < 0 || d.texture_amplitude > 1) throw ConfigError(d.dataset_id + ": invalid texture amplitude");
  }
}

CorpusSpec corpus_spec_from_json(const std::string& text) {
  static const std::set<std::string> kTop = {"seed", "datasets"};
  static const std::set<std::string> kDataset = {"dataset_id",  "height",     "width",      "num_samples",
                                                 "grayscale",   "num_classes", "seen",       "min_blobs",
                                                 "max_blobs",   "min_radius", "max_radius", "texture_amplitude",
                                                 "modality_tag"};
  CorpusSpec spec;
  try {
    const json j = json::parse(text);
    for (const auto& [k, v] : j.items()) {
      if (!kTop.count(k)) throw ConfigError("unknown corpus config key '" + k + "'");
    }
    spec.seed = j.value("seed", std::uint64_t{0});
    for (const auto& d : j.at("datasets")) {
      for (const auto& [k, v] : d.items()) {
        if (!kDataset.count(k)) throw ConfigError("unknown dataset config key '" + k + "'");
      }
      DatasetSpec ds;
      ds.dataset_id = d.at("dataset_id").get<std::string>();
      ds.height = d.value("height", ds.height);
      ds.width = d.value("width", ds.width);
      ds.num_samples = d.value("num_samples", ds.num_samples);
      ds.grayscale = d.value("grayscale", ds.grayscale);
      ds.num_classes = d.value("num_classes", ds.num_classes);
      ds.seen = d.value("seen", ds.seen);
      ds.min_blobs = d.value("min_blobs", ds.min_blobs);
      ds.max_blobs = d.value("max_blobs", ds.max_blobs);
      ds.min_radius = d.value("min_radius", ds.min_radius);
      ds.max_radius = d.value("max_radius", ds.max_radius);
      ds.texture_amplitude = d.value("texture_amplitude", ds.texture_amplitude);
      ds.modality_tag = d.value("modality_tag", ds.modality_tag);
      spec.datasets.push_back(ds);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed corpus config: ") + e.what());
  }
  spec.validate();
  return spec;
}

CorpusSpec load_corpus_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read corpus config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return corpus_spec_from_json(ss.str());
}

Corpus generate_synthetic_corpus(const CorpusSpec& spec) {
  spec.validate();
  Corpus corpus;
  for (std::size_t di = 0; di < spec.datasets.size(); ++di) {
    const DatasetSpec& d = spec.datasets[di];
    const std::uint64_t dataset_seed = mix_seed(spec.seed, hash_string(d.dataset_id));
    const Modality m = make_modality(d, di, dataset_seed);
    DatasetMeta meta;
    meta.dataset_id = d.dataset_id;
    meta.is_grayscale = d.grayscale;
    meta.num_classes = d.num_classes;
    meta.seen = d.seen;
    meta.modality_tag = d.modality_tag.empty() ? (d.grayscale ? "synthetic-gray" : "synthetic-rgb") : d.modality_tag;
    corpus.datasets.push_back(meta);
    for (int i = 0; i < d.num_samples; ++i) {
      corpus.samples.push_back(generate_sample(d, m, mix_seed(dataset_seed, static_cast<std::uint64_t>(i)), i));
    }
  }
  return corpus;
}

void write_corpus(const Corpus& corpus, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw DataError("cannot create " + root.string() + ": " + ec.message());
  for (const auto& meta : corpus.datasets) {
    const fs::path dir = root / meta.dataset_id;
    fs::create_directories(dir / "images", ec);
    fs::create_directories(dir / "masks", ec);
    if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
    std::ofstream out(dir / "meta.json");
    if (!out) throw DataError("cannot write " + (dir / "meta.json").string());
    out << meta_to_json(meta).dump(2) << '\n';
  }
  for (const auto& s : corpus.samples) {
    const fs::path dir = root / s.dataset_id;
    write_png_rgb(dir / "images" / (s.sample_id + ".png"), s.image);
    write_png_mask(dir / "masks" / (s.sample_id + ".png"), s.mask);
  }
}

Corpus ingest_corpus(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("corpus root is not a directory: " + root.string());
  std::vector<fs::path> dataset_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) dataset_dirs.push_back(entry.path());
  }
  std::sort(dataset_dirs.begin(), dataset_dirs.end());
  if (dataset_dirs.empty()) throw DataError("no datasets (meta.json) under " + root.string());

  Corpus corpus;
  std::set<std::string> sample_ids;
  for (const auto& dir : dataset_dirs) {
    const DatasetMeta meta = meta_from_json(json::parse(read_text(dir / "meta.json"), nullptr, false), dir / "meta.json");
    corpus.datasets.push_back(meta);
    std::vector<fs::path> images;
    if (fs::is_directory(dir / "images")) {
      for (const auto& entry : fs::directory_iterator(dir / "images")) {
        if (entry.path().extension() == ".png") images.push_back(entry.path());
      }
    }
    std::sort(images.begin(), images.end());
    for (const auto& image_path : images) {
      const std::string id = image_path.stem().string();
      const fs::path mask_path = dir / "masks" / (id + ".png");
      if (!fs::exists(mask_path)) throw DataError("missing mask for image " + image_path.string());
      Sample s;
      s.dataset_id = meta.dataset_id;
      s.sample_id = id;
      s.image = read_png_rgb(image_path);
      s.mask = read_png_mask(mask_path);
      if (s.image.height() != s.mask.height() || s.image.width() != s.mask.width()) {
        throw DataError("image/mask shape mismatch for " + image_path.string());
      }
      if (s.mask.max_label() > meta.num_classes) {
        throw DataError("mask value " + std::to_string(s.mask.max_label()) + " exceeds num_classes " +
                        std::to_string(meta.num_classes) + " in " + mask_path.string());
      }
      if (meta.is_grayscale) {
        const std::size_t plane = s.image.plane_size();
        const auto& d = s.image.data();
        for (std::size_t i = 0; i < plane; ++i) {
          if (d[i] != d[i + plane] || d[i] != d[i + 2 * plane]) {
            throw DataError("grayscale dataset has a color image: " + image_path.string());
          }
        }
      }
      if (!sample_ids.insert(id).second) throw DataError("duplicate sample id " + id);
      corpus.samples.push_back(std::move(s));
    }
  }
  return corpus;
}

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw DataError("unknown split name '" + name + "'");
}

Split SplitAssignment::at(const std::string& sample_id) const {
  auto it = map_.find(sample_id);
  if (it == map_.end()) throw DataError("sample " + sample_id + " has no split assignment");
  return it->second;
}

std::size_t SplitAssignment::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(map_.begin(), map_.end(), [&](const auto& kv) { return kv.second == split; }));
}

std::string SplitAssignment::to_json() const {
  json j = json::object();
  for (const auto& [id, split] : map_) j[id] = split_name(split);
  return j.dump(1);
}

SplitAssignment SplitAssignment::from_json(const std::string& text) {
  SplitAssignment out;
  try {
    const json j = json::parse(text);
    for (const auto& [id, v] : j.items()) out.assign(id, parse_split(v.get<std::string>()));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  }
  return out;
}

void SplitAssignment::save(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json() << '\n';
}

SplitAssignment SplitAssignment::load(const fs::path& path) { return from_json(read_text(path)); }

SplitAssignment split_corpus(const std::vector<Sample>& samples, const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  std::map<std::string, std::vector<std::size_t>> by_dataset;
  for (std::size_t i = 0; i < samples.size(); ++i) by_dataset[samples[i].dataset_id].push_back(i);

  SplitAssignment out;
  for (auto& [dataset_id, indices] : by_dataset) {
    const std::size_t n = indices.size();
    if (n < 3) throw DataError("dataset " + dataset_id + " has fewer than 3 samples; cannot populate all splits");
    Rng rng(mix_seed(seed, hash_string(dataset_id)));
    for (std::size_t i = n - 1; i > 0; --i) std::swap(indices[i], indices[uniform_index(rng, i + 1)]);
    const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n) + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(n) + 1e-9));
    const std::size_t n_train = n - n_val - n_test;
    for (std::size_t i = 0; i < n; ++i) {
      const Split s = i < n_train ? Split::kTrain : (i < n_train + n_val ? Split::kVal : Split::kTest);
      if (out.contains(samples[indices[i]].sample_id)) {
        throw DataError("duplicate sample id " + samples[indices[i]].sample_id);
      }
      out.assign(samples[indices[i]].sample_id, s);
    }
  }
  return out;
}

}  // namespace taco
