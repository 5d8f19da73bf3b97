#include "stablehash/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stablehash/image.hpp"
#include "stablehash/rng.hpp"

namespace stablehash {

void NoiseModel::validate() const {
  if (gaussian_sigma < 0 || occlusion_rate < 0 || occlusion_rate > 1 ||
      occlusion_size < 0 || shift_range < 0 || illumination_range < 0) {
    throw InputError("noise parameters must be non-negative");
  }
}

void SyntheticSpec::validate() const {
  if (classes < 2) throw InputError("synthetic spec needs >= 2 classes");
  if (samples_per_class < 2) throw InputError("synthetic spec needs >= 2 samples per class");
  if (height < 4 || width < 4) throw InputError("synthetic image too small");
  noise.validate();
}

void ExperimentSpec::validate() const {
  base.validate();
  if (test_per_class < 0 || unknown_classes < 0 || unknown_samples_per_class < 0) {
    throw InputError("experiment counts must be non-negative");
  }
}

Image synthetic_center(std::uint64_t seed, int index, int height, int width) {
  Rng rng(splitmix64(seed ^ splitmix64(0xC0FFEEULL + static_cast<std::uint64_t>(index))));
  Image field = Image::Zero(height, width);
  const int components = 12;
  for (int k = 0; k < components; ++k) {
    const double amp = rng.normal() / (1.0 + 0.4 * k);
    const double freq = rng.uniform(0.4, 3.6);
    const double angle = rng.uniform(0.0, M_PI);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    const double fy = freq * std::sin(angle) / height;
    const double fx = freq * std::cos(angle) / width;
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        field(r, c) += amp * std::cos(2.0 * M_PI * (fy * r + fx * c) + phase);
      }
    }
  }
  const double lo = field.minCoeff();
  const double hi = field.maxCoeff();
  const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
  field = ((field.array() - lo) / span) * 0.7 + 0.15;
  return field;
}

Image perturb_image(const Image& center, const NoiseModel& noise, Rng& rng) {
  const int h = static_cast<int>(center.rows());
  const int w = static_cast<int>(center.cols());
  Image img(h, w);

  // Small translation with edge-replicated sampling.
  const int dy = noise.shift_range > 0
                     ? static_cast<int>(rng.uniform_int(-noise.shift_range, noise.shift_range))
                     : 0;
  const int dx = noise.shift_range > 0
                     ? static_cast<int>(rng.uniform_int(-noise.shift_range, noise.shift_range))
                     : 0;
  for (int r = 0; r < h; ++r) {
    const int sr = std::clamp(r + dy, 0, h - 1);
    for (int c = 0; c < w; ++c) {
      const int sc = std::clamp(c + dx, 0, w - 1);
      img(r, c) = center(sr, sc);
    }
  }

  // Multiplicative illumination gain.
  if (noise.illumination_range > 0) {
    const double gain =
        rng.uniform(1.0 - noise.illumination_range, 1.0 + noise.illumination_range);
    img *= gain;
  }

  // Additive pixel noise.
  if (noise.gaussian_sigma > 0) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        img(r, c) += rng.normal(0.0, noise.gaussian_sigma);
      }
    }
  }

  // Optional occluded patch.
  if (noise.occlusion_size > 0 && noise.occlusion_rate > 0 &&
      rng.uniform() < noise.occlusion_rate) {
    const int ps = std::min({noise.occlusion_size, h, w});
    const int top = static_cast<int>(rng.uniform_int(0, h - ps));
    const int left = static_cast<int>(rng.uniform_int(0, w - ps));
    img.block(top, left, ps, ps).setZero();
  }

  clamp01(img);
  return img;
}

namespace {

std::string user_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "u%03d", index);
  return buf;
}

void emit_class(Dataset& ds, const SyntheticSpec& spec, int class_index,
                int train_count, int test_count, Split extra_split,
                int extra_count, const std::string& user_id) {
  const Image center =
      synthetic_center(spec.seed, class_index, spec.height, spec.width);
  int sample_index = 0;
  auto emit = [&](Split split, int count) {
    for (int s = 0; s < count; ++s, ++sample_index) {
      Rng rng(splitmix64(spec.seed ^
                         splitmix64((static_cast<std::uint64_t>(class_index) << 20) +
                                    static_cast<std::uint64_t>(sample_index) + 0x5EEDULL)));
      DatasetRecord rec;
      rec.sample.pixels = perturb_image(center, spec.noise, rng);
      rec.user_id = user_id;
      rec.split = split;
      ds.add(std::move(rec));
    }
  };
  emit(Split::kTrain, train_count);
  emit(Split::kTest, test_count);
  emit(extra_split, extra_count);
}

}  // namespace

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  Dataset ds;
  for (int c = 0; c < spec.classes; ++c) {
    emit_class(ds, spec, c, spec.samples_per_class, 0, Split::kTrain, 0,
               user_name(c));
  }
  ds.assign_labels();
  return ds;
}

Dataset generate_experiment(const ExperimentSpec& spec) {
  spec.validate();
  Dataset ds;
  for (int c = 0; c < spec.base.classes; ++c) {
    emit_class(ds, spec.base, c, spec.base.samples_per_class,
               spec.test_per_class, Split::kTrain, 0, user_name(c));
  }
  for (int u = 0; u < spec.unknown_classes; ++u) {
    const int class_index = spec.base.classes + u;
    SyntheticSpec unknown_spec = spec.base;
    Dataset tmp;
    emit_class(tmp, unknown_spec, class_index, 0, 0, Split::kUnknown,
               spec.unknown_samples_per_class, user_name(class_index));
    for (auto& r : tmp.records()) ds.add(std::move(r));
  }
  ds.assign_labels();
  return ds;
}

Dataset ingest(const std::string& manifest_path, int rows, int cols) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest '" + manifest_path + "'");
  std::string header;
  if (!std::getline(in, header) || header != "stablehash-manifest 1") {
    throw IoError("manifest '" + manifest_path +
                  "' missing header 'stablehash-manifest 1'");
  }
  const auto base_dir = std::filesystem::path(manifest_path).parent_path();
  Dataset ds;
  std::string line;
  int record_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++record_index;
    std::istringstream fields(line);
    std::string path, user_id, split;
    if (!std::getline(fields, path, '\t') || !std::getline(fields, user_id, '\t') ||
        !std::getline(fields, split, '\t')) {
      throw IoError("manifest record " + std::to_string(record_index) +
                    ": expected <path>\\t<user_id>\\t<split>");
    }
    DatasetRecord rec;
    try {
      auto p = std::filesystem::path(path);
      if (p.is_relative()) p = base_dir / p;
      Image img = read_image(p.string());
      rec.sample.pixels = resize_bilinear(img, rows, cols);
      clamp01(rec.sample.pixels);
      rec.split = split_from_name(split);
    } catch (const Error& e) {
      throw IoError("manifest record " + std::to_string(record_index) + " (" +
                    path + "): " + e.what());
    }
    rec.user_id = user_id;
    ds.add(std::move(rec));
  }
  ds.assign_labels();
  return ds;
}

}  // namespace stablehash
