// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#include "mvvt/plantgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "mvvt/errors.hpp"

namespace mvvt {

namespace {

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// symmetric 3x3 quadric of an ellipsoid, A = sum e_i e_i^T / a_i^2
struct Sym3 {
  double m[3][3] = {};
  Vec3 apply(Vec3 p) const {
    return {m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z};
  }
};

void rank1_add(Sym3& s, Vec3 e, double inv_a2) {
  const double v[3] = {e.x, e.y, e.z};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s.m[i][j] += v[i] * v[j] * inv_a2;
}

// growth-law primitives; the tiny slack keeps floor() stable when
// rate * day lands on an integer up to rounding
int64_t leaf_count_at(const GrowthParams& g, int64_t day) {
  const int64_t grown = g.initial_leaves + static_cast<int64_t>(std::floor(g.leaf_rate * static_cast<double>(day) + 1e-9));
  return std::min(g.max_leaves, grown);
}

double height_at(const GrowthParams& g, int64_t day) {
  return std::min(g.max_height, g.height_rate * static_cast<double>(day));
}

int64_t appearance_day(const GrowthParams& g, int64_t leaf_index, int64_t day) {
  for (int64_t d = 1; d <= day; ++d) {
    if (leaf_count_at(g, d) > leaf_index) return d;
  }
  return day;
}

constexpr double kMaturityDays = 12.0;
constexpr double kThicknessRatio = 0.45;  // leaf thickness / width

}  // namespace

const char* to_string(Crop c) {
  switch (c) {
    case Crop::kWheat: return "wheat";
    case Crop::kMustard: return "mustard";
    case Crop::kRadish: return "radish";
    case Crop::kOkra: return "okra";
  }
  return "?";
}

Crop crop_from_string(const std::string& name) {
  if (name == "wheat") return Crop::kWheat;
  if (name == "mustard") return Crop::kMustard;
  if (name == "radish") return Crop::kRadish;
  if (name == "okra") return Crop::kOkra;
  throw ConfigError("unknown crop '" + name + "' (expected wheat, mustard, radish or okra)");
}

int64_t crop_max_days(Crop c) {
  switch (c) {
    case Crop::kWheat: return 118;
    case Crop::kMustard: return 50;
    case Crop::kRadish: return 59;
    case Crop::kOkra: return 86;
  }
  return 0;
}

void PlantSpec::validate() const {
  if (growth.initial_leaves < 1) throw ConfigError("plant spec: initial_leaves must be >= 1");
  if (growth.leaf_rate <= 0) throw ConfigError("plant spec: leaf_rate must be > 0");
  if (growth.max_leaves < growth.initial_leaves)
    throw ConfigError("plant spec: max_leaves must be >= initial_leaves");
  if (growth.height_rate <= 0 || growth.max_height <= 0)
    throw ConfigError("plant spec: height parameters must be positive");
  if (morph.leaf_length <= 0 || morph.leaf_width <= 0 || morph.stem_width <= 0)
    throw ConfigError("plant spec: morphology pixel parameters must be positive");
  if (plant_id.empty()) throw ConfigError("plant spec: plant_id must be non-empty");
}

void RenderConfig::validate() const {
  if (image_height < 8 || image_width < 8) throw ConfigError("render config: image too small");
  if (num_angles < 1 || angle_step < 1 || num_angles * angle_step != 360)
    throw ConfigError("render config: num_angles * angle_step must equal 360");
  if (num_levels < 1) throw ConfigError("render config: num_levels must be >= 1");
  if (!camera_elevations.empty() &&
      static_cast<int64_t>(camera_elevations.size()) != num_levels)
    throw ConfigError("render config: camera_elevations must have one entry per level");
  if (!(background >= 0.0 && background <= 1.0))
    throw ConfigError("render config: background must be in [0, 1]");
}

double RenderConfig::elevation_deg(int64_t level) const {
  if (camera_elevations.empty()) return 4.0 * static_cast<double>(level - 1);
  return camera_elevations[static_cast<size_t>(level - 1)];
}

GrowthState growth_state(const PlantSpec& spec, int64_t day) {
  spec.validate();
  if (day < 1 || day > crop_max_days(spec.crop)) {
    throw ConfigError("day " + std::to_string(day) + " out of range 1.." +
                      std::to_string(crop_max_days(spec.crop)) + " for crop " +
                      to_string(spec.crop));
  }
  GrowthState st;
  st.day = day;
  st.leaf_count = leaf_count_at(spec.growth, day);
  st.height = height_at(spec.growth, day);
  st.leaves.reserve(static_cast<size_t>(st.leaf_count));
  RngStream root(spec.seed);
  for (int64_t i = 0; i < st.leaf_count; ++i) {
    RngStream leaf_rng = root.fork(1000 + static_cast<uint64_t>(i));
    const double az_jitter = leaf_rng.next_uniform(-0.35, 0.35);
    const double len_scale = leaf_rng.next_uniform(0.8, 1.15);
    const double wid_scale = leaf_rng.next_uniform(0.8, 1.2);
    const double droop_scale = leaf_rng.next_uniform(0.7, 1.3);
    const double attach_frac = leaf_rng.next_uniform(0.15, 0.8);
    const double color_r = leaf_rng.next_uniform(-0.05, 0.05);
    const double color_g = leaf_rng.next_uniform(-0.08, 0.12);

    const int64_t appear = appearance_day(spec.growth, i, day);
    const double g = std::min(1.0, 0.3 + 0.7 * static_cast<double>(day - appear + 1) / kMaturityDays);

    LeafPlacement leaf;
    leaf.azimuth = static_cast<double>(i) * spec.morph.phyllotaxis_angle + az_jitter;
    leaf.attach_height = attach_frac * height_at(spec.growth, appear);
    leaf.length = g * spec.morph.leaf_length * len_scale;
    leaf.width = g * spec.morph.leaf_width * wid_scale;
    leaf.droop = spec.morph.leaf_droop * droop_scale;
    leaf.color_r = color_r;
    leaf.color_g = color_g;
    st.leaves.push_back(leaf);
  }
  return st;
}

ImageF render_view(const GrowthState& state, const PlantSpec& spec, int64_t angle, int64_t level,
                   const RenderConfig& cfg) {
  cfg.validate();
  if (angle < 0 || angle >= 360 || angle % cfg.angle_step != 0) {
    throw ConfigError("angle " + std::to_string(angle) + " is not a multiple of " +
                      std::to_string(cfg.angle_step) + " below 360");
  }
  if (level < 1 || level > cfg.num_levels) {
    throw ConfigError("level " + std::to_string(level) + " out of range 1.." +
                      std::to_string(cfg.num_levels));
  }
  const int64_t h = cfg.image_height, w = cfg.image_width;
  ImageF img;
  img.height = h;
  img.width = w;
  img.chw.assign(static_cast<size_t>(3 * h * w), static_cast<float>(cfg.background));

  const double theta = static_cast<double>(angle) * std::numbers::pi / 180.0;
  const double phi = cfg.elevation_deg(level) * std::numbers::pi / 180.0;
  const Vec3 right{-std::sin(theta), std::cos(theta), 0.0};
  const Vec3 up{-std::sin(phi) * std::cos(theta), -std::sin(phi) * std::sin(theta), std::cos(phi)};
  const Vec3 view{-std::cos(phi) * std::cos(theta), -std::cos(phi) * std::sin(theta), -std::sin(phi)};
  const double window_base = static_cast<double>(level - 1) * cfg.stride() - 2.0;

  auto paint = [&](int64_t y, int64_t x, double r, double g, double b) {
    img.at(0, y, x) = static_cast<float>(std::clamp(r, 0.0, 1.0));
    img.at(1, y, x) = static_cast<float>(std::clamp(g, 0.0, 1.0));
    img.at(2, y, x) = static_cast<float>(std::clamp(b, 0.0, 1.0));
  };
  auto sx = [&](int64_t x) { return static_cast<double>(x) + 0.5 - static_cast<double>(w) / 2.0; };
  auto ty = [&](int64_t y) { return window_base + static_cast<double>(h) - (static_cast<double>(y) + 0.5); };

  // stem: vertical cylinder projects to a thick segment at s = 0
  if (state.height > 0.0) {
    const double radius = spec.morph.stem_width / 2.0;
    const double t_top = state.height * std::cos(phi);
    const int64_t x0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(-radius + w / 2.0 - 0.5)));
    const int64_t x1 = std::min<int64_t>(w - 1, static_cast<int64_t>(std::ceil(radius + w / 2.0 - 0.5)));
    for (int64_t y = 0; y < h; ++y) {
      const double t = ty(y);
      // distance to segment [0, t_top] along t, at s distance |s|
      const double tc = std::clamp(t, 0.0, t_top);
      for (int64_t x = x0; x <= x1; ++x) {
        const double s = sx(x);
        const double d2 = s * s + (t - tc) * (t - tc);
        if (d2 <= radius * radius) paint(y, x, 0.42, 0.36, 0.18);
      }
    }
  }

  // leaves: ellipsoid silhouettes in index order
  for (const LeafPlacement& leaf : state.leaves) {
    if (leaf.length <= 0.0 || leaf.width <= 0.0) continue;
    const double ca = std::cos(leaf.azimuth), sa = std::sin(leaf.azimuth);
    const double cd = std::cos(leaf.droop), sd = std::sin(leaf.droop);
    const Vec3 e1{ca * cd, sa * cd, -sd};
    const Vec3 e2{-sa, ca, 0.0};
    const Vec3 e3 = cross(e1, e2);
    const double a = leaf.length / 2.0;
    const double b = leaf.width / 2.0;
    const double c = kThicknessRatio * leaf.width / 2.0;
    const Vec3 attach{0.0, 0.0, leaf.attach_height};
    const Vec3 center = attach + a * e1;

    Sym3 A;
    rank1_add(A, e1, 1.0 / (a * a));
    rank1_add(A, e2, 1.0 / (b * b));
    rank1_add(A, e3, 1.0 / (c * c));

    const Vec3 Av = A.apply(view);
    const double alpha = dot(view, Av);
    const double br = dot(right, Av);
    const double bu = dot(up, Av);
    const double err = dot(right, A.apply(right)) - br * br / alpha;
    const double eru = dot(right, A.apply(up)) - br * bu / alpha;
    const double euu = dot(up, A.apply(up)) - bu * bu / alpha;
    const double det = err * euu - eru * eru;
    if (det <= 0.0) continue;  // degenerate; cannot happen for positive axes
    const double half_s = std::sqrt(euu / det);
    const double half_t = std::sqrt(err / det);

    const double cs = dot(center, right);
    const double ct = dot(center, up);
    const int64_t x0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(cs - half_s + w / 2.0 - 0.5)));
    const int64_t x1 = std::min<int64_t>(w - 1, static_cast<int64_t>(std::ceil(cs + half_s + w / 2.0 - 0.5)));
    const int64_t y0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(window_base + h - (ct + half_t) - 0.5)));
    const int64_t y1 = std::min<int64_t>(h - 1, static_cast<int64_t>(std::ceil(window_base + h - (ct - half_t) - 0.5)));
    for (int64_t y = y0; y <= y1; ++y) {
      const double dt = ty(y) - ct;
      for (int64_t x = x0; x <= x1; ++x) {
        const double ds = sx(x) - cs;
        if (err * ds * ds + 2.0 * eru * ds * dt + euu * dt * dt <= 1.0) {
          paint(y, x, 0.13 + leaf.color_r, 0.48 + leaf.color_g, 0.10);
        }
      }
    }
  }
  return img;
}

std::vector<PlantSpec> make_plant_specs(Crop crop, int64_t count, uint64_t seed,
                                        const GrowthParams& base_growth,
                                        const Morphology& base_morph) {
  if (count < 1) throw ConfigError("plant count must be >= 1");
  std::vector<PlantSpec> specs;
  specs.reserve(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    RngStream jitter(RngStream::mix(seed, static_cast<uint64_t>(i + 1)));
    PlantSpec s;
    s.crop = crop;
    s.plant_id = "p" + std::to_string(i + 1);
    s.seed = RngStream::mix(seed, 0x9000 + static_cast<uint64_t>(i));
    s.growth = base_growth;
    s.growth.leaf_rate = base_growth.leaf_rate * jitter.next_uniform(0.85, 1.15);
    s.growth.height_rate = base_growth.height_rate * jitter.next_uniform(0.85, 1.15);
    s.growth.max_height = base_growth.max_height * jitter.next_uniform(0.9, 1.1);
    s.morph = base_morph;
    s.morph.leaf_length = base_morph.leaf_length * jitter.next_uniform(0.85, 1.15);
    s.morph.leaf_width = base_morph.leaf_width * jitter.next_uniform(0.85, 1.15);
    s.morph.leaf_droop = base_morph.leaf_droop * jitter.next_uniform(0.8, 1.2);
    s.validate();
    specs.push_back(std::move(s));
  }
  return specs;
}

Manifest generate_crop(const std::vector<PlantSpec>& specs, int64_t days, const RenderConfig& cfg,
                       const std::filesystem::path& out_root) {
  cfg.validate();
  if (specs.empty()) throw ConfigError("generate_crop: no plant specs");
  if (days < 1) throw ConfigError("generate_crop: days must be >= 1");
  for (size_t i = 0; i < specs.size(); ++i) {
    specs[i].validate();
    if (specs[i].crop != specs[0].crop)
      throw ConfigError("generate_crop: all specs must share one crop");
    for (size_t j = i + 1; j < specs.size(); ++j)
      if (specs[i].plant_id == specs[j].plant_id)
        throw ConfigError("generate_crop: duplicate plant_id '" + specs[i].plant_id + "'");
  }
  const std::string crop_name = to_string(specs[0].crop);
  std::error_code ec;
  std::filesystem::create_directories(out_root / crop_name, ec);
  if (ec) throw IoError("cannot create " + (out_root / crop_name).string() + ": " + ec.message());

  Manifest manifest;
  manifest.root = out_root;
  std::ofstream labels(out_root / crop_name / "labels.csv", std::ios::trunc);
  if (!labels) throw IoError("cannot write labels.csv under " + (out_root / crop_name).string());
  labels << "plant,day,age_days,leaf_count\n";

  for (const PlantSpec& spec : specs) {
    for (int64_t day = 1; day <= days; ++day) {
      const GrowthState state = growth_state(spec, day);
      labels << spec.plant_id << "," << day << "," << day << "," << state.leaf_count << "\n";
      for (int64_t level = 1; level <= cfg.num_levels; ++level) {
        const std::filesystem::path rel = std::filesystem::path(crop_name) / spec.plant_id /
                                          ("day_" + std::to_string(day)) /
                                          ("L" + std::to_string(level));
        std::filesystem::create_directories(out_root / rel, ec);
        if (ec) throw IoError("cannot create " + (out_root / rel).string());
        for (int64_t ai = 0; ai < cfg.num_angles; ++ai) {
          const int64_t angle = ai * cfg.angle_step;
          const ImageF img = render_view(state, spec, angle, level, cfg);
          const std::filesystem::path rel_file = rel / ("angle_" + std::to_string(angle) + ".png");
          write_png(out_root / rel_file, quantize(img));
          ManifestRecord rec;
          rec.crop = crop_name;
          rec.plant = spec.plant_id;
          rec.day = day;
          rec.level = level;
          rec.angle = angle;
          rec.path = rel_file.generic_string();
          rec.age_days = day;
          rec.leaf_count = state.leaf_count;
          manifest.records.push_back(std::move(rec));
        }
      }
    }
  }
  if (!labels) throw IoError("write failed for labels.csv");
  labels.close();
  std::sort(manifest.records.begin(), manifest.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.crop, a.plant, a.day, a.level, a.angle) <
           std::tie(b.crop, b.plant, b.day, b.level, b.angle);
  });
  return manifest;
}

}  // namespace mvvt
