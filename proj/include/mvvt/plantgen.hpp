// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic procedural generator of multi-view plant growth imagery.
// A plant is a vertical stem (cylinder) with ellipsoidal leaves placed by a
// phyllotaxis rule; every quantity is a pure function of (spec, day), so a
// dataset regenerates byte-identically and the labels are exact.

#include "mvvt/image.hpp"
#include "mvvt/manifest.hpp"
#include "mvvt/rng.hpp"

namespace mvvt {

enum class Crop { kWheat, kMustard, kRadish, kOkra };

const char* to_string(Crop c);
Crop crop_from_string(const std::string& name);

/// Capture-campaign length per crop.
int64_t crop_max_days(Crop c);

struct GrowthParams {
  int64_t initial_leaves = 2;  // l0
  double leaf_rate = 0.3;      // leaves per day
  int64_t max_leaves = 30;
  double height_rate = 1.5;    // pixels per day
  double max_height = 96.0;    // pixels
};

struct Morphology {
  double leaf_length = 22.0;        // pixels, mature
  double leaf_width = 9.0;          // pixels, mature
  double stem_width = 3.0;          // pixels
  double leaf_droop = 0.35;         // radians below horizontal
  double phyllotaxis_angle = 2.39996;  // radians between successive leaves
};

struct PlantSpec {
  Crop crop = Crop::kRadish;
  std::string plant_id = "p1";
  uint64_t seed = 0;
  GrowthParams growth;
  Morphology morph;

  void validate() const;
};

struct LeafPlacement {
  double azimuth = 0.0;        // radians
  double attach_height = 0.0;  // pixels up the stem, fixed at appearance
  double length = 0.0;         // current length, pixels
  double width = 0.0;
  double droop = 0.0;          // radians
  double color_r = 0.0;        // per-leaf color jitter
  double color_g = 0.0;
};

struct GrowthState {
  int64_t day = 0;
  int64_t leaf_count = 0;
  double height = 0.0;  // pixels
  std::vector<LeafPlacement> leaves;
};

struct RenderConfig {
  int64_t image_height = 64;
  int64_t image_width = 64;
  int64_t num_angles = 24;
  int64_t angle_step = 15;  // degrees
  int64_t num_levels = 5;
  double background = 0.85;
  /// Camera elevation per level, degrees; empty selects 4 degrees per level
  /// index (0, 4, 8, ...).
  std::vector<double> camera_elevations;
  /// Vertical offset between consecutive level windows, pixels; 0 selects
  /// image_height / 2.
  double level_stride = 0.0;

  void validate() const;
  double elevation_deg(int64_t level) const;  // level is 1-based
  double stride() const { return level_stride > 0 ? level_stride : image_height / 2.0; }
};

/// leaf_count = min(max_leaves, l0 + floor(rate * day)); height saturates at
/// max_height. Leaf attach points and orientations are fixed when a leaf
/// appears; leaves then grow toward mature size, so rendered foreground is
/// nondecreasing in day.
GrowthState growth_state(const PlantSpec& spec, int64_t day);

/// Orthographic render of the plant rotated by `angle` degrees, seen at the
/// level's camera elevation through the level's vertical crop window
/// (level 1 = base). No anti-aliasing; output values in [0, 1].
ImageF render_view(const GrowthState& state, const PlantSpec& spec, int64_t angle, int64_t level,
                   const RenderConfig& cfg);

/// Expands a crop archetype into per-plant specs with seeded growth and
/// morphology jitter, so plants differ but regenerate identically.
std::vector<PlantSpec> make_plant_specs(Crop crop, int64_t count, uint64_t seed,
                                        const GrowthParams& base_growth, const Morphology& base_morph);

/// Renders days 1..days for every spec into
///   <out_root>/<crop>/<plant>/day_<d>/L<k>/angle_<a>.png
/// and writes <out_root>/<crop>/labels.csv with exact per-day labels.
Manifest generate_crop(const std::vector<PlantSpec>& specs, int64_t days, const RenderConfig& cfg,
                       const std::filesystem::path& out_root);

}  // namespace mvvt
