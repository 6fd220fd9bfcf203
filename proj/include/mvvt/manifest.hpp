// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mvvt {

/// One image on disk, keyed by (crop, plant, day, level, angle).
struct ManifestRecord {
  std::string crop;
  std::string plant;
  int64_t day = 0;
  int64_t level = 0;   // 1-based
  int64_t angle = 0;   // degrees
  std::string path;    // relative to the dataset root
  int64_t age_days = 0;
  int64_t leaf_count = 0;
};

/// (crop, plant, day) — the unit samples, labels, and splits are keyed by.
struct ItemKey {
  std::string crop;
  std::string plant;
  int64_t day = 0;

  auto operator<=>(const ItemKey&) const = default;
  std::string str() const { return crop + "/" + plant + "/day_" + std::to_string(day); }
};

struct Manifest {
  std::filesystem::path root;
  std::vector<ManifestRecord> records;  // sorted by (crop, plant, day, level, angle)

  /// Distinct item keys in sorted order.
  std::vector<ItemKey> items() const;
  /// Distinct sorted angles observed for a crop.
  std::vector<int64_t> angles(const std::string& crop) const;
  /// Distinct sorted levels observed for a crop.
  std::vector<int64_t> levels(const std::string& crop) const;
};

/// Cache file: first line "mvvt-manifest v1", then one record per line with
/// tab-separated fields crop, plant, day, level, angle, path, age_days,
/// leaf_count. Paths are relative to the dataset root (= the cache file's
/// directory when loading via load_manifest(cache_path)).
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest load_manifest(const std::filesystem::path& path);

}  // namespace mvvt
