// Copyright 2026 The mvvt Authors.
// SPDX-License-Identifier: Apache-2.0
#include "mvvt/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mvvt/errors.hpp"

namespace mvvt {

std::vector<ItemKey> Manifest::items() const {
  std::vector<ItemKey> out;
  for (const auto& r : records) {
    ItemKey k{r.crop, r.plant, r.day};
    if (out.empty() || !(out.back() == k)) {
      if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int64_t> Manifest::angles(const std::string& crop) const {
  std::vector<int64_t> out;
  for (const auto& r : records) {
    if (r.crop == crop && std::find(out.begin(), out.end(), r.angle) == out.end())
      out.push_back(r.angle);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int64_t> Manifest::levels(const std::string& crop) const {
  std::vector<int64_t> out;
  for (const auto& r : records) {
    if (r.crop == crop && std::find(out.begin(), out.end(), r.level) == out.end())
      out.push_back(r.level);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write manifest: " + path.string());
  os << "mvvt-manifest v1\n";
  for (const auto& r : manifest.records) {
    os << r.crop << "\t" << r.plant << "\t" << r.day << "\t" << r.level << "\t" << r.angle << "\t"
       << r.path << "\t" << r.age_days << "\t" << r.leaf_count << "\n";
  }
  if (!os) throw IoError("write failed for manifest " + path.string());
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "mvvt-manifest v1") {
    throw IoError("unsupported manifest header in " + path.string());
  }
  Manifest m;
  m.root = path.parent_path();
  size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestRecord r;
    std::string day, level, angle, age, leaves;
    if (!std::getline(ss, r.crop, '\t') || !std::getline(ss, r.plant, '\t') ||
        !std::getline(ss, day, '\t') || !std::getline(ss, level, '\t') ||
        !std::getline(ss, angle, '\t') || !std::getline(ss, r.path, '\t') ||
        !std::getline(ss, age, '\t') || !std::getline(ss, leaves)) {
      throw IoError("malformed manifest line " + std::to_string(lineno) + " in " + path.string());
    }
    try {
      r.day = std::stoll(day);
      r.level = std::stoll(level);
      r.angle = std::stoll(angle);
      r.age_days = std::stoll(age);
      r.leaf_count = std::stoll(leaves);
    } catch (const std::exception&) {
      throw IoError("non-numeric field on manifest line " + std::to_string(lineno));
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

}  // namespace mvvt
