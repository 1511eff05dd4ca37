#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "posegan/pose_codec.hpp"

namespace posegan {

enum class Split { Train, Query, Gallery };

std::string split_name(Split s);
Split split_from_name(const std::string& name);

struct ManifestRecord {
    std::string image_path;     // relative to the manifest directory
    std::string keypoints_path; // relative to the manifest directory
    int identity_id = 0;
    int camera_id = 0;
    Split split = Split::Train;
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;
    std::uint64_t seed = 0;
    Canvas canvas;
    std::filesystem::path root; // directory containing manifest.json

    std::filesystem::path image_file(const ManifestRecord& r) const { return root / r.image_path; }
    std::filesystem::path keypoints_file(const ManifestRecord& r) const { return root / r.keypoints_path; }
    std::vector<const ManifestRecord*> split_records(Split s) const;
    std::vector<int> split_identities(Split s) const; // sorted, unique
};

// Loads and validates: every referenced path exists, splits are disjoint by
// image, and every query identity also appears in the gallery.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);

} // namespace posegan
