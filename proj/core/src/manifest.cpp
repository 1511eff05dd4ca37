#include "posegan/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

namespace posegan {

std::string split_name(Split s) {
    switch (s) {
    case Split::Train: return "train";
    case Split::Query: return "query";
    case Split::Gallery: return "gallery";
    }
    throw ParamError("unknown split");
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "query") return Split::Query;
    if (name == "gallery") return Split::Gallery;
    throw FormatError("unknown split name: " + name);
}

std::vector<const ManifestRecord*> DatasetManifest::split_records(Split s) const {
    std::vector<const ManifestRecord*> out;
    for (const auto& r : records)
        if (r.split == s) out.push_back(&r);
    return out;
}

std::vector<int> DatasetManifest::split_identities(Split s) const {
    std::set<int> ids;
    for (const auto& r : records)
        if (r.split == s) ids.insert(r.identity_id);
    return {ids.begin(), ids.end()};
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("invalid manifest JSON in " + path.string() + ": " + e.what());
    }
    DatasetManifest m;
    m.root = path.parent_path();
    try {
        m.seed = doc.at("seed").get<std::uint64_t>();
        m.canvas.h = doc.at("canvas").at(0).get<int>();
        m.canvas.w = doc.at("canvas").at(1).get<int>();
        for (const auto& r : doc.at("records")) {
            ManifestRecord rec;
            rec.image_path = r.at("image_path").get<std::string>();
            rec.keypoints_path = r.at("keypoints_path").get<std::string>();
            rec.identity_id = r.at("identity_id").get<int>();
            rec.camera_id = r.at("camera_id").get<int>();
            rec.split = split_from_name(r.at("split").get<std::string>());
            m.records.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest " + path.string() + ": " + e.what());
    }

    // Referential integrity.
    std::set<std::string> seen_images;
    for (const auto& r : m.records) {
        if (!std::filesystem::exists(m.image_file(r)))
            throw FormatError("manifest references missing image: " + r.image_path);
        if (!std::filesystem::exists(m.keypoints_file(r)))
            throw FormatError("manifest references missing keypoint file: " + r.keypoints_path);
        if (!seen_images.insert(r.image_path).second)
            throw FormatError("image appears in more than one record/split: " + r.image_path);
    }
    const auto query_ids = m.split_identities(Split::Query);
    const auto gallery_ids = m.split_identities(Split::Gallery);
    for (int qid : query_ids)
        if (!std::binary_search(gallery_ids.begin(), gallery_ids.end(), qid))
            throw FormatError("query identity " + std::to_string(qid) + " missing from gallery");
    return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    nlohmann::json doc;
    doc["seed"] = m.seed;
    doc["canvas"] = {m.canvas.h, m.canvas.w};
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : m.records) {
        records.push_back({{"image_path", r.image_path},
                           {"keypoints_path", r.keypoints_path},
                           {"identity_id", r.identity_id},
                           {"camera_id", r.camera_id},
                           {"split", split_name(r.split)}});
    }
    doc["records"] = std::move(records);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << doc.dump(2) << "\n";
}

} // namespace posegan
