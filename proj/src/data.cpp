#include "gescd/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <map>

#include "gescd/png_io.hpp"

namespace gescd {

namespace fs = std::filesystem;

DatasetLayout layout_from_name(const std::string& name) {
    if (name == "scd") return DatasetLayout::Scd;
    if (name == "changevpr") return DatasetLayout::ChangeVpr;
    throw Error(ErrorCode::InvalidArgument, "unknown dataset layout: " + name);
}

const char* layout_name(DatasetLayout layout) {
    return layout == DatasetLayout::Scd ? "scd" : "changevpr";
}

namespace {

std::map<std::string, std::string> scan_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;  // stem -> path, sorted
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        if (p.extension() != ".png" && p.extension() != ".PNG") continue;
        files[p.stem().string()] = p.string();
    }
    return files;
}

const std::map<std::string, std::string>& require_dir(
    const fs::path& root, const std::string& sub,
    std::map<std::string, std::map<std::string, std::string>>& cache) {
    auto it = cache.find(sub);
    if (it != cache.end()) return it->second;
    const fs::path dir = root / sub;
    if (!fs::is_directory(dir))
        throw Error(ErrorCode::Layout,
                    "dataset layout is missing directory '" + sub + "' under " + root.string());
    return cache.emplace(sub, scan_dir(dir)).first->second;
}

[[noreturn]] void fail_orphans(const std::string& what, const std::vector<std::string>& ids) {
    std::string msg = what + ":";
    for (std::size_t i = 0; i < ids.size() && i < 16; ++i) msg += " " + ids[i];
    if (ids.size() > 16) msg += " (+" + std::to_string(ids.size() - 16) + " more)";
    throw Error(ErrorCode::Pairing, msg);
}

}  // namespace

DatasetManifest load_dataset(const std::string& root, DatasetLayout layout, int resolution) {
    if (resolution <= 0)
        throw Error(ErrorCode::InvalidArgument, "dataset resolution must be positive");
    const fs::path rootp(root);
    if (!fs::is_directory(rootp))
        throw Error(ErrorCode::Layout, "dataset root does not exist: " + root);

    std::map<std::string, std::map<std::string, std::string>> dirs;
    DatasetManifest m;
    m.layout = layout;
    m.name = rootp.filename().string();
    if (m.name.empty()) m.name = rootp.parent_path().filename().string();
    m.split = "test";
    m.resolution_h = resolution;
    m.resolution_w = resolution;

    const std::string t0_dir = layout == DatasetLayout::Scd ? "t0" : "query";
    const std::string t1_dir = layout == DatasetLayout::Scd ? "t1" : "reference";
    const auto& t0 = require_dir(rootp, t0_dir, dirs);
    const auto& t1 = require_dir(rootp, t1_dir, dirs);
    const auto& gt = require_dir(rootp, layout == DatasetLayout::Scd ? "gt" : "gt_t0", dirs);
    const std::map<std::string, std::string>* gt_bwd = nullptr;
    const std::map<std::string, std::string>* gt_inter = nullptr;
    if (layout == DatasetLayout::ChangeVpr) {
        gt_bwd = &require_dir(rootp, "gt_t1", dirs);
        gt_inter = &require_dir(rootp, "gt_inter", dirs);
    }

    std::vector<std::string> orphans;
    for (const auto& [id, path] : t0) {
        if (!t1.count(id)) orphans.push_back(id + " (missing in " + t1_dir + ")");
        else if (!gt.count(id)) orphans.push_back(id + " (missing ground truth)");
        else if (gt_bwd && !gt_bwd->count(id)) orphans.push_back(id + " (missing in gt_t1)");
        else if (gt_inter && !gt_inter->count(id)) orphans.push_back(id + " (missing in gt_inter)");
    }
    for (const auto& [id, path] : t1)
        if (!t0.count(id)) orphans.push_back(id + " (missing in " + t0_dir + ")");
    if (!orphans.empty()) fail_orphans("unpaired dataset ids", orphans);

    for (const auto& [id, path] : t0) {
        PairRecord rec;
        rec.id = id;
        rec.path_t0 = path;
        rec.path_t1 = t1.at(id);
        rec.gt_fwd = gt.at(id);
        if (gt_bwd) rec.gt_bwd = gt_bwd->at(id);
        if (gt_inter) rec.gt_intersection = gt_inter->at(id);
        m.records.push_back(std::move(rec));
    }
    if (m.records.empty())
        throw Error(ErrorCode::Layout, "dataset is empty: " + root);
    // std::map iteration already yields ids in sorted order.
    return m;
}

Image load_pair_image(const PairRecord& rec, bool t1, const DatasetManifest& manifest) {
    const Image img = read_image(t1 ? rec.path_t1 : rec.path_t0);
    return resize_bilinear(img, manifest.resolution_w, manifest.resolution_h);
}

BinaryMask load_gt_mask(const std::string& path, const DatasetManifest& manifest) {
    const BinaryMask mask = read_mask(path);
    return resize_mask_nearest(mask, manifest.resolution_w, manifest.resolution_h);
}

std::string manifest_to_json(const DatasetManifest& manifest) {
    nlohmann::ordered_json j;
    j["name"] = manifest.name;
    j["split"] = manifest.split;
    j["layout"] = layout_name(manifest.layout);
    j["resolution"] = {manifest.resolution_h, manifest.resolution_w};
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (const PairRecord& r : manifest.records) {
        nlohmann::ordered_json jr;
        jr["id"] = r.id;
        jr["path_t0"] = r.path_t0;
        jr["path_t1"] = r.path_t1;
        jr["gt_fwd"] = r.gt_fwd;
        if (r.gt_bwd) jr["gt_bwd"] = *r.gt_bwd;
        if (r.gt_intersection) jr["gt_intersection"] = *r.gt_intersection;
        records.push_back(std::move(jr));
    }
    j["records"] = std::move(records);
    return j.dump(2);
}

}  // namespace gescd
