#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gescd/image.hpp"

namespace gescd {

enum class DatasetLayout { Scd, ChangeVpr };

DatasetLayout layout_from_name(const std::string& name);
const char* layout_name(DatasetLayout layout);

/// One bi-temporal pair with its ground-truth mask paths.
struct PairRecord {
    std::string id;
    std::string path_t0;
    std::string path_t1;
    std::string gt_fwd;
    std::optional<std::string> gt_bwd;
    std::optional<std::string> gt_intersection;
};

struct DatasetManifest {
    std::string name;
    std::string split;
    DatasetLayout layout = DatasetLayout::Scd;
    std::vector<PairRecord> records;  // sorted by id
    int resolution_h = 512;
    int resolution_w = 512;
};

/// Scans a dataset tree. Layouts:
///   scd:       root/t0/, root/t1/, root/gt/
///   changevpr: root/query/, root/reference/, root/gt_t0/, root/gt_t1/,
///              root/gt_inter/
/// Pairing is by identical filename stem. Missing directories raise
/// Error{Layout}; unmatched ids raise Error{Pairing} listing the orphans.
DatasetManifest load_dataset(const std::string& root, DatasetLayout layout, int resolution = 512);

/// Images resized (bilinear) and masks resized (nearest) to the manifest
/// resolution; masks binarized at intensity > 127 on read.
Image load_pair_image(const PairRecord& rec, bool t1, const DatasetManifest& manifest);
BinaryMask load_gt_mask(const std::string& path, const DatasetManifest& manifest);

/// JSON document describing the manifest (name, split, resolution, records).
std::string manifest_to_json(const DatasetManifest& manifest);

}  // namespace gescd
