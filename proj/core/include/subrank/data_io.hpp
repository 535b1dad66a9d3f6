#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "subrank/types.hpp"

namespace subrank {

// All files are UTF-8, one JSON object per line. Field names are listed in
// docs/FORMATS.md. Loaders never repair data: the first bad record aborts
// with Error(data) naming the file, line and reason.

Catalog load_catalog(const std::filesystem::path& path);

/// Every id must resolve against `catalog`; purchases <= clicks <= impressions.
std::vector<TrafficRecord> load_traffic(const std::filesystem::path& path,
                                        const Catalog& catalog);

/// Checks the count ordering and self-pair rule for one record.
void validate_traffic_record(const TrafficRecord& record);

std::vector<LabeledPair> load_labeled_pairs(const std::filesystem::path& path);

void write_catalog(const std::filesystem::path& path, const Catalog& catalog);
void write_traffic(const std::filesystem::path& path,
                   std::span<const TrafficRecord> traffic);
void write_labeled_pairs(const std::filesystem::path& path,
                         std::span<const LabeledPair> pairs);

}  // namespace subrank
