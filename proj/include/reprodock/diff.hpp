/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reprodock/oci.hpp"
#include "reprodock/taxonomy.hpp"

namespace reprodock {

// Positional comparison of one layer slot across two images.
struct LayerDiff {
    int index = 0;  // 0-based position
    std::optional<Digest> digest_a;
    std::optional<Digest> digest_b;
    std::optional<std::uint64_t> size_a;
    std::optional<std::uint64_t> size_b;
    bool match = false;  // both present and equal digests
};

// Field-level deltas between two entries at the same path.
struct FieldDelta {
    std::optional<std::pair<std::int64_t, std::int64_t>> mtime;
    std::optional<std::pair<std::uint32_t, std::uint32_t>> mode;
    std::optional<std::pair<std::uint64_t, std::uint64_t>> uid;
    std::optional<std::pair<std::uint64_t, std::uint64_t>> gid;
    std::optional<std::pair<std::uint64_t, std::uint64_t>> size;
    std::optional<std::pair<Digest, Digest>> content;
    std::optional<std::pair<std::string, std::string>> link_target;
    std::optional<std::pair<EntryType, EntryType>> entry_type;
};

struct FileDiff {
    std::string path;
    DiffKind kind = DiffKind::Content;
    FieldDelta detail;
    Classification category;
    // True for the single pseudo-diff emitted when two listings hold the same
    // paths in a different archive order. Counts as metadata for semantic
    // equality but buckets under FormattingFileOrdering.
    bool ordering_only = false;
};

struct DiffReport {
    std::vector<LayerDiff> layer_diffs;
    std::vector<FileDiff> file_diffs;  // flattened whole-image view
    bool semantic_equal = false;       // every file diff is metadata-only
    bool config_equal = false;         // byte equality of config blobs
    std::map<RootCauseCategory, int> histogram;
};

// Positional layer comparison; unpaired slots appear with an absent side.
std::vector<LayerDiff> diff_manifests(const Manifest& a, const Manifest& b);
std::vector<LayerDiff> diff_manifests(const Image& a, const Image& b);

// Aligns two entry listings by normalized path and classifies each
// difference. Shadowed duplicates resolve to the last entry per path. When
// the two listings hold equal path sets in different order, one
// FormattingFileOrdering pseudo-diff is appended.
std::vector<FileDiff> diff_layer_files(const std::vector<FileEntry>& entries_a,
                                       const std::vector<FileEntry>& entries_b);

// Full comparison: positional layer diff, flattened file diff with root-cause
// classification, config byte equality, per-category histogram. Semantic
// equality is decided on the flattened view.
DiffReport build_report(const Image& a, const Image& b);

// Bitwise identity at the manifest level: equal config descriptor and bytes,
// equal layer digest vectors.
bool images_bitwise_equal(const Image& a, const Image& b);

nlohmann::json report_to_json(const DiffReport& report);

// Column layout: TYPE, NAME, INPUT-0, INPUT-1 with 8-hex digest prefixes.
std::string report_to_text(const DiffReport& report, bool semantic_only = false);

}  // namespace reprodock
