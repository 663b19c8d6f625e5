/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "reprodock/diff.hpp"

#include <algorithm>
#include <sstream>

namespace reprodock {

namespace {

// Last entry per path wins (tar overlay semantics); whiteout markers are kept
// so that flattened views built elsewhere stay the caller's concern.
std::map<std::string, const FileEntry*> effective_entries(const std::vector<FileEntry>& entries) {
    std::map<std::string, const FileEntry*> out;
    for (const auto& e : entries) {
        out[e.path] = &e;
    }
    return out;
}

bool metadata_differs(const FileEntry& a, const FileEntry& b, FieldDelta& detail) {
    bool differs = false;
    if (a.mtime != b.mtime) {
        detail.mtime = {a.mtime, b.mtime};
        differs = true;
    }
    if (a.mode != b.mode) {
        detail.mode = {a.mode, b.mode};
        differs = true;
    }
    if (a.uid != b.uid) {
        detail.uid = {a.uid, b.uid};
        differs = true;
    }
    if (a.gid != b.gid) {
        detail.gid = {a.gid, b.gid};
        differs = true;
    }
    return differs;
}

std::optional<FileDiff> diff_pair(const FileEntry& a, const FileEntry& b) {
    FileDiff d;
    d.path = a.path;

    if (a.type != b.type) {
        d.kind = DiffKind::TypeChanged;
        d.detail.entry_type = {a.type, b.type};
        metadata_differs(a, b, d.detail);
        if (a.size != b.size) d.detail.size = {a.size, b.size};
        return d;
    }

    bool content_diff = false;
    if (a.type == EntryType::File) {
        if (a.content_digest && b.content_digest && *a.content_digest != *b.content_digest) {
            content_diff = true;
            d.detail.content = {*a.content_digest, *b.content_digest};
            if (a.size != b.size) d.detail.size = {a.size, b.size};
        }
    } else if (a.type == EntryType::Symlink || a.type == EntryType::Hardlink) {
        // Link targets are content, never metadata.
        if (a.link_target.value_or("") != b.link_target.value_or("")) {
            content_diff = true;
            d.detail.link_target = {a.link_target.value_or(""), b.link_target.value_or("")};
        } else if (a.type == EntryType::Hardlink && a.content_digest && b.content_digest &&
                   *a.content_digest != *b.content_digest) {
            content_diff = true;
            d.detail.content = {*a.content_digest, *b.content_digest};
        }
    }

    if (content_diff) {
        d.kind = DiffKind::Content;
        metadata_differs(a, b, d.detail);
        return d;
    }
    if (metadata_differs(a, b, d.detail)) {
        d.kind = DiffKind::MetadataOnly;
        return d;
    }
    return std::nullopt;
}

RootCauseCategory histogram_bucket(const FileDiff& d) {
    if (d.ordering_only) return RootCauseCategory::FormattingFileOrdering;
    if (d.kind == DiffKind::MetadataOnly) return RootCauseCategory::TimestampsMetadata;
    return d.category.category;
}

std::string short_digest(const std::optional<Digest>& d) {
    return d ? d->short_hex() + "..." : "-";
}

}  // namespace

std::vector<LayerDiff> diff_manifests(const Manifest& a, const Manifest& b) {
    std::vector<LayerDiff> out;
    std::size_t n = std::max(a.layers.size(), b.layers.size());
    for (std::size_t i = 0; i < n; ++i) {
        LayerDiff d;
        d.index = static_cast<int>(i);
        if (i < a.layers.size()) {
            d.digest_a = a.layers[i].digest;
            d.size_a = a.layers[i].size;
        }
        if (i < b.layers.size()) {
            d.digest_b = b.layers[i].digest;
            d.size_b = b.layers[i].size;
        }
        d.match = d.digest_a && d.digest_b && *d.digest_a == *d.digest_b;
        out.push_back(d);
    }
    return out;
}

std::vector<LayerDiff> diff_manifests(const Image& a, const Image& b) {
    return diff_manifests(a.manifest(), b.manifest());
}

std::vector<FileDiff> diff_layer_files(const std::vector<FileEntry>& entries_a,
                                       const std::vector<FileEntry>& entries_b) {
    auto map_a = effective_entries(entries_a);
    auto map_b = effective_entries(entries_b);

    std::vector<FileDiff> out;
    auto ia = map_a.begin();
    auto ib = map_b.begin();
    while (ia != map_a.end() || ib != map_b.end()) {
        if (ib == map_b.end() || (ia != map_a.end() && ia->first < ib->first)) {
            FileDiff d;
            d.path = ia->first;
            d.kind = DiffKind::Removed;
            d.detail.size = {ia->second->size, 0};
            d.category = classify_path(d.path, d.kind);
            out.push_back(std::move(d));
            ++ia;
        } else if (ia == map_a.end() || ib->first < ia->first) {
            FileDiff d;
            d.path = ib->first;
            d.kind = DiffKind::Added;
            d.detail.size = {0, ib->second->size};
            d.category = classify_path(d.path, d.kind);
            out.push_back(std::move(d));
            ++ib;
        } else {
            if (auto d = diff_pair(*ia->second, *ib->second)) {
                d->category = classify_path(d->path, d->kind);
                out.push_back(std::move(*d));
            }
            ++ia;
            ++ib;
        }
    }

    // Ordering-only difference: same effective path sets, different sequence.
    if (map_a.size() == map_b.size()) {
        bool same_sets = std::equal(map_a.begin(), map_a.end(), map_b.begin(),
                                    [](const auto& x, const auto& y) { return x.first == y.first; });
        if (same_sets) {
            auto sequence = [](const std::vector<FileEntry>& entries) {
                std::vector<std::string_view> seq;
                for (const auto& e : entries) {
                    if (!e.shadowed) seq.emplace_back(e.path);
                }
                return seq;
            };
            if (sequence(entries_a) != sequence(entries_b)) {
                FileDiff d;
                d.path = "";
                d.kind = DiffKind::MetadataOnly;
                d.ordering_only = true;
                d.category = {RootCauseCategory::FormattingFileOrdering, Ecosystem::None};
                out.insert(out.begin(), std::move(d));
            }
        }
    }
    return out;
}

DiffReport build_report(const Image& a, const Image& b) {
    DiffReport report;
    report.layer_diffs = diff_manifests(a, b);
    report.config_equal = a.config_bytes() == b.config_bytes();

    // Walk each layer once; reuse the listings for both the ordering check
    // and the flattened views.
    auto walk = [](const Image& img) {
        std::vector<std::vector<FileEntry>> per_layer;
        per_layer.reserve(img.layers().size());
        for (const auto& layer : img.layers()) {
            per_layer.push_back(list_layer_entries(layer));
        }
        return per_layer;
    };
    auto layers_a = walk(a);
    auto layers_b = walk(b);

    auto flatten = [](const std::vector<std::vector<FileEntry>>& per_layer) {
        std::map<std::string, FileEntry> fs;
        for (const auto& entries : per_layer) {
            for (const auto& entry : entries) {
                if (entry.shadowed) continue;
                if (entry.whiteout) {
                    auto slash = entry.path.rfind('/');
                    std::string dir =
                        slash == std::string::npos ? "" : entry.path.substr(0, slash);
                    std::string base =
                        slash == std::string::npos ? entry.path : entry.path.substr(slash + 1);
                    std::string prefix;
                    if (base == ".wh..wh..opq") {
                        prefix = dir.empty() ? "" : dir + "/";
                    } else {
                        std::string target =
                            dir.empty() ? base.substr(4) : dir + "/" + base.substr(4);
                        fs.erase(target);
                        prefix = target + "/";
                    }
                    for (auto it = fs.lower_bound(prefix); it != fs.end();) {
                        if (prefix.empty() || it->first.rfind(prefix, 0) == 0) {
                            it = fs.erase(it);
                        } else {
                            break;
                        }
                    }
                    continue;
                }
                fs[entry.path] = entry;
            }
        }
        return fs;
    };

    auto as_sorted_list = [](const std::map<std::string, FileEntry>& fs) {
        std::vector<FileEntry> out;
        out.reserve(fs.size());
        for (const auto& [path, entry] : fs) {
            out.push_back(entry);
        }
        return out;
    };

    report.file_diffs = diff_layer_files(as_sorted_list(flatten(layers_a)),
                                         as_sorted_list(flatten(layers_b)));

    // Per-layer archive-order check; one pseudo-diff covers the whole image.
    bool ordering = false;
    for (std::size_t i = 0; i < report.layer_diffs.size() && !ordering; ++i) {
        const LayerDiff& ld = report.layer_diffs[i];
        if (ld.match || !ld.digest_a || !ld.digest_b) continue;
        const auto& ea = layers_a[i];
        const auto& eb = layers_b[i];
        std::vector<std::string_view> seq_a;
        std::vector<std::string_view> seq_b;
        for (const auto& e : ea) {
            if (!e.shadowed) seq_a.emplace_back(e.path);
        }
        for (const auto& e : eb) {
            if (!e.shadowed) seq_b.emplace_back(e.path);
        }
        if (seq_a == seq_b) continue;
        auto sorted_a = seq_a;
        auto sorted_b = seq_b;
        std::sort(sorted_a.begin(), sorted_a.end());
        std::sort(sorted_b.begin(), sorted_b.end());
        if (sorted_a == sorted_b) ordering = true;
    }
    bool has_ordering_pseudo =
        std::any_of(report.file_diffs.begin(), report.file_diffs.end(),
                    [](const FileDiff& d) { return d.ordering_only; });
    if (ordering && !has_ordering_pseudo) {
        FileDiff d;
        d.kind = DiffKind::MetadataOnly;
        d.ordering_only = true;
        d.category = {RootCauseCategory::FormattingFileOrdering, Ecosystem::None};
        report.file_diffs.insert(report.file_diffs.begin(), std::move(d));
    }

    report.semantic_equal =
        std::all_of(report.file_diffs.begin(), report.file_diffs.end(),
                    [](const FileDiff& d) { return d.kind == DiffKind::MetadataOnly; });
    for (const auto& d : report.file_diffs) {
        ++report.histogram[histogram_bucket(d)];
    }
    return report;
}

bool images_bitwise_equal(const Image& a, const Image& b) {
    if (a.config_bytes() != b.config_bytes()) return false;
    if (a.manifest().config.digest != b.manifest().config.digest) return false;
    const auto& la = a.manifest().layers;
    const auto& lb = b.manifest().layers;
    if (la.size() != lb.size()) return false;
    for (std::size_t i = 0; i < la.size(); ++i) {
        if (la[i].digest != lb[i].digest) return false;
    }
    return true;
}

nlohmann::json report_to_json(const DiffReport& report) {
    nlohmann::json j;
    j["semantic_equal"] = report.semantic_equal;
    j["config_equal"] = report.config_equal;
    j["layer_diffs"] = nlohmann::json::array();
    for (const auto& ld : report.layer_diffs) {
        nlohmann::json lj;
        lj["index"] = ld.index;
        lj["digest_a"] = ld.digest_a ? nlohmann::json(ld.digest_a->prefixed())
                                     : nlohmann::json(nullptr);
        lj["digest_b"] = ld.digest_b ? nlohmann::json(ld.digest_b->prefixed())
                                     : nlohmann::json(nullptr);
        lj["size_a"] = ld.size_a ? nlohmann::json(*ld.size_a) : nlohmann::json(nullptr);
        lj["size_b"] = ld.size_b ? nlohmann::json(*ld.size_b) : nlohmann::json(nullptr);
        lj["match"] = ld.match;
        j["layer_diffs"].push_back(std::move(lj));
    }
    j["file_diffs"] = nlohmann::json::array();
    for (const auto& fd : report.file_diffs) {
        nlohmann::json fj;
        fj["path"] = fd.path;
        fj["kind"] = std::string(diff_kind_name(fd.kind));
        fj["category"] = std::string(category_id(fd.category.category));
        fj["ecosystem"] = std::string(ecosystem_id(fd.category.ecosystem));
        nlohmann::json detail = nlohmann::json::object();
        if (fd.ordering_only) detail["ordering_only"] = true;
        if (fd.detail.mtime) detail["mtime"] = {fd.detail.mtime->first, fd.detail.mtime->second};
        if (fd.detail.mode) detail["mode"] = {fd.detail.mode->first, fd.detail.mode->second};
        if (fd.detail.uid) detail["uid"] = {fd.detail.uid->first, fd.detail.uid->second};
        if (fd.detail.gid) detail["gid"] = {fd.detail.gid->first, fd.detail.gid->second};
        if (fd.detail.size) detail["size"] = {fd.detail.size->first, fd.detail.size->second};
        if (fd.detail.content) {
            detail["content"] = {fd.detail.content->first.prefixed(),
                                 fd.detail.content->second.prefixed()};
        }
        if (fd.detail.link_target) {
            detail["link_target"] = {fd.detail.link_target->first, fd.detail.link_target->second};
        }
        if (fd.detail.entry_type) {
            detail["entry_type"] = {std::string(entry_type_name(fd.detail.entry_type->first)),
                                    std::string(entry_type_name(fd.detail.entry_type->second))};
        }
        fj["detail"] = std::move(detail);
        j["file_diffs"].push_back(std::move(fj));
    }
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [cat, count] : report.histogram) {
        hist[std::string(category_id(cat))] = count;
    }
    j["histogram"] = std::move(hist);
    return j;
}

std::string report_to_text(const DiffReport& report, bool semantic_only) {
    std::ostringstream out;

    out << "LAYER  INPUT-0      INPUT-1      MATCH\n";
    for (const auto& ld : report.layer_diffs) {
        std::ostringstream row;
        row << ld.index + 1;
        out << row.str() << std::string(7 - row.str().size(), ' ')
            << short_digest(ld.digest_a) << "  " << short_digest(ld.digest_b) << "  "
            << (ld.match ? "yes" : "NO") << "\n";
    }
    out << "\n";

    std::size_t shown = 0;
    std::ostringstream files;
    files << "TYPE  NAME                                               INPUT-0     INPUT-1\n";
    for (const auto& fd : report.file_diffs) {
        if (semantic_only && fd.kind == DiffKind::MetadataOnly) continue;
        std::string type;
        std::string in0 = "-";
        std::string in1 = "-";
        if (fd.ordering_only) {
            type = "Order";
            in0 = in1 = "";
        } else if (fd.detail.content) {
            type = "File";
            in0 = fd.detail.content->first.short_hex() + "...";
            in1 = fd.detail.content->second.short_hex() + "...";
        } else if (fd.detail.link_target) {
            type = "Link";
            in0 = fd.detail.link_target->first;
            in1 = fd.detail.link_target->second;
        } else {
            type = "File";
            if (fd.kind == DiffKind::Added) in0 = "-", in1 = "new";
            if (fd.kind == DiffKind::Removed) in0 = "gone", in1 = "-";
            if (fd.kind == DiffKind::MetadataOnly) in0 = in1 = "meta";
        }
        std::string name = fd.ordering_only ? "(archive ordering)" : fd.path;
        files << type << std::string(type.size() < 6 ? 6 - type.size() : 1, ' ');
        if (name.size() < 51) {
            files << name << std::string(51 - name.size(), ' ');
        } else {
            files << name << "\n" << std::string(57, ' ');
        }
        files << in0;
        if (in0.size() < 12) files << std::string(12 - in0.size(), ' ');
        files << in1 << "  [" << category_name(fd.category.category) << "]\n";
        ++shown;
    }
    if (shown > 0) out << files.str() << "\n";

    out << "config: " << (report.config_equal ? "identical" : "differs") << "\n";
    out << "semantic_equal: " << (report.semantic_equal ? "true" : "false") << "\n";
    return out.str();
}

}  // namespace reprodock
