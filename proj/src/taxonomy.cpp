/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "reprodock/taxonomy.hpp"

#include <cctype>
#include <string>

namespace reprodock {

namespace {

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool contains(std::string_view s, std::string_view needle) {
    return s.find(needle) != std::string_view::npos;
}

std::string_view basename_of(std::string_view path) {
    auto slash = path.rfind('/');
    return slash == std::string_view::npos ? path : path.substr(slash + 1);
}

// Versioned shared objects: libfoo.so.1.2.3
bool is_versioned_so(std::string_view name) {
    auto pos = name.find(".so.");
    if (pos == std::string_view::npos) return false;
    for (char c : name.substr(pos + 4)) {
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.') return false;
    }
    return true;
}

// mktemp-style names: a run of >= 6 alphanumerics containing at least two
// digits, or >= 8 consecutive hex characters.
bool looks_random(std::string_view name) {
    std::size_t run = 0;
    std::size_t digits = 0;
    for (std::size_t i = 0; i <= name.size(); ++i) {
        if (i < name.size() && std::isalnum(static_cast<unsigned char>(name[i]))) {
            ++run;
            if (std::isdigit(static_cast<unsigned char>(name[i]))) ++digits;
        } else {
            if (run >= 6 && digits >= 2) return true;
            run = 0;
            digits = 0;
        }
    }
    std::size_t hex_run = 0;
    for (char c : name) {
        if (std::isxdigit(static_cast<unsigned char>(c))) {
            if (++hex_run >= 8) return true;
        } else {
            hex_run = 0;
        }
    }
    return false;
}

// The path component immediately after a "tmp" component, if any.
std::optional<std::string_view> component_after_tmp(std::string_view path) {
    std::size_t pos = 0;
    std::string_view prev;
    while (pos <= path.size()) {
        auto slash = path.find('/', pos);
        std::string_view comp = slash == std::string_view::npos
                                    ? path.substr(pos)
                                    : path.substr(pos, slash - pos);
        if (prev == "tmp" && !comp.empty()) return comp;
        prev = comp;
        if (slash == std::string_view::npos) break;
        pos = slash + 1;
    }
    return std::nullopt;
}

}  // namespace

std::string_view category_name(RootCauseCategory c) {
    switch (c) {
        case RootCauseCategory::TimestampsMetadata: return "Timestamps & metadata";
        case RootCauseCategory::FormattingFileOrdering: return "Formatting / file ordering";
        case RootCauseCategory::SystemLogs: return "System logs";
        case RootCauseCategory::CachesDatabases: return "Caches & databases";
        case RootCauseCategory::CompiledArtifacts: return "Compiled artifacts";
        case RootCauseCategory::ApplicationSpecific: return "Application-specific files";
        case RootCauseCategory::RandomNondeterministic: return "Random / non-deterministic data";
        case RootCauseCategory::PackageManagerState: return "Package-manager state";
    }
    return "";
}

std::string_view category_id(RootCauseCategory c) {
    switch (c) {
        case RootCauseCategory::TimestampsMetadata: return "timestamps-metadata";
        case RootCauseCategory::FormattingFileOrdering: return "formatting-file-ordering";
        case RootCauseCategory::SystemLogs: return "system-logs";
        case RootCauseCategory::CachesDatabases: return "caches-databases";
        case RootCauseCategory::CompiledArtifacts: return "compiled-artifacts";
        case RootCauseCategory::ApplicationSpecific: return "application-specific";
        case RootCauseCategory::RandomNondeterministic: return "random-nondeterministic";
        case RootCauseCategory::PackageManagerState: return "package-manager-state";
    }
    return "";
}

std::optional<RootCauseCategory> category_from_id(std::string_view id) {
    for (auto c : kAllCategories) {
        if (category_id(c) == id) return c;
    }
    return std::nullopt;
}

std::string_view ecosystem_id(Ecosystem e) {
    switch (e) {
        case Ecosystem::None: return "none";
        case Ecosystem::Apt: return "apt";
        case Ecosystem::PipPython: return "pip-python";
        case Ecosystem::NpmNode: return "npm-node";
        case Ecosystem::MavenJava: return "maven-java";
        case Ecosystem::Go: return "go";
    }
    return "none";
}

std::optional<Ecosystem> ecosystem_from_id(std::string_view id) {
    for (auto e : {Ecosystem::None, Ecosystem::Apt, Ecosystem::PipPython, Ecosystem::NpmNode,
                   Ecosystem::MavenJava, Ecosystem::Go}) {
        if (ecosystem_id(e) == id) return e;
    }
    return std::nullopt;
}

std::string_view diff_kind_name(DiffKind k) {
    switch (k) {
        case DiffKind::Content: return "content";
        case DiffKind::MetadataOnly: return "metadata-only";
        case DiffKind::Added: return "added";
        case DiffKind::Removed: return "removed";
        case DiffKind::TypeChanged: return "type-changed";
    }
    return "";
}

std::optional<DiffKind> diff_kind_from_name(std::string_view name) {
    for (auto k : {DiffKind::Content, DiffKind::MetadataOnly, DiffKind::Added, DiffKind::Removed,
                   DiffKind::TypeChanged}) {
        if (diff_kind_name(k) == name) return k;
    }
    return std::nullopt;
}

Classification classify_path(std::string_view path, DiffKind kind) {
    const std::string_view base = basename_of(path);
    const bool content_bearing = kind != DiffKind::MetadataOnly;

    // 1. System logs.
    if (starts_with(path, "var/log/")) {
        return {RootCauseCategory::SystemLogs, Ecosystem::None};
    }
    // 2-4. Caches and on-disk databases.
    if (contains(path, ".npm/_cacache/") || contains(path, "node_modules/.cache")) {
        return {RootCauseCategory::CachesDatabases, Ecosystem::NpmNode};
    }
    if (contains(path, ".cache/pip")) {
        return {RootCauseCategory::CachesDatabases, Ecosystem::PipPython};
    }
    if (contains(path, "ldconfig/aux-cache") || contains(path, "fontconfig/") ||
        contains(path, "var/cache/")) {
        return {RootCauseCategory::CachesDatabases, Ecosystem::None};
    }
    // 5-7. Compiled artifacts.
    if (ends_with(path, ".pyc") || contains(path, "__pycache__/")) {
        return {RootCauseCategory::CompiledArtifacts, Ecosystem::PipPython};
    }
    if (ends_with(path, ".class") || contains(path, ".m2/")) {
        return {RootCauseCategory::CompiledArtifacts, Ecosystem::MavenJava};
    }
    if (ends_with(path, ".so") || ends_with(path, ".a") || is_versioned_so(base) ||
        (contains(path, "bin/") && kind == DiffKind::Content)) {
        return {RootCauseCategory::CompiledArtifacts, Ecosystem::None};
    }
    // 8. Random / non-deterministic data.
    if (path == "etc/machine-id" || starts_with(path, "etc/ssh/ssh_host_")) {
        return {RootCauseCategory::RandomNondeterministic, Ecosystem::None};
    }
    if (auto comp = component_after_tmp(path); comp && looks_random(*comp)) {
        return {RootCauseCategory::RandomNondeterministic, Ecosystem::None};
    }
    // 9. Package-manager state.
    if (starts_with(path, "var/lib/dpkg/") || starts_with(path, "var/lib/apt/")) {
        return {RootCauseCategory::PackageManagerState, Ecosystem::Apt};
    }
    if (starts_with(path, "var/lib/rpm/")) {
        return {RootCauseCategory::PackageManagerState, Ecosystem::None};
    }
    // 10. Pure metadata drift.
    if (!content_bearing) {
        return {RootCauseCategory::TimestampsMetadata, Ecosystem::None};
    }
    // 11. Fallback.
    return {RootCauseCategory::ApplicationSpecific, Ecosystem::None};
}

}  // namespace reprodock
