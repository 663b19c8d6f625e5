/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <optional>
#include <string_view>

#include "reprodock/errors.hpp"

namespace reprodock {

// The eight root-cause categories used to classify residual differences
// between two builds of the same Dockerfile.
enum class RootCauseCategory {
    TimestampsMetadata,
    FormattingFileOrdering,
    SystemLogs,
    CachesDatabases,
    CompiledArtifacts,
    ApplicationSpecific,
    RandomNondeterministic,
    PackageManagerState,
};

inline constexpr RootCauseCategory kAllCategories[] = {
    RootCauseCategory::TimestampsMetadata,    RootCauseCategory::FormattingFileOrdering,
    RootCauseCategory::SystemLogs,            RootCauseCategory::CachesDatabases,
    RootCauseCategory::CompiledArtifacts,     RootCauseCategory::ApplicationSpecific,
    RootCauseCategory::RandomNondeterministic, RootCauseCategory::PackageManagerState,
};

// Ecosystem tags refine a category; they never replace it.
enum class Ecosystem { None, Apt, PipPython, NpmNode, MavenJava, Go };

struct Classification {
    RootCauseCategory category = RootCauseCategory::ApplicationSpecific;
    Ecosystem ecosystem = Ecosystem::None;

    friend bool operator==(const Classification&, const Classification&) = default;
};

// Display name as used in summary tables ("Caches & databases").
std::string_view category_name(RootCauseCategory c);

// Stable machine identifier ("caches-databases").
std::string_view category_id(RootCauseCategory c);
std::optional<RootCauseCategory> category_from_id(std::string_view id);

std::string_view ecosystem_id(Ecosystem e);
std::optional<Ecosystem> ecosystem_from_id(std::string_view id);

enum class DiffKind { Content, MetadataOnly, Added, Removed, TypeChanged };

std::string_view diff_kind_name(DiffKind k);
std::optional<DiffKind> diff_kind_from_name(std::string_view name);

// Classifies a normalized archive path (forward slashes, no leading slash)
// into a root-cause category. First matching pattern wins; the pattern order
// is fixed, so a log path under a cache-like name still classifies as
// SystemLogs. Total: every input gets a category (ApplicationSpecific is the
// fallback).
Classification classify_path(std::string_view path, DiffKind kind);

}  // namespace reprodock
