/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reprodock/diff.hpp"
#include "reprodock/digest.hpp"
#include "reprodock/errors.hpp"

namespace reprodock {

class NoCandidates : public Error {
public:
    using Error::Error;
};

class MalformedTimestamp : public Error {
public:
    using Error::Error;
};

class BuilderContractViolation : public Error {
public:
    using Error::Error;
};

struct BuildSpec {
    std::filesystem::path context_dir;
    std::filesystem::path dockerfile_path;
    bool hardened = false;
    std::optional<std::int64_t> source_date_epoch;  // required when hardened
    bool disable_cache = true;                      // clean builds always disable the cache
    int timeout_seconds = 1800;
    std::filesystem::path output_path;  // where the adapter writes the image
};

enum class BuildStatus { Success, BuildError, Timeout };

std::string_view build_status_name(BuildStatus s);

struct BuildOutcome {
    BuildStatus status = BuildStatus::BuildError;
    std::optional<Digest> image_digest;  // present iff status == Success
    std::filesystem::path image_path;
    std::string log_excerpt;
};

enum class Verdict {
    NotBuildable,
    BitwiseReproducible,
    InfraReproducible,
    SemanticallyReproducible,
    NonReproducible,
};

std::string_view verdict_name(Verdict v);
std::optional<Verdict> verdict_from_name(std::string_view name);

struct ProtocolTrace {
    std::string selected_dockerfile;
    std::vector<std::pair<BuildSpec, BuildOutcome>> builds;  // at most 4
    std::vector<std::pair<Digest, Digest>> digest_pairs;
    std::optional<DiffReport> diff_report;
    Verdict verdict = Verdict::NotBuildable;
    std::string failure_reason;
};

// Build adapter. Implementations must populate image_digest and image_path on
// success; run_protocol treats a digestless success as a contract violation.
class Builder {
public:
    virtual ~Builder() = default;
    virtual BuildOutcome build(const BuildSpec& spec) = 0;
};

// Adapter that shells out to an external command:
//   <command> <context_dir> <dockerfile_path> <output_image_path>
// with HARDENED=0|1 and SOURCE_DATE_EPOCH in the environment, expecting
// "digest: sha256:<64 hex>" as the last stdout line on success.
class CommandBuilder : public Builder {
public:
    explicit CommandBuilder(std::string command);
    BuildOutcome build(const BuildSpec& spec) override;

private:
    std::string command_;
};

// Path-based priority: a root-level Dockerfile beats anything under docker/,
// which beats all other paths; ties break lexicographically.
std::string select_dockerfile(const std::vector<std::string>& candidates);

// ISO-8601 timestamp with zone -> UTC seconds since epoch.
std::int64_t derive_epoch(std::string_view iso8601);

struct ProtocolOptions {
    std::filesystem::path work_dir;  // defaults to a fresh temp directory
    int timeout_seconds = 1800;
};

// The rebuild-and-compare state machine:
//   two clean builds; any failure => NotBuildable.
//   equal digests => BitwiseReproducible (2 builds total).
//   two hardened builds; failure => NotBuildable; equal => InfraReproducible.
//   otherwise compare the hardened images: SemanticallyReproducible or
//   NonReproducible, with the diff report attached (4 builds total).
ProtocolTrace run_protocol(Builder& builder, const std::filesystem::path& context_dir,
                           std::int64_t epoch, const ProtocolOptions& options = {});

struct VerdictCounts {
    std::map<Verdict, int> counts;
    int total = 0;

    int of(Verdict v) const {
        auto it = counts.find(v);
        return it == counts.end() ? 0 : it->second;
    }
    int buildable() const { return total - of(Verdict::NotBuildable); }
};

VerdictCounts aggregate_verdicts(const std::vector<Verdict>& verdicts);
VerdictCounts aggregate_verdicts(const std::vector<ProtocolTrace>& traces);

// Lists context files whose final path component contains "Dockerfile",
// as context-relative paths in lexicographic order.
std::vector<std::string> find_dockerfiles(const std::filesystem::path& context_dir);

nlohmann::json trace_to_json(const ProtocolTrace& trace);

}  // namespace reprodock
