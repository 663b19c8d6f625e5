/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reprodock/digest.hpp"
#include "reprodock/oci.hpp"

#include "tar_builder.hpp"

namespace reprodock::testsupport {

// --- Dockerfile corpus -------------------------------------------------

// Three-instruction python service Dockerfile (unpinned base, unpinned pip
// installs, no epoch).
extern const char* kPythonSlimBasic;

// Its hardened counterpart: pinned base, epoch wired through, pinned install.
extern const char* kPythonSlimPinned;

// Node toolchain installed globally after an apt step that does clean up.
extern const char* kNodeGlobalInstall;

// CUDA build stack: apt upgrade + install without cleanup, pip without
// cache handling.
extern const char* kCudaPipStack;

// Fully hardened multi-ecosystem template (apt + pip + npm with cleanups,
// epoch, machine-id reset).
extern const char* kHardenedTemplate;

// --- Image fixtures ----------------------------------------------------

struct LayerSpec {
    std::string tar_bytes;
    bool gzip = false;
};

struct WrittenImage {
    std::filesystem::path path;
    Digest manifest_digest;
    Digest config_digest;
    std::vector<Digest> layer_digests;
};

// Writes an OCI image layout directory (oci-layout marker, index.json,
// blobs/sha256/*). Returns the digests it stored.
WrittenImage write_oci_layout(const std::filesystem::path& dir, const std::string& config_json,
                              const std::vector<LayerSpec>& layers);

// Writes a docker-save style tarball: manifest.json + content-addressed
// members.
WrittenImage write_save_tarball(const std::filesystem::path& file, const std::string& config_json,
                                const std::vector<LayerSpec>& layers);

// A fresh directory under the system temp dir.
std::filesystem::path fresh_temp_dir(const std::string& tag);

// In-memory blob handle over a byte string.
BlobRef blob_from_string(const std::string& bytes);

// Deterministic pseudo-random blob.
std::string random_blob(std::uint64_t seed, std::size_t size);

}  // namespace reprodock::testsupport
