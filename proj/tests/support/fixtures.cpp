/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fixtures.hpp"

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "reprodock/io.hpp"

namespace reprodock::testsupport {

const char* kPythonSlimBasic =
    "FROM python:3.11-slim\n"
    "RUN pip install flask requests\n"
    "COPY app.py /app/\n";

const char* kPythonSlimPinned =
    "FROM python:3.11@sha256:5be4000000000000000000000000000000000000000000000000000000000000\n"
    "ARG SOURCE_DATE_EPOCH\n"
    "ENV SOURCE_DATE_EPOCH=$SOURCE_DATE_EPOCH\n"
    "RUN pip install flask==3.0.0\n"
    "COPY app.py /app/\n";

const char* kNodeGlobalInstall =
    "FROM python:3.12-bookworm\n"
    "RUN curl -fsSL https://deb.nodesource.com/setup_20.x | bash - \\\n"
    "    && apt-get install -y nodejs \\\n"
    "    && rm -rf /var/lib/apt/lists/*\n"
    "RUN npm install -g husky vite\n";

const char* kCudaPipStack =
    "FROM nvidia/cuda:12.5.1-devel-ubuntu22.04\n"
    "RUN apt-get update && apt-get upgrade -y \\\n"
    "    && apt-get install -y git build-essential \\\n"
    "    python3 python3-pip gcc wget \\\n"
    "    ocl-icd-opencl-dev opencl-headers clinfo \\\n"
    "    libclblast-dev libopenblas-dev\n"
    "\n"
    "RUN python3 -m pip install --upgrade pip pytest cmake\n";

const char* kHardenedTemplate =
    "# syntax=docker/dockerfile:1\n"
    "FROM python:3.12-slim\n"
    "\n"
    "# Reproducibility: Set epoch for timestamps\n"
    "ARG SOURCE_DATE_EPOCH\n"
    "ENV SOURCE_DATE_EPOCH=${SOURCE_DATE_EPOCH:-0}\n"
    "\n"
    "# Prevent interactive prompts\n"
    "ENV DEBIAN_FRONTEND=noninteractive\n"
    "\n"
    "# Install system deps with full cleanup\n"
    "RUN apt-get update && \\\n"
    "    apt-get install -y --no-install-recommends \\\n"
    "        build-essential curl && \\\n"
    "    # Remove caches and non-essential files\n"
    "    rm -rf /var/lib/apt/lists/* \\\n"
    "           /var/cache/apt/archives/* \\\n"
    "           /usr/share/man \\\n"
    "           /usr/share/doc \\\n"
    "           /var/log/* && \\\n"
    "    # Reset machine-id\n"
    "    truncate -s 0 /etc/machine-id\n"
    "\n"
    "# Python deps without cache\n"
    "COPY requirements.txt .\n"
    "RUN pip install --no-cache-dir -r requirements.txt && \\\n"
    "    find /usr -type d -name __pycache__ -exec rm -rf {} + 2>/dev/null || true\n"
    "\n"
    "# Node.js deps (if needed) with cache cleanup\n"
    "COPY package*.json ./\n"
    "RUN npm ci --cache /tmp/npm && \\\n"
    "    rm -rf /tmp/npm ~/.npm\n"
    "\n"
    "# Application code\n"
    "COPY . .\n"
    "\n"
    "# Build command (for compiled languages)\n"
    "# RUN go build -trimpath -ldflags=\"-buildid=\" -o /app/binary .\n";

namespace {

void write_file(const std::filesystem::path& p, const std::string& bytes) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
}

constexpr const char* kLayerTarType = "application/vnd.oci.image.layer.v1.tar";
constexpr const char* kLayerGzipType = "application/vnd.oci.image.layer.v1.tar+gzip";
constexpr const char* kConfigType = "application/vnd.oci.image.config.v1+json";
constexpr const char* kManifestType = "application/vnd.oci.image.manifest.v1+json";

nlohmann::json build_manifest_json(const std::string& config_json,
                                   const std::vector<LayerSpec>& layers,
                                   std::vector<Digest>& layer_digests_out) {
    nlohmann::json manifest;
    manifest["schemaVersion"] = 2;
    manifest["mediaType"] = kManifestType;
    manifest["config"] = {{"mediaType", kConfigType},
                          {"digest", compute_digest(config_json).prefixed()},
                          {"size", config_json.size()}};
    manifest["layers"] = nlohmann::json::array();
    for (const auto& layer : layers) {
        Digest d = compute_digest(layer.tar_bytes);
        layer_digests_out.push_back(d);
        manifest["layers"].push_back({{"mediaType", layer.gzip ? kLayerGzipType : kLayerTarType},
                                      {"digest", d.prefixed()},
                                      {"size", layer.tar_bytes.size()}});
    }
    return manifest;
}

}  // namespace

WrittenImage write_oci_layout(const std::filesystem::path& dir, const std::string& config_json,
                              const std::vector<LayerSpec>& layers) {
    WrittenImage out;
    out.path = dir;
    std::filesystem::create_directories(dir / "blobs" / "sha256");

    nlohmann::json manifest = build_manifest_json(config_json, layers, out.layer_digests);
    std::string manifest_text = manifest.dump();
    out.manifest_digest = compute_digest(manifest_text);
    out.config_digest = compute_digest(config_json);

    write_file(dir / "oci-layout", "{\"imageLayoutVersion\":\"1.0.0\"}\n");
    nlohmann::json index;
    index["schemaVersion"] = 2;
    index["manifests"] = {{{"mediaType", kManifestType},
                           {"digest", out.manifest_digest.prefixed()},
                           {"size", manifest_text.size()}}};
    write_file(dir / "index.json", index.dump());

    write_file(dir / "blobs" / "sha256" / out.manifest_digest.hex(), manifest_text);
    write_file(dir / "blobs" / "sha256" / out.config_digest.hex(), config_json);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        write_file(dir / "blobs" / "sha256" / out.layer_digests[i].hex(), layers[i].tar_bytes);
    }
    return out;
}

WrittenImage write_save_tarball(const std::filesystem::path& file, const std::string& config_json,
                                const std::vector<LayerSpec>& layers) {
    WrittenImage out;
    out.path = file;
    out.config_digest = compute_digest(config_json);

    TarBuilder tar;
    nlohmann::json manifest_entry;
    manifest_entry["Config"] = "blobs/sha256/" + out.config_digest.hex();
    manifest_entry["RepoTags"] = nlohmann::json::array();
    manifest_entry["Layers"] = nlohmann::json::array();

    tar.add_dir("blobs", 0);
    tar.add_dir("blobs/sha256", 0);
    tar.add_file("blobs/sha256/" + out.config_digest.hex(), config_json, 0);
    for (const auto& layer : layers) {
        Digest d = compute_digest(layer.tar_bytes);
        out.layer_digests.push_back(d);
        std::string member = "blobs/sha256/" + d.hex();
        tar.add_file(member, layer.tar_bytes, 0);
        manifest_entry["Layers"].push_back(member);
    }
    nlohmann::json manifest = nlohmann::json::array({manifest_entry});
    tar.add_file("manifest.json", manifest.dump(), 0);

    std::filesystem::create_directories(file.parent_path());
    std::string bytes = tar.finish();
    write_file(file, bytes);
    out.manifest_digest = compute_digest(bytes);
    return out;
}

std::filesystem::path fresh_temp_dir(const std::string& tag) {
    static std::mt19937_64 rng{0x5eedf00dULL};
    auto dir = std::filesystem::temp_directory_path() /
               ("reprodock-test-" + tag + "-" + std::to_string(rng()));
    std::filesystem::create_directories(dir);
    return dir;
}

BlobRef blob_from_string(const std::string& bytes) {
    return BlobRef::from_bytes(std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
}

std::string random_blob(std::uint64_t seed, std::size_t size) {
    std::mt19937_64 rng{seed};
    std::string out;
    out.resize(size);
    for (std::size_t i = 0; i < size; ++i) {
        out[i] = static_cast<char>(rng() & 0xff);
    }
    return out;
}

}  // namespace reprodock::testsupport
