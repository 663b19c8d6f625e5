/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reprodock/digest.hpp"
#include "reprodock/errors.hpp"
#include "reprodock/io.hpp"

namespace reprodock {

class MissingBlob : public Error {
public:
    using Error::Error;
};

class DigestMismatch : public Error {
public:
    using Error::Error;
};

class UnsupportedMediaType : public Error {
public:
    using Error::Error;
};

struct Descriptor {
    std::string media_type;
    Digest digest;
    std::uint64_t size = 0;

    friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

struct Manifest {
    Descriptor config;
    std::vector<Descriptor> layers;  // stacking order
    std::map<std::string, std::string> annotations;  // loaded, never part of digest equality
};

enum class LayerCompression { None, Gzip, Zstd };

// Readable blob handle: a whole file, a window into a file, or an in-memory
// buffer.
class BlobRef {
public:
    BlobRef() = default;
    static BlobRef from_file(std::filesystem::path path);
    static BlobRef from_file_window(std::filesystem::path path, std::uint64_t offset,
                                    std::uint64_t length);
    static BlobRef from_bytes(std::vector<std::uint8_t> bytes);

    std::unique_ptr<ByteSource> open() const;
    std::uint64_t size() const;
    bool valid() const { return bytes_ != nullptr || !path_.empty(); }

private:
    std::filesystem::path path_;
    std::uint64_t offset_ = 0;
    std::uint64_t length_ = 0;
    bool windowed_ = false;
    std::shared_ptr<const std::vector<std::uint8_t>> bytes_;
};

struct Layer {
    Descriptor descriptor;
    LayerCompression compression = LayerCompression::None;
    BlobRef blob;
};

enum class EntryType { File, Dir, Symlink, Hardlink, Other };

std::string_view entry_type_name(EntryType t);

struct FileEntry {
    std::string path;  // normalized: forward slashes, no leading slash, no "."/".."
    EntryType type = EntryType::File;
    std::uint64_t size = 0;
    std::uint32_t mode = 0;  // permission bits
    std::uint64_t uid = 0;
    std::uint64_t gid = 0;
    std::int64_t mtime = 0;  // whole seconds since epoch
    std::optional<std::string> link_target;       // symlink/hardlink
    std::optional<Digest> content_digest;         // regular files only
    bool whiteout = false;            // ".wh." marker entry
    bool shadowed = false;            // a later entry in the same layer wins
    bool hardlink_unresolved = false; // target not seen earlier in the archive
};

enum class ImageFormat { Auto, OciLayout, SaveTarball };

// A loaded container image: manifest, config blob, and layer blob handles in
// stacking order. Loading verifies every blob against its descriptor digest;
// an image whose blobs cannot be verified is never returned.
class Image {
public:
    // format Auto: directories load as OCI layouts, files as save-tarballs.
    static Image load(const std::filesystem::path& path, ImageFormat format = ImageFormat::Auto);

    // Assembles an image from parts without digest verification. Intended
    // for synthetic fixtures; loaders never use it.
    static Image from_parts(Manifest manifest, std::vector<std::uint8_t> config_bytes,
                            std::vector<Layer> layers);

    const Manifest& manifest() const { return manifest_; }
    const std::vector<std::uint8_t>& config_bytes() const { return config_bytes_; }
    const std::vector<Layer>& layers() const { return layers_; }
    const std::filesystem::path& source() const { return source_; }

private:
    Manifest manifest_;
    std::vector<std::uint8_t> config_bytes_;
    std::vector<Layer> layers_;
    std::filesystem::path source_;
};

// Normalizes an archive path: strips leading "/" and "./", resolves "." and
// ".." lexically, drops trailing slashes.
std::string normalize_archive_path(std::string_view raw);

// Walks one layer archive in order. Regular-file content digests are computed
// streaming. Whiteout markers are surfaced as EntryType::Other with the
// whiteout flag set. Duplicate paths keep every entry, earlier ones flagged
// shadowed. Hardlinks inherit the digest of their target when it appeared
// earlier in the archive.
std::vector<FileEntry> list_layer_entries(const Layer& layer);

// Flattened whole-image view: layers applied in order, whiteouts honored,
// later entries win.
std::map<std::string, FileEntry> flatten_image(const Image& image);

LayerCompression compression_for_media_type(std::string_view media_type);

}  // namespace reprodock
