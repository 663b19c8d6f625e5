/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "reprodock/oci.hpp"

#include <algorithm>
#include <functional>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "reprodock/tar.hpp"

namespace reprodock {

namespace {

using nlohmann::json;

constexpr std::string_view kOciLayerTar = "application/vnd.oci.image.layer.v1.tar";
constexpr std::string_view kOciLayerGzip = "application/vnd.oci.image.layer.v1.tar+gzip";
constexpr std::string_view kOciLayerZstd = "application/vnd.oci.image.layer.v1.tar+zstd";
constexpr std::string_view kDockerLayerGzip = "application/vnd.docker.image.rootfs.diff.tar.gzip";
constexpr std::string_view kDockerLayerTar = "application/vnd.docker.image.rootfs.diff.tar";

Digest digest_of_source(ByteSource& src, std::uint64_t* size_out = nullptr) {
    Sha256 hasher;
    char buf[64 * 1024];
    std::uint64_t total = 0;
    while (true) {
        std::size_t n = src.read(buf, sizeof buf);
        if (n == 0) break;
        hasher.update(buf, n);
        total += n;
    }
    if (size_out != nullptr) *size_out = total;
    return hasher.finish();
}

Descriptor parse_descriptor(const json& j, const std::string& context) {
    if (!j.contains("digest") || !j.contains("size")) {
        throw Error(context + ": descriptor missing digest or size");
    }
    Descriptor d;
    d.media_type = j.value("mediaType", "");
    std::string digest_text = j.at("digest").get<std::string>();
    if (digest_text.rfind("sha256:", 0) != 0) {
        throw UnsupportedMediaType(context + ": unsupported digest algorithm in '" + digest_text +
                                   "' (only sha256 is supported)");
    }
    try {
        d.digest = Digest::parse(digest_text);
    } catch (const MalformedDigest& e) {
        throw Error(context + ": " + e.what());
    }
    d.size = j.at("size").get<std::uint64_t>();
    return d;
}

void verify_blob(const Descriptor& want, const BlobRef& blob, const std::string& context) {
    auto src = blob.open();
    std::uint64_t size = 0;
    Digest got = digest_of_source(*src, &size);
    if (got != want.digest) {
        throw DigestMismatch(context + ": blob digest " + got.prefixed() +
                             " does not match descriptor " + want.digest.prefixed());
    }
    if (size != want.size) {
        throw DigestMismatch(context + ": blob size " + std::to_string(size) +
                             " does not match descriptor size " + std::to_string(want.size));
    }
}

std::vector<std::uint8_t> read_all(ByteSource& src) {
    std::vector<std::uint8_t> out;
    char buf[64 * 1024];
    while (true) {
        std::size_t n = src.read(buf, sizeof buf);
        if (n == 0) break;
        out.insert(out.end(), buf, buf + n);
    }
    return out;
}

json parse_json_bytes(const std::vector<std::uint8_t>& bytes, const std::string& context) {
    json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded()) {
        throw Error(context + ": invalid JSON");
    }
    return j;
}

LayerCompression sniff_compression(const BlobRef& blob) {
    auto src = blob.open();
    unsigned char magic[4] = {0, 0, 0, 0};
    std::size_t got = 0;
    while (got < sizeof magic) {
        std::size_t n = src->read(magic + got, sizeof magic - got);
        if (n == 0) break;
        got += n;
    }
    if (got >= 2 && magic[0] == 0x1f && magic[1] == 0x8b) return LayerCompression::Gzip;
    if (got >= 4 && magic[0] == 0x28 && magic[1] == 0xb5 && magic[2] == 0x2f && magic[3] == 0xfd) {
        return LayerCompression::Zstd;
    }
    return LayerCompression::None;
}

std::string_view media_type_for(LayerCompression c) {
    switch (c) {
        case LayerCompression::None: return kOciLayerTar;
        case LayerCompression::Gzip: return kOciLayerGzip;
        case LayerCompression::Zstd: return kOciLayerZstd;
    }
    return kOciLayerTar;
}

// Extracts the 64-hex digest embedded in a blob member path, if any
// ("blobs/sha256/<hex>", "<hex>.json", "<hex>/layer.tar").
std::optional<Digest> digest_from_member_path(std::string_view path) {
    auto looks_hex = [](std::string_view s) {
        if (s.size() != 64) return false;
        return std::all_of(s.begin(), s.end(), [](char c) {
            return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        });
    };
    if (auto pos = path.rfind("sha256/"); pos != std::string_view::npos) {
        auto rest = path.substr(pos + 7);
        if (looks_hex(rest)) return Digest::from_hex(rest);
    }
    if (path.size() >= 69 && path.substr(path.size() - 5) == ".json" &&
        looks_hex(path.substr(path.size() - 69, 64))) {
        return Digest::from_hex(path.substr(path.size() - 69, 64));
    }
    return std::nullopt;
}

struct TarMember {
    std::uint64_t offset = 0;  // body offset within the file
    std::uint64_t size = 0;
};

// Index of a tarball's regular-file members: path -> (offset, size).
std::map<std::string, TarMember> index_tar_members(const std::filesystem::path& path) {
    std::map<std::string, TarMember> out;
    FileSource file(path);
    TarReader reader(file);
    // A member's body starts one block past its own header.
    while (auto e = reader.next()) {
        if (e->typeflag == '0') {
            TarMember m;
            m.size = e->size;
            m.offset = e->header_offset + 512;
            out[normalize_archive_path(e->name)] = m;
        }
    }
    return out;
}

Image load_oci_layout_from(
    const std::filesystem::path& source,
    const std::function<BlobRef(const Digest&)>& blob_for,
    const std::function<std::optional<std::vector<std::uint8_t>>(const std::string&)>& small_file) {
    auto index_bytes = small_file("index.json");
    if (!index_bytes) {
        throw Error(source.string() + ": missing index.json");
    }
    json index = parse_json_bytes(*index_bytes, source.string() + ": index.json");
    if (!index.contains("manifests") || !index.at("manifests").is_array() ||
        index.at("manifests").empty()) {
        throw Error(source.string() + ": index.json lists no manifests");
    }

    // Pick the first manifest; descend through one level of nested index.
    Descriptor manifest_desc = parse_descriptor(index.at("manifests").at(0),
                                                source.string() + ": index.json");
    BlobRef manifest_blob = blob_for(manifest_desc.digest);
    if (!manifest_blob.valid()) {
        throw MissingBlob(source.string() + ": missing manifest blob " +
                          manifest_desc.digest.prefixed());
    }
    verify_blob(manifest_desc, manifest_blob, source.string() + ": manifest");
    auto manifest_src = manifest_blob.open();
    json mj = parse_json_bytes(read_all(*manifest_src), source.string() + ": manifest");
    if (mj.contains("manifests")) {
        // Nested image index (multi-platform): take the first entry.
        manifest_desc = parse_descriptor(mj.at("manifests").at(0), source.string() + ": index");
        manifest_blob = blob_for(manifest_desc.digest);
        if (!manifest_blob.valid()) {
            throw MissingBlob(source.string() + ": missing manifest blob " +
                              manifest_desc.digest.prefixed());
        }
        verify_blob(manifest_desc, manifest_blob, source.string() + ": manifest");
        auto nested_src = manifest_blob.open();
        mj = parse_json_bytes(read_all(*nested_src), source.string() + ": manifest");
    }
    if (!mj.contains("config") || !mj.contains("layers")) {
        throw Error(source.string() + ": manifest missing config or layers");
    }

    Manifest manifest;
    manifest.config = parse_descriptor(mj.at("config"), source.string() + ": config descriptor");
    if (mj.contains("annotations") && mj.at("annotations").is_object()) {
        for (auto& [k, v] : mj.at("annotations").items()) {
            if (v.is_string()) manifest.annotations[k] = v.get<std::string>();
        }
    }

    BlobRef config_blob = blob_for(manifest.config.digest);
    if (!config_blob.valid()) {
        throw MissingBlob(source.string() + ": missing config blob " +
                          manifest.config.digest.prefixed());
    }
    verify_blob(manifest.config, config_blob, source.string() + ": config");
    auto config_src = config_blob.open();
    std::vector<std::uint8_t> config_bytes = read_all(*config_src);

    std::vector<Layer> layers;
    for (const auto& lj : mj.at("layers")) {
        Descriptor d = parse_descriptor(lj, source.string() + ": layer descriptor");
        Layer layer;
        layer.descriptor = d;
        if (d.media_type == kOciLayerTar || d.media_type == kDockerLayerTar) {
            layer.compression = LayerCompression::None;
        } else if (d.media_type == kOciLayerGzip || d.media_type == kDockerLayerGzip) {
            layer.compression = LayerCompression::Gzip;
        } else if (d.media_type == kOciLayerZstd) {
            layer.compression = LayerCompression::Zstd;
        } else if (d.media_type.empty()) {
            layer.compression = LayerCompression::None;
        } else {
            throw UnsupportedMediaType(source.string() + ": unsupported layer media type '" +
                                       d.media_type + "'");
        }
        layer.blob = blob_for(d.digest);
        if (!layer.blob.valid()) {
            throw MissingBlob(source.string() + ": missing layer blob " + d.digest.prefixed());
        }
        verify_blob(d, layer.blob, source.string() + ": layer " + d.digest.short_hex());
        manifest.layers.push_back(d);
        layers.push_back(std::move(layer));
    }

    Image img = Image::from_parts(std::move(manifest), std::move(config_bytes), std::move(layers));
    return img;
}

Image load_oci_layout_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir / "oci-layout")) {
        throw Error(dir.string() + ": not an OCI layout (missing oci-layout marker)");
    }
    auto blob_for = [&dir](const Digest& d) -> BlobRef {
        auto p = dir / "blobs" / "sha256" / d.hex();
        if (!std::filesystem::exists(p)) return {};
        return BlobRef::from_file(p);
    };
    auto small_file = [&dir](const std::string& name) -> std::optional<std::vector<std::uint8_t>> {
        auto p = dir / name;
        if (!std::filesystem::exists(p)) return std::nullopt;
        return read_file_bytes(p);
    };
    return load_oci_layout_from(dir, blob_for, small_file);
}

Image load_save_tarball(const std::filesystem::path& file) {
    auto members = index_tar_members(file);
    auto member_bytes = [&](const std::string& name) -> std::optional<std::vector<std::uint8_t>> {
        auto it = members.find(name);
        if (it == members.end()) return std::nullopt;
        FileSource src(file, it->second.offset, it->second.size);
        return read_all(src);
    };

    if (members.count("oci-layout") != 0 && members.count("index.json") != 0) {
        // OCI layout archived into a tarball (modern `docker save` output).
        auto blob_for = [&](const Digest& d) -> BlobRef {
            auto it = members.find("blobs/sha256/" + d.hex());
            if (it == members.end()) return {};
            return BlobRef::from_file_window(file, it->second.offset, it->second.size);
        };
        return load_oci_layout_from(file, blob_for, member_bytes);
    }

    auto manifest_bytes = member_bytes("manifest.json");
    if (!manifest_bytes) {
        throw Error(file.string() + ": not a save-tarball (no manifest.json index member)");
    }
    json mj = parse_json_bytes(*manifest_bytes, file.string() + ": manifest.json");
    if (!mj.is_array() || mj.empty()) {
        throw Error(file.string() + ": manifest.json must be a non-empty array");
    }
    const json& entry = mj.at(0);

    auto member_or_throw = [&](const std::string& name) -> const TarMember& {
        auto it = members.find(normalize_archive_path(name));
        if (it == members.end()) {
            throw MissingBlob(file.string() + ": missing member '" + name + "'");
        }
        return it->second;
    };

    std::string config_name = entry.at("Config").get<std::string>();
    const TarMember& config_member = member_or_throw(config_name);
    FileSource config_src(file, config_member.offset, config_member.size);
    std::vector<std::uint8_t> config_bytes = read_all(config_src);

    Manifest manifest;
    manifest.config.media_type = "application/vnd.docker.container.image.v1+json";
    manifest.config.size = config_bytes.size();
    manifest.config.digest = compute_digest(config_bytes);
    if (auto named = digest_from_member_path(config_name);
        named && *named != manifest.config.digest) {
        throw DigestMismatch(file.string() + ": config member '" + config_name +
                             "' hashes to " + manifest.config.digest.prefixed());
    }

    std::vector<Layer> layers;
    for (const auto& lj : entry.at("Layers")) {
        std::string layer_name = lj.get<std::string>();
        const TarMember& m = member_or_throw(layer_name);
        Layer layer;
        layer.blob = BlobRef::from_file_window(file, m.offset, m.size);
        layer.compression = sniff_compression(layer.blob);
        layer.descriptor.media_type = std::string(media_type_for(layer.compression));
        layer.descriptor.size = m.size;
        auto src = layer.blob.open();
        layer.descriptor.digest = digest_of_source(*src);
        if (auto named = digest_from_member_path(layer_name);
            named && *named != layer.descriptor.digest) {
            throw DigestMismatch(file.string() + ": layer member '" + layer_name +
                                 "' hashes to " + layer.descriptor.digest.prefixed());
        }
        manifest.layers.push_back(layer.descriptor);
        layers.push_back(std::move(layer));
    }

    return Image::from_parts(std::move(manifest), std::move(config_bytes), std::move(layers));
}

}  // namespace

BlobRef BlobRef::from_file(std::filesystem::path path) {
    BlobRef b;
    b.path_ = std::move(path);
    return b;
}

BlobRef BlobRef::from_file_window(std::filesystem::path path, std::uint64_t offset,
                                  std::uint64_t length) {
    BlobRef b;
    b.path_ = std::move(path);
    b.offset_ = offset;
    b.length_ = length;
    b.windowed_ = true;
    return b;
}

BlobRef BlobRef::from_bytes(std::vector<std::uint8_t> bytes) {
    BlobRef b;
    b.bytes_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(bytes));
    return b;
}

std::unique_ptr<ByteSource> BlobRef::open() const {
    if (bytes_ != nullptr) {
        return std::make_unique<MemorySource>(bytes_);
    }
    if (windowed_) {
        return std::make_unique<FileSource>(path_, offset_, length_);
    }
    return std::make_unique<FileSource>(path_);
}

std::uint64_t BlobRef::size() const {
    if (bytes_ != nullptr) return bytes_->size();
    if (windowed_) return length_;
    return std::filesystem::file_size(path_);
}

std::string_view entry_type_name(EntryType t) {
    switch (t) {
        case EntryType::File: return "file";
        case EntryType::Dir: return "dir";
        case EntryType::Symlink: return "symlink";
        case EntryType::Hardlink: return "hardlink";
        case EntryType::Other: return "other";
    }
    return "other";
}

Image Image::load(const std::filesystem::path& path, ImageFormat format) {
    if (format == ImageFormat::Auto) {
        format = std::filesystem::is_directory(path) ? ImageFormat::OciLayout
                                                     : ImageFormat::SaveTarball;
    }
    Image img = format == ImageFormat::OciLayout ? load_oci_layout_dir(path)
                                                 : load_save_tarball(path);
    img.source_ = path;
    return img;
}

Image Image::from_parts(Manifest manifest, std::vector<std::uint8_t> config_bytes,
                        std::vector<Layer> layers) {
    Image img;
    img.manifest_ = std::move(manifest);
    img.config_bytes_ = std::move(config_bytes);
    img.layers_ = std::move(layers);
    return img;
}

std::string normalize_archive_path(std::string_view raw) {
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        auto slash = raw.find('/', pos);
        std::string_view comp = slash == std::string_view::npos ? raw.substr(pos)
                                                                : raw.substr(pos, slash - pos);
        if (comp == "..") {
            if (!parts.empty()) parts.pop_back();
        } else if (!comp.empty() && comp != ".") {
            parts.push_back(comp);
        }
        if (slash == std::string_view::npos) break;
        pos = slash + 1;
    }
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += '/';
        out += parts[i];
    }
    return out;
}

std::vector<FileEntry> list_layer_entries(const Layer& layer) {
    std::unique_ptr<ByteSource> src = layer.blob.open();
    std::unique_ptr<ByteSource> stream;
    switch (layer.compression) {
        case LayerCompression::None:
            stream = std::move(src);
            break;
        case LayerCompression::Gzip:
            stream = std::make_unique<GzipSource>(std::move(src));
            break;
        case LayerCompression::Zstd:
            throw DecompressFailure(
                "zstd-compressed layers are recorded but cannot be walked in this build");
    }

    TarReader reader(*stream);
    std::vector<FileEntry> out;
    std::unordered_map<std::string, std::size_t> last_by_path;
    std::unordered_map<std::string, Digest> file_digests;

    while (auto raw = reader.next()) {
        std::string path = normalize_archive_path(raw->name);
        if (path.empty()) continue;  // "./" root entry

        FileEntry e;
        e.path = path;
        e.size = raw->size;
        e.mode = raw->mode & 07777;
        e.uid = raw->uid;
        e.gid = raw->gid;
        e.mtime = raw->mtime;

        auto slash = path.rfind('/');
        std::string_view base = slash == std::string::npos
                                    ? std::string_view(path)
                                    : std::string_view(path).substr(slash + 1);
        if (base.rfind(".wh.", 0) == 0) {
            e.whiteout = true;
            e.type = EntryType::Other;
            // A whiteout body carries nothing useful; drain it.
            char sink[4096];
            while (reader.read_body(sink, sizeof sink) > 0) {
            }
        } else {
            switch (raw->typeflag) {
                case '0':
                case '7':
                    e.type = EntryType::File;
                    break;
                case '5':
                    e.type = EntryType::Dir;
                    e.size = 0;
                    break;
                case '2':
                    e.type = EntryType::Symlink;
                    e.link_target = raw->linkname;
                    e.size = 0;
                    break;
                case '1': {
                    e.type = EntryType::Hardlink;
                    std::string target = normalize_archive_path(raw->linkname);
                    e.link_target = target;
                    if (auto it = file_digests.find(target); it != file_digests.end()) {
                        e.content_digest = it->second;
                    } else {
                        e.hardlink_unresolved = true;
                    }
                    e.size = 0;
                    break;
                }
                default:
                    e.type = EntryType::Other;
                    break;
            }
            if (e.type == EntryType::File) {
                Sha256 hasher;
                char buf[64 * 1024];
                while (true) {
                    std::size_t n = reader.read_body(buf, sizeof buf);
                    if (n == 0) break;
                    hasher.update(buf, n);
                }
                e.content_digest = hasher.finish();
                file_digests[path] = *e.content_digest;
            }
        }

        if (auto it = last_by_path.find(path); it != last_by_path.end()) {
            out[it->second].shadowed = true;
        }
        last_by_path[path] = out.size();
        out.push_back(std::move(e));
    }
    return out;
}

std::map<std::string, FileEntry> flatten_image(const Image& image) {
    std::map<std::string, FileEntry> fs;
    for (const auto& layer : image.layers()) {
        for (auto& entry : list_layer_entries(layer)) {
            if (entry.shadowed) continue;
            if (entry.whiteout) {
                auto slash = entry.path.rfind('/');
                std::string dir = slash == std::string::npos ? "" : entry.path.substr(0, slash);
                std::string base =
                    slash == std::string::npos ? entry.path : entry.path.substr(slash + 1);
                if (base == ".wh..wh..opq") {
                    // Opaque marker: clear everything under the directory.
                    std::string prefix = dir.empty() ? "" : dir + "/";
                    for (auto it = fs.lower_bound(prefix); it != fs.end();) {
                        if (prefix.empty() || it->first.rfind(prefix, 0) == 0) {
                            it = fs.erase(it);
                        } else {
                            break;
                        }
                    }
                } else {
                    std::string target =
                        dir.empty() ? base.substr(4) : dir + "/" + base.substr(4);
                    fs.erase(target);
                    std::string prefix = target + "/";
                    for (auto it = fs.lower_bound(prefix); it != fs.end();) {
                        if (it->first.rfind(prefix, 0) == 0) {
                            it = fs.erase(it);
                        } else {
                            break;
                        }
                    }
                }
                continue;
            }
            fs[entry.path] = std::move(entry);
        }
    }
    return fs;
}

LayerCompression compression_for_media_type(std::string_view media_type) {
    if (media_type == kOciLayerGzip || media_type == kDockerLayerGzip) {
        return LayerCompression::Gzip;
    }
    if (media_type == kOciLayerZstd) return LayerCompression::Zstd;
    return LayerCompression::None;
}

}  // namespace reprodock
