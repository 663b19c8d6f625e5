/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "reprodock/io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace reprodock {

FileSource::FileSource(const std::filesystem::path& path) {
    file_ = std::fopen(path.c_str(), "rb");
    if (file_ == nullptr) {
        throw Error("cannot open file: " + path.string());
    }
}

FileSource::FileSource(const std::filesystem::path& path, std::uint64_t offset,
                       std::uint64_t length)
    : FileSource(path) {
    if (fseeko(file_, static_cast<off_t>(offset), SEEK_SET) != 0) {
        std::fclose(file_);
        file_ = nullptr;
        throw Error("cannot seek in file: " + path.string());
    }
    remaining_ = length;
    windowed_ = true;
}

FileSource::~FileSource() {
    if (file_ != nullptr) std::fclose(file_);
}

std::size_t FileSource::read(void* buf, std::size_t max) {
    if (windowed_) {
        if (remaining_ == 0) return 0;
        max = static_cast<std::size_t>(std::min<std::uint64_t>(max, remaining_));
    }
    std::size_t n = std::fread(buf, 1, max, file_);
    if (n == 0 && std::ferror(file_) != 0) {
        throw Error("read error");
    }
    if (windowed_) remaining_ -= n;
    return n;
}

MemorySource::MemorySource(std::shared_ptr<const std::vector<std::uint8_t>> bytes)
    : bytes_(std::move(bytes)) {}

std::size_t MemorySource::read(void* buf, std::size_t max) {
    if (bytes_ == nullptr || pos_ >= bytes_->size()) return 0;
    std::size_t n = std::min(max, bytes_->size() - pos_);
    std::memcpy(buf, bytes_->data() + pos_, n);
    pos_ += n;
    return n;
}

struct GzipSource::Impl {
    std::unique_ptr<ByteSource> inner;
    z_stream strm{};
    std::vector<unsigned char> in_buf;
    bool input_done = false;
    bool stream_done = false;

    explicit Impl(std::unique_ptr<ByteSource> src) : inner(std::move(src)), in_buf(64 * 1024) {
        // 15+32: accept both gzip and zlib headers.
        if (inflateInit2(&strm, 15 + 32) != Z_OK) {
            throw DecompressFailure("inflateInit failed");
        }
    }
    ~Impl() { inflateEnd(&strm); }
};

GzipSource::GzipSource(std::unique_ptr<ByteSource> inner)
    : impl_(std::make_unique<Impl>(std::move(inner))) {}

GzipSource::~GzipSource() = default;

std::size_t GzipSource::read(void* buf, std::size_t max) {
    auto& st = *impl_;
    if (st.stream_done || max == 0) return 0;
    st.strm.next_out = static_cast<unsigned char*>(buf);
    st.strm.avail_out = static_cast<uInt>(max);
    while (st.strm.avail_out > 0 && !st.stream_done) {
        if (st.strm.avail_in == 0 && !st.input_done) {
            std::size_t got = st.inner->read(st.in_buf.data(), st.in_buf.size());
            st.strm.next_in = st.in_buf.data();
            st.strm.avail_in = static_cast<uInt>(got);
            if (got == 0) st.input_done = true;
        }
        int rc = inflate(&st.strm, st.input_done ? Z_FINISH : Z_NO_FLUSH);
        if (rc == Z_STREAM_END) {
            st.stream_done = true;
            break;
        }
        if (rc == Z_BUF_ERROR && st.input_done) {
            throw DecompressFailure("truncated gzip stream");
        }
        if (rc != Z_OK && rc != Z_BUF_ERROR) {
            throw DecompressFailure(std::string("gzip decompression failed: ") +
                                    (st.strm.msg != nullptr ? st.strm.msg : zError(rc)));
        }
    }
    return max - st.strm.avail_out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open file: " + path.string());
    }
    std::vector<std::uint8_t> out;
    char buf[64 * 1024];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        out.insert(out.end(), buf, buf + in.gcount());
    }
    return out;
}

void write_file_bytes(const std::filesystem::path& path, const void* data, std::size_t len) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open file for writing: " + path.string());
    }
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    if (!out) {
        throw Error("write failed: " + path.string());
    }
}

}  // namespace reprodock
