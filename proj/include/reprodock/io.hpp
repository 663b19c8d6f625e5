/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include "reprodock/errors.hpp"

namespace reprodock {

class DecompressFailure : public Error {
public:
    using Error::Error;
};

// Pull-based byte stream. read() returns 0 at end of stream.
class ByteSource {
public:
    virtual ~ByteSource() = default;
    virtual std::size_t read(void* buf, std::size_t max) = 0;
};

// Reads a file, optionally restricted to a [offset, offset+length) window.
class FileSource : public ByteSource {
public:
    explicit FileSource(const std::filesystem::path& path);
    FileSource(const std::filesystem::path& path, std::uint64_t offset, std::uint64_t length);
    ~FileSource() override;
    FileSource(const FileSource&) = delete;
    FileSource& operator=(const FileSource&) = delete;

    std::size_t read(void* buf, std::size_t max) override;

private:
    std::FILE* file_ = nullptr;
    std::uint64_t remaining_ = 0;
    bool windowed_ = false;
};

class MemorySource : public ByteSource {
public:
    explicit MemorySource(std::shared_ptr<const std::vector<std::uint8_t>> bytes);
    std::size_t read(void* buf, std::size_t max) override;

private:
    std::shared_ptr<const std::vector<std::uint8_t>> bytes_;
    std::size_t pos_ = 0;
};

// Streaming gzip (and raw zlib) decompressor. Memory use is bounded by its
// internal buffer, independent of stream size.
class GzipSource : public ByteSource {
public:
    explicit GzipSource(std::unique_ptr<ByteSource> inner);
    ~GzipSource() override;
    GzipSource(const GzipSource&) = delete;
    GzipSource& operator=(const GzipSource&) = delete;

    std::size_t read(void* buf, std::size_t max) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const void* data, std::size_t len);

}  // namespace reprodock
