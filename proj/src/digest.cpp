/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "reprodock/digest.hpp"

#include <openssl/evp.h>

#include <cctype>

namespace reprodock {

namespace {

bool is_hex(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

}  // namespace

Digest Digest::from_hex(std::string_view hex) {
    if (hex.size() != 64) {
        throw MalformedDigest("digest must be 64 hex characters, got " +
                              std::to_string(hex.size()));
    }
    Digest d;
    d.hex_.reserve(64);
    for (char c : hex) {
        if (!is_hex(c)) {
            throw MalformedDigest("digest contains non-hex character: " + std::string(hex));
        }
        d.hex_.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return d;
}

Digest Digest::parse(std::string_view prefixed) {
    constexpr std::string_view kPrefix = "sha256:";
    if (prefixed.substr(0, kPrefix.size()) != kPrefix) {
        throw MalformedDigest("expected sha256: prefix in digest: " + std::string(prefixed));
    }
    return from_hex(prefixed.substr(kPrefix.size()));
}

Sha256::Sha256() {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("failed to initialize SHA-256 context");
    }
    ctx_ = ctx;
}

Sha256::~Sha256() {
    EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
}

Sha256::Sha256(Sha256&& other) noexcept : ctx_(other.ctx_) {
    other.ctx_ = nullptr;
}

Sha256& Sha256::operator=(Sha256&& other) noexcept {
    if (this != &other) {
        EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
        ctx_ = other.ctx_;
        other.ctx_ = nullptr;
    }
    return *this;
}

void Sha256::update(const void* data, std::size_t len) {
    if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data, len) != 1) {
        throw Error("SHA-256 update failed");
    }
}

Digest Sha256::finish() {
    unsigned char raw[EVP_MAX_MD_SIZE];
    unsigned int raw_len = 0;
    if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), raw, &raw_len) != 1) {
        throw Error("SHA-256 finalization failed");
    }
    static const char* kHex = "0123456789abcdef";
    std::string hex;
    hex.reserve(raw_len * 2);
    for (unsigned int i = 0; i < raw_len; ++i) {
        hex.push_back(kHex[raw[i] >> 4]);
        hex.push_back(kHex[raw[i] & 0x0f]);
    }
    EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr);
    return Digest::from_hex(hex);
}

Digest compute_digest(const void* data, std::size_t len) {
    Sha256 h;
    h.update(data, len);
    return h.finish();
}

Digest compute_digest(std::string_view bytes) {
    return compute_digest(bytes.data(), bytes.size());
}

Digest compute_digest(const std::vector<std::uint8_t>& bytes) {
    return compute_digest(bytes.data(), bytes.size());
}

}  // namespace reprodock
