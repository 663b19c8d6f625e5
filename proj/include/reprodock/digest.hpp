/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "reprodock/errors.hpp"

namespace reprodock {

class MalformedDigest : public Error {
public:
    using Error::Error;
};

// SHA-256 content digest, stored as 64 lowercase hex characters.
// SHA-256 is the only supported algorithm.
class Digest {
public:
    Digest() = default;

    // hex must be exactly 64 hex characters; uppercase input is folded to
    // lowercase. Throws MalformedDigest otherwise.
    static Digest from_hex(std::string_view hex);

    // Accepts the "sha256:<64 hex>" form. Any other algorithm prefix is
    // rejected with MalformedDigest.
    static Digest parse(std::string_view prefixed);

    const std::string& hex() const { return hex_; }
    std::string prefixed() const { return "sha256:" + hex_; }

    // Leading hex characters for compact display ("2d35ebdb").
    std::string short_hex(std::size_t n = 8) const { return hex_.substr(0, n); }

    bool empty() const { return hex_.empty(); }

    friend bool operator==(const Digest&, const Digest&) = default;
    friend auto operator<=>(const Digest&, const Digest&) = default;

private:
    std::string hex_;
};

// Streaming SHA-256 hasher; memory use is independent of input size.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(Sha256&& other) noexcept;
    Sha256& operator=(Sha256&& other) noexcept;
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* data, std::size_t len);
    void update(std::string_view bytes) { update(bytes.data(), bytes.size()); }

    // Finalizes and resets the hasher to a fresh state.
    Digest finish();

private:
    void* ctx_ = nullptr;  // EVP_MD_CTX
};

Digest compute_digest(const void* data, std::size_t len);
Digest compute_digest(std::string_view bytes);
Digest compute_digest(const std::vector<std::uint8_t>& bytes);

}  // namespace reprodock
