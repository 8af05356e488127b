#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>

namespace grasp {

/// 64-bit FNV-1a. Used for stable identifiers (layer ids, ETags, catalog
/// versions), never for security.
class Fnv1a {
public:
    Fnv1a& update(std::span<const std::uint8_t> bytes) noexcept {
        for (std::uint8_t b : bytes) {
            state_ ^= b;
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Fnv1a& update(std::string_view s) noexcept {
        return update(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    }
    Fnv1a& update(std::uint64_t v) noexcept {
        std::uint8_t le[8];
        for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(v >> (8 * i));
        return update(std::span<const std::uint8_t>(le, 8));
    }

    std::uint64_t value() const noexcept { return state_; }

    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
        return buf;
    }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

} // namespace grasp
