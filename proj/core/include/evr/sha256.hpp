#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace evr {

// FIPS 180-4 SHA-256. Used for replay-store keys and content-addressed
// cache paths; the hex digest of the exact input bytes is part of the
// on-disk replay format, so this must stay stable.
class Sha256 {
  public:
    Sha256();

    void update(const void* data, std::size_t len);
    void update(std::string_view s) { update(s.data(), s.size()); }

    // Finalizes and returns the 32-byte digest. The object must not be
    // updated afterwards.
    std::array<std::uint8_t, 32> finish();

  private:
    void process_block(const std::uint8_t* block);

    std::array<std::uint32_t, 8> state_;
    std::array<std::uint8_t, 64> buffer_;
    std::size_t buffer_len_ = 0;
    std::uint64_t total_len_ = 0;
};

// Lowercase hex digest of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace evr
