#include "doctest.h"
#include "evr/sha256.hpp"

#include <string>

using evr::Sha256;
using evr::sha256_hex;

TEST_CASE("known digests") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("million a") {
    Sha256 h;
    const std::string chunk(1000, 'a');
    for (int i = 0; i < 1000; ++i) h.update(chunk);
    auto digest = h.finish();
    std::string hex;
    static const char* alphabet = "0123456789abcdef";
    for (auto b : digest) {
        hex.push_back(alphabet[b >> 4]);
        hex.push_back(alphabet[b & 0x0f]);
    }
    CHECK(hex == "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("chunked update equals one-shot") {
    const std::string data = "the quick brown fox jumps over the lazy dog, twice around";
    for (std::size_t split = 0; split <= data.size(); split += 7) {
        Sha256 h;
        h.update(data.substr(0, split));
        h.update(data.substr(split));
        auto digest = h.finish();
        Sha256 whole;
        whole.update(data);
        CHECK(digest == whole.finish());
    }
}
