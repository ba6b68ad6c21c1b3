#include "fbdrift/common/digest.hpp"

#include <openssl/sha.h>

#include <cstdio>

namespace fbd {

namespace {
std::string to_hex(const unsigned char* md, std::size_t n) {
    std::string out(2 * n, '0');
    static const char* hex = "0123456789abcdef";
    for (std::size_t i = 0; i < n; ++i) {
        out[2 * i] = hex[md[i] >> 4];
        out[2 * i + 1] = hex[md[i] & 0xF];
    }
    return out;
}
}  // namespace

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), md);
    return to_hex(md, SHA256_DIGEST_LENGTH);
}

std::string sha256_hex(std::span<const double> values) {
    return sha256_hex(std::string_view(reinterpret_cast<const char*>(values.data()),
                                       values.size() * sizeof(double)));
}

}  // namespace fbd
