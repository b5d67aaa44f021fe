#pragma once

#include "rxai/tensor.hpp"

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace rxai::test {

inline std::string fixture(const std::string& name) {
    return std::string(RXAI_FIXTURE_DIR) + "/" + name;
}

inline uint64_t fnv1a(const void* data, size_t size) {
    const auto* p = static_cast<const uint8_t*>(data);
    uint64_t h = 1469598103934665603ULL;
    for (size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t hash_tensor(const Tensor& t) {
    return fnv1a(t.data.data(), static_cast<size_t>(t.size()) * sizeof(float));
}

inline uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a(bytes.data(), bytes.size());
}

inline bool files_identical(const std::string& a, const std::string& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    std::vector<char> ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::vector<char> bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    return ba == bb;
}

} // namespace rxai::test
