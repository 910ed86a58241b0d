#include "skillsynth/digest.hpp"

#include <array>
#include <fstream>

#include <openssl/evp.h>

#include "skillsynth/errors.hpp"

namespace skillsynth {

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
            throw InfraError("sha256: digest init failed");
        }
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(std::string_view data) { EVP_DigestUpdate(ctx_, data.data(), data.size()); }

    std::array<unsigned char, 32> finish() {
        std::array<unsigned char, 32> out{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_, out.data(), &len);
        return out;
    }

private:
    EVP_MD_CTX* ctx_;
};

std::string to_hex(const unsigned char* bytes, std::size_t n) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(n * 2, '0');
    for (std::size_t i = 0; i < n; ++i) {
        out[2 * i] = kDigits[bytes[i] >> 4];
        out[2 * i + 1] = kDigits[bytes[i] & 0xf];
    }
    return out;
}

} // namespace

std::string sha256_hex(std::string_view data) {
    Sha256 h;
    h.update(data);
    auto d = h.finish();
    return to_hex(d.data(), d.size());
}

std::string sha256_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open " + file.string());
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
    }
    auto d = h.finish();
    return to_hex(d.data(), d.size());
}

std::uint64_t hash64(std::string_view data) {
    Sha256 h;
    h.update(data);
    auto d = h.finish();
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | d[i];
    return v;
}

std::string stable_id(std::string_view prefix, std::initializer_list<std::string_view> parts) {
    Sha256 h;
    bool first = true;
    for (auto p : parts) {
        if (!first) h.update(std::string_view("\0", 1));
        h.update(p);
        first = false;
    }
    auto d = h.finish();
    return std::string(prefix) + to_hex(d.data(), 8);
}

} // namespace skillsynth
