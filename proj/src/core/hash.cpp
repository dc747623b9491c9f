#include "plm/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>

#include "plm/error.hpp"

namespace plm {
namespace {

std::array<unsigned char, 32> digest(std::string_view data)
{
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    std::array<unsigned char, 32> out{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size())
        throw Error("sha256: digest failed");
    return out;
}

} // namespace

std::string sha256_hex(std::string_view data)
{
    static constexpr char kHex[] = "0123456789abcdef";
    const auto d = digest(data);
    std::string s;
    s.reserve(64);
    for (unsigned char b : d) {
        s.push_back(kHex[b >> 4]);
        s.push_back(kHex[b & 0xF]);
    }
    return s;
}

std::uint64_t sha256_u64(std::string_view data)
{
    const auto d = digest(data);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v = (v << 8) | d[static_cast<std::size_t>(i)];
    return v;
}

} // namespace plm
