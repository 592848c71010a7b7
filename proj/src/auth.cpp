#include "openfloor/auth.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace openfloor {

namespace {

constexpr std::string_view kScheme = "pbkdf2-sha256";
constexpr std::size_t kSaltBytes = 16;
constexpr std::size_t kHashBytes = 32;

std::string to_hex(const unsigned char* data, std::size_t n) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(n * 2, '0');
    for (std::size_t i = 0; i < n; ++i) {
        out[2 * i] = digits[data[i] >> 4];
        out[2 * i + 1] = digits[data[i] & 0x0f];
    }
    return out;
}

std::optional<std::vector<unsigned char>> from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::vector<unsigned char> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out[i] = static_cast<unsigned char>(hi << 4 | lo);
    }
    return out;
}

std::vector<unsigned char> random_bytes(std::size_t n) {
    std::vector<unsigned char> out(n);
    if (RAND_bytes(out.data(), static_cast<int>(n)) != 1) throw std::runtime_error("RAND_bytes failed");
    return out;
}

std::vector<unsigned char> derive(std::string_view password, const std::vector<unsigned char>& salt,
                                  int iterations) {
    std::vector<unsigned char> out(kHashBytes);
    if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), salt.data(),
                          static_cast<int>(salt.size()), iterations, EVP_sha256(),
                          static_cast<int>(out.size()), out.data()) != 1)
        throw std::runtime_error("PBKDF2 failed");
    return out;
}

}  // namespace

std::string hash_password(std::string_view password, int iterations) {
    auto salt = random_bytes(kSaltBytes);
    auto hash = derive(password, salt, iterations);
    return std::string(kScheme) + "$" + std::to_string(iterations) + "$" +
           to_hex(salt.data(), salt.size()) + "$" + to_hex(hash.data(), hash.size());
}

bool verify_password(std::string_view password, std::string_view stored) {
    auto next = [&stored]() {
        auto pos = stored.find('$');
        auto part = stored.substr(0, pos);
        stored = pos == std::string_view::npos ? std::string_view{} : stored.substr(pos + 1);
        return part;
    };
    if (next() != kScheme) return false;
    int iterations = 0;
    try {
        iterations = std::stoi(std::string(next()));
    } catch (const std::exception&) {
        return false;
    }
    auto salt = from_hex(next());
    auto expected = from_hex(next());
    if (iterations <= 0 || !salt || !expected || expected->size() != kHashBytes) return false;
    auto actual = derive(password, *salt, iterations);
    return CRYPTO_memcmp(actual.data(), expected->data(), kHashBytes) == 0;
}

std::optional<int> hash_iterations(std::string_view stored) {
    if (stored.substr(0, kScheme.size()) != kScheme || stored.size() <= kScheme.size() + 1)
        return std::nullopt;
    auto rest = stored.substr(kScheme.size() + 1);
    auto digits = rest.substr(0, rest.find('$'));
    int n = 0;
    for (char c : digits) {
        if (c < '0' || c > '9' || n > 100000000) return std::nullopt;
        n = n * 10 + (c - '0');
    }
    if (n <= 0) return std::nullopt;
    return n;
}

std::string random_token() {
    auto bytes = random_bytes(16);
    return to_hex(bytes.data(), bytes.size());
}

std::string TokenTable::issue(const PersonId& person, TimeMs now) {
    auto token = random_token();
    auto entry = std::make_unique<Entry>();
    entry->person = person;
    entry->last_used.store(now);
    std::unique_lock lock(mu_);
    entries_[token] = std::move(entry);
    return token;
}

std::optional<PersonId> TokenTable::resolve(const std::string& token, TimeMs now) {
    {
        std::shared_lock lock(mu_);
        auto it = entries_.find(token);
        if (it == entries_.end()) return std::nullopt;
        auto& e = *it->second;
        if (now - e.last_used.load() <= idle_timeout_ms_) {
            TimeMs prev = e.last_used.load();
            while (now > prev && !e.last_used.compare_exchange_weak(prev, now)) {
            }
            return e.person;
        }
    }
    revoke(token);
    return std::nullopt;
}

void TokenTable::revoke(const std::string& token) {
    std::unique_lock lock(mu_);
    entries_.erase(token);
}

}  // namespace openfloor
