#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "openfloor/domain.hpp"

namespace openfloor {

inline constexpr int kDefaultPbkdf2Iterations = 100000;
inline constexpr DurationMs kTokenIdleTimeoutMs = 12LL * 3600 * 1000;

// "pbkdf2-sha256$<iterations>$<salt hex>$<hash hex>"
std::string hash_password(std::string_view password, int iterations = kDefaultPbkdf2Iterations);
bool verify_password(std::string_view password, std::string_view stored);
// Iteration count of a stored hash, if well formed.
std::optional<int> hash_iterations(std::string_view stored);

// 128 random bits, hex encoded.
std::string random_token();

// Opaque bearer tokens bound to a person, expiring after an idle period.
class TokenTable {
public:
    explicit TokenTable(DurationMs idle_timeout_ms = kTokenIdleTimeoutMs)
        : idle_timeout_ms_(idle_timeout_ms) {}

    std::string issue(const PersonId& person, TimeMs now);
    // Refreshes the idle timer on success.
    std::optional<PersonId> resolve(const std::string& token, TimeMs now);
    void revoke(const std::string& token);

private:
    struct Entry {
        PersonId person;
        std::atomic<TimeMs> last_used;
    };

    DurationMs idle_timeout_ms_;
    std::shared_mutex mu_;
    std::map<std::string, std::unique_ptr<Entry>, std::less<>> entries_;
};

}  // namespace openfloor
