#pragma once

#include <string>
#include <string_view>

namespace roadwatch::crypto {

/// Standard-alphabet, padded Base64 check.
bool is_base64(std::string_view text);

std::string sha256_hex(std::string_view data);

/// Hex encoding of `bytes` bytes from the system CSPRNG.
std::string random_hex(std::size_t bytes);

enum class HashStrength { Minimal, Interactive, Moderate };

/// Argon2id digest string with an embedded per-call salt and parameters.
std::string hash_password(std::string_view password, HashStrength strength = HashStrength::Interactive);

/// Constant-time verification against a digest produced by hash_password.
bool verify_password(std::string_view digest, std::string_view password);

bool constant_time_equal(std::string_view a, std::string_view b);

}  // namespace roadwatch::crypto
