#include "roadwatch/crypto.hpp"

#include <sodium.h>

#include <vector>

#include "roadwatch/error.hpp"

namespace roadwatch::crypto {
namespace {

void ensure_sodium() {
  static const bool ready = sodium_init() >= 0;
  if (!ready) throw Error(ErrorCode::Internal, "libsodium failed to initialize");
}

std::string to_hex(const unsigned char* data, std::size_t n) {
  std::string out(n * 2 + 1, '\0');
  sodium_bin2hex(out.data(), out.size(), data, n);
  out.pop_back();
  return out;
}

}  // namespace

bool is_base64(std::string_view text) {
  ensure_sodium();
  if (text.size() % 4 != 0) return false;
  std::vector<unsigned char> bin(text.size() / 4 * 3 + 1);
  std::size_t len = 0;
  const char* end = nullptr;
  const int rc = sodium_base642bin(bin.data(), bin.size(), text.data(), text.size(), nullptr,
                                   &len, &end, sodium_base64_VARIANT_ORIGINAL);
  return rc == 0 && end == text.data() + text.size();
}

std::string sha256_hex(std::string_view data) {
  ensure_sodium();
  unsigned char out[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(out, reinterpret_cast<const unsigned char*>(data.data()), data.size());
  return to_hex(out, sizeof out);
}

std::string random_hex(std::size_t bytes) {
  ensure_sodium();
  std::vector<unsigned char> buf(bytes);
  randombytes_buf(buf.data(), buf.size());
  return to_hex(buf.data(), buf.size());
}

std::string hash_password(std::string_view password, HashStrength strength) {
  ensure_sodium();
  unsigned long long ops = crypto_pwhash_OPSLIMIT_INTERACTIVE;
  std::size_t mem = crypto_pwhash_MEMLIMIT_INTERACTIVE;
  if (strength == HashStrength::Minimal) {
    ops = crypto_pwhash_OPSLIMIT_MIN;
    mem = crypto_pwhash_MEMLIMIT_MIN;
  } else if (strength == HashStrength::Moderate) {
    ops = crypto_pwhash_OPSLIMIT_MODERATE;
    mem = crypto_pwhash_MEMLIMIT_MODERATE;
  }
  char out[crypto_pwhash_STRBYTES];
  if (crypto_pwhash_str_alg(out, password.data(), password.size(), ops, mem,
                            crypto_pwhash_ALG_ARGON2ID13) != 0) {
    throw Error(ErrorCode::Internal, "password hashing ran out of memory");
  }
  return out;
}

bool verify_password(std::string_view digest, std::string_view password) {
  ensure_sodium();
  const std::string nul_terminated(digest);
  return crypto_pwhash_str_verify(nul_terminated.c_str(), password.data(), password.size()) == 0;
}

bool constant_time_equal(std::string_view a, std::string_view b) {
  ensure_sodium();
  if (a.size() != b.size()) return false;
  return sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace roadwatch::crypto
