#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>

#include <openssl/core_names.h>
#include <openssl/ecdsa.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/param_build.h>
#include <openssl/sha.h>

#include "hstse/util/bytes.hpp"

namespace hstse::dnssec {

// DNSSEC algorithm numbers supported by this project.
enum class Algorithm : std::uint8_t {
  EcdsaP256Sha256 = 13,
  Ed25519 = 15,
};

inline bool algorithm_supported(std::uint8_t code) { return code == 13 || code == 15; }

inline const char* algorithm_name(Algorithm alg) {
  switch (alg) {
    case Algorithm::EcdsaP256Sha256: return "ECDSAP256SHA256";
    case Algorithm::Ed25519: return "ED25519";
  }
  return "?";
}

inline Algorithm algorithm_from_code(std::uint8_t code) {
  if (!algorithm_supported(code)) throw std::invalid_argument("unsupported DNSSEC algorithm " + std::to_string(code));
  return static_cast<Algorithm>(code);
}

class CryptoError : public std::runtime_error {
public:
  explicit CryptoError(const std::string& what) : std::runtime_error(what + openssl_detail()) {}

private:
  static std::string openssl_detail() {
    unsigned long err = ERR_get_error();
    if (err == 0) return {};
    char buf[256];
    ERR_error_string_n(err, buf, sizeof(buf));
    return std::string(": ") + buf;
  }
};

namespace detail {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

inline Bytes sha256(std::span<const std::uint8_t> data) {
  Bytes out(SHA256_DIGEST_LENGTH);
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1)
    throw CryptoError("SHA-256 failed");
  out.resize(len);
  return out;
}

// Signature wire form for algorithm 13 is r||s, 32 bytes each; OpenSSL
// speaks DER, so convert both ways.
inline Bytes ecdsa_der_to_raw(std::span<const std::uint8_t> der) {
  const std::uint8_t* p = der.data();
  ECDSA_SIG* sig = d2i_ECDSA_SIG(nullptr, &p, static_cast<long>(der.size()));
  if (sig == nullptr) throw CryptoError("bad DER ECDSA signature");
  const BIGNUM* r = nullptr;
  const BIGNUM* s = nullptr;
  ECDSA_SIG_get0(sig, &r, &s);
  Bytes raw(64, 0);
  BN_bn2binpad(r, raw.data(), 32);
  BN_bn2binpad(s, raw.data() + 32, 32);
  ECDSA_SIG_free(sig);
  return raw;
}

inline Bytes ecdsa_raw_to_der(std::span<const std::uint8_t> raw) {
  if (raw.size() != 64) throw CryptoError("ECDSA signature must be 64 bytes");
  BIGNUM* r = BN_bin2bn(raw.data(), 32, nullptr);
  BIGNUM* s = BN_bin2bn(raw.data() + 32, 32, nullptr);
  ECDSA_SIG* sig = ECDSA_SIG_new();
  if (sig == nullptr || ECDSA_SIG_set0(sig, r, s) != 1) {
    BN_free(r);
    BN_free(s);
    ECDSA_SIG_free(sig);
    throw CryptoError("ECDSA_SIG_set0 failed");
  }
  int len = i2d_ECDSA_SIG(sig, nullptr);
  Bytes der(static_cast<std::size_t>(len));
  std::uint8_t* out = der.data();
  i2d_ECDSA_SIG(sig, &out);
  ECDSA_SIG_free(sig);
  return der;
}

inline PkeyPtr p256_from_public(std::span<const std::uint8_t> xy) {
  if (xy.size() != 64) throw CryptoError("P-256 public key must be 64 bytes");
  Bytes point(65);
  point[0] = 0x04;
  std::copy(xy.begin(), xy.end(), point.begin() + 1);
  OSSL_PARAM params[] = {
      OSSL_PARAM_construct_utf8_string(OSSL_PKEY_PARAM_GROUP_NAME, const_cast<char*>("prime256v1"), 0),
      OSSL_PARAM_construct_octet_string(OSSL_PKEY_PARAM_PUB_KEY, point.data(), point.size()),
      OSSL_PARAM_construct_end(),
  };
  EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new_from_name(nullptr, "EC", nullptr);
  EVP_PKEY* pkey = nullptr;
  if (ctx == nullptr || EVP_PKEY_fromdata_init(ctx) != 1 ||
      EVP_PKEY_fromdata(ctx, &pkey, EVP_PKEY_PUBLIC_KEY, params) != 1) {
    EVP_PKEY_CTX_free(ctx);
    throw CryptoError("P-256 public key import failed");
  }
  EVP_PKEY_CTX_free(ctx);
  return PkeyPtr(pkey);
}

}  // namespace detail

/// Verification-side key: algorithm + the public key exactly as it appears
/// in DNSKEY RDATA (64 bytes x||y for P-256, 32 bytes for Ed25519).
class PublicKey {
public:
  PublicKey(Algorithm alg, Bytes key_bytes) : alg_(alg), key_(std::move(key_bytes)) {
    check_length();
  }

  Algorithm algorithm() const { return alg_; }
  const Bytes& bytes() const { return key_; }

  bool verify(std::span<const std::uint8_t> data, std::span<const std::uint8_t> signature) const {
    switch (alg_) {
      case Algorithm::EcdsaP256Sha256: {
        if (signature.size() != 64) return false;
        detail::PkeyPtr pkey;
        try {
          pkey = detail::p256_from_public(key_);
        } catch (const CryptoError&) {
          return false;
        }
        Bytes der;
        try {
          der = detail::ecdsa_raw_to_der(signature);
        } catch (const CryptoError&) {
          return false;
        }
        EVP_MD_CTX* md = EVP_MD_CTX_new();
        bool ok = EVP_DigestVerifyInit(md, nullptr, EVP_sha256(), nullptr, pkey.get()) == 1 &&
                  EVP_DigestVerify(md, der.data(), der.size(), data.data(), data.size()) == 1;
        EVP_MD_CTX_free(md);
        return ok;
      }
      case Algorithm::Ed25519: {
        if (signature.size() != 64 || key_.size() != 32) return false;
        EVP_PKEY* pkey = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, key_.data(), key_.size());
        if (pkey == nullptr) return false;
        EVP_MD_CTX* md = EVP_MD_CTX_new();
        bool ok = EVP_DigestVerifyInit(md, nullptr, nullptr, nullptr, pkey) == 1 &&
                  EVP_DigestVerify(md, signature.data(), signature.size(), data.data(), data.size()) == 1;
        EVP_MD_CTX_free(md);
        EVP_PKEY_free(pkey);
        return ok;
      }
    }
    return false;
  }

private:
  void check_length() const {
    std::size_t want = alg_ == Algorithm::EcdsaP256Sha256 ? 64 : 32;
    if (key_.size() != want) throw CryptoError("public key has wrong length for algorithm");
  }

  Algorithm alg_;
  Bytes key_;
};

/// Zone signing key pair. Generation uses OpenSSL; signatures come out in
/// DNSSEC wire form (64 bytes for both supported algorithms).
class SigningKey {
public:
  static SigningKey generate(Algorithm alg) {
    EVP_PKEY* pkey = nullptr;
    if (alg == Algorithm::EcdsaP256Sha256) {
      pkey = EVP_PKEY_Q_keygen(nullptr, nullptr, "EC", "prime256v1");
    } else {
      pkey = EVP_PKEY_Q_keygen(nullptr, nullptr, "ED25519");
    }
    if (pkey == nullptr) throw CryptoError("key generation failed");
    return SigningKey(alg, detail::PkeyPtr(pkey));
  }

  Algorithm algorithm() const { return alg_; }

  // Public key in DNSKEY RDATA form.
  const Bytes& public_bytes() const { return public_; }

  Bytes sign(std::span<const std::uint8_t> data) const {
    EVP_MD_CTX* md = EVP_MD_CTX_new();
    const EVP_MD* digest = alg_ == Algorithm::EcdsaP256Sha256 ? EVP_sha256() : nullptr;
    if (EVP_DigestSignInit(md, nullptr, digest, nullptr, pkey_.get()) != 1) {
      EVP_MD_CTX_free(md);
      throw CryptoError("DigestSignInit failed");
    }
    std::size_t sig_len = 0;
    if (EVP_DigestSign(md, nullptr, &sig_len, data.data(), data.size()) != 1) {
      EVP_MD_CTX_free(md);
      throw CryptoError("DigestSign sizing failed");
    }
    Bytes sig(sig_len);
    if (EVP_DigestSign(md, sig.data(), &sig_len, data.data(), data.size()) != 1) {
      EVP_MD_CTX_free(md);
      throw CryptoError("DigestSign failed");
    }
    sig.resize(sig_len);
    EVP_MD_CTX_free(md);
    if (alg_ == Algorithm::EcdsaP256Sha256) return detail::ecdsa_der_to_raw(sig);
    return sig;
  }

  PublicKey public_key() const { return PublicKey(alg_, public_); }

private:
  SigningKey(Algorithm alg, detail::PkeyPtr pkey) : alg_(alg), pkey_(std::move(pkey)) {
    if (alg_ == Algorithm::EcdsaP256Sha256) {
      std::uint8_t point[128];
      std::size_t len = 0;
      if (EVP_PKEY_get_octet_string_param(pkey_.get(), OSSL_PKEY_PARAM_ENCODED_PUBLIC_KEY, point,
                                          sizeof(point), &len) != 1 ||
          len != 65 || point[0] != 0x04)
        throw CryptoError("unexpected P-256 public key encoding");
      public_.assign(point + 1, point + 65);
    } else {
      std::uint8_t raw[32];
      std::size_t len = sizeof(raw);
      if (EVP_PKEY_get_raw_public_key(pkey_.get(), raw, &len) != 1 || len != 32)
        throw CryptoError("Ed25519 public key extraction failed");
      public_.assign(raw, raw + 32);
    }
  }

  Algorithm alg_;
  detail::PkeyPtr pkey_;
  Bytes public_;
};

inline Bytes sha256(std::span<const std::uint8_t> data) { return detail::sha256(data); }

}  // namespace hstse::dnssec
