#include "benh/embed.hpp"

#include <cmath>

#include "benh/common.hpp"
#include "benh/kernels.hpp"
#include "benh/rng.hpp"

namespace benh {

const char* to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::ToyFunction: return "toy_function";
    case ProviderKind::ToyString: return "toy_string";
    case ProviderKind::External: return "external";
  }
  return "?";
}

ProviderKind provider_kind_from_string(const std::string& s) {
  if (s == "toy_function") return ProviderKind::ToyFunction;
  if (s == "toy_string") return ProviderKind::ToyString;
  if (s == "external") return ProviderKind::External;
  throw ConfigError("unknown provider kind: \"" + s + "\"");
}

void ProviderConfig::validate() const {
  if (dim < 2) throw ConfigError("provider dim must be >= 2");
  if (kind == ProviderKind::External && !external_path)
    throw ConfigError("external provider requires external_path");
}

namespace {

uint64_t mix_hash(uint64_t seed, uint64_t value) {
  // One splitmix64 step keyed by (seed, value); cheap and well-spread.
  uint64_t z = seed ^ (value + 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void bucket_accumulate(std::vector<double>& v, uint64_t h, uint32_t dim) {
  uint32_t idx = uint32_t(h % dim);
  double sign = (h >> 63) ? -1.0 : 1.0;
  v[idx] += sign;
}

void l2_normalize(std::vector<double>& v) {
  double n = kernels::l2_norm(v.data(), v.size());
  if (n > 0.0) kernels::scale(v.data(), 1.0 / n, v.size());
}

uint64_t fnv1a(const std::string& bytes, uint64_t seed) {
  uint64_t h = 0xcbf29ce484222325ull ^ seed;
  for (char c : bytes) {
    h ^= uint8_t(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::vector<double> embed_tokens_toy(const std::vector<uint64_t>& tokens, const ProviderConfig& cfg) {
  std::vector<double> v(cfg.dim, 0.0);
  for (uint64_t tok : tokens) bucket_accumulate(v, mix_hash(cfg.hash_seed, tok), cfg.dim);
  l2_normalize(v);
  return v;
}

std::vector<double> embed_function_toy(const FunctionRecord& fn, const ProviderConfig& cfg) {
  return embed_tokens_toy(fn.tokens, cfg);
}

std::vector<double> embed_text_toy(const std::string& content, const ProviderConfig& cfg) {
  std::vector<double> v(cfg.dim, 0.0);
  std::vector<size_t> off = utf8_offsets(content);
  size_t nchars = off.size() - 1;
  if (nchars < 3) {
    bucket_accumulate(v, fnv1a(content, cfg.hash_seed), cfg.dim);
  } else {
    for (size_t i = 0; i + 3 <= nchars; ++i) {
      std::string gram = content.substr(off[i], off[i + 3] - off[i]);
      bucket_accumulate(v, fnv1a(gram, cfg.hash_seed), cfg.dim);
    }
  }
  l2_normalize(v);
  return v;
}

std::vector<double> embed_string_toy(const StringRecord& s, const ProviderConfig& cfg) {
  return embed_text_toy(s.content, cfg);
}

// ---------------------------------------------------------------------------
// BEEM IO
// ---------------------------------------------------------------------------

std::string serialize_beem(const EmbeddingMatrix& m) {
  std::string out;
  out += "BEEM";
  put_u32le(out, 1);
  put_u64le(out, m.rows.size());
  put_u32le(out, m.dim);
  for (const auto& [id, vec] : m.rows) {
    if (id.size() > 0xffff) throw DataError("node id too long for BEEM: \"" + id + "\"");
    put_u16le(out, uint16_t(id.size()));
    out += id;
    for (double x : vec) put_f32le(out, float(x));
  }
  return out;
}

void save_beem(const EmbeddingMatrix& m, const std::string& path) {
  write_file_atomic(path, serialize_beem(m));
}

EmbeddingMatrix parse_beem(const std::string& bytes, uint32_t expected_dim, const std::string& origin) {
  ByteReader r(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size());
  if (r.bytes(4) != "BEEM") throw DataError(origin + ": bad magic, expected \"BEEM\"");
  uint32_t version = r.u32le();
  if (version != 1)
    throw DataError(origin + ": BEEM version mismatch: got " + std::to_string(version) + ", expected 1");
  uint64_t row_count = r.u64le();
  uint32_t dim = r.u32le();
  if (dim != expected_dim)
    throw DataError(origin + ": dimension mismatch: file has dim " + std::to_string(dim) +
                    ", expected " + std::to_string(expected_dim));
  EmbeddingMatrix m;
  m.dim = dim;
  for (uint64_t i = 0; i < row_count; ++i) {
    uint16_t len = r.u16le();
    std::string id = r.bytes(len);
    std::vector<double> vec(dim);
    for (uint32_t d = 0; d < dim; ++d) {
      float x = r.f32le();
      if (!std::isfinite(x))
        throw DataError(origin + ": non-finite entry in row \"" + id + "\" at column " +
                        std::to_string(d));
      vec[d] = double(x);
    }
    if (!m.rows.emplace(std::move(id), std::move(vec)).second)
      throw DataError(origin + ": duplicate row id at record " + std::to_string(i));
  }
  if (r.remaining() != 0)
    throw DataError(origin + ": trailing bytes after last row (" + std::to_string(r.remaining()) + ")");
  return m;
}

EmbeddingMatrix load_external_embeddings(const std::string& path, uint32_t expected_dim) {
  return parse_beem(read_file(path), expected_dim, path);
}

// ---------------------------------------------------------------------------
// Provider facade
// ---------------------------------------------------------------------------

EmbeddingProvider::EmbeddingProvider(const ProviderConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.kind == ProviderKind::External)
    external_ = load_external_embeddings(*cfg_.external_path, cfg_.dim);
}

std::vector<double> EmbeddingProvider::function_embedding(const FunctionRecord& fn) const {
  if (cfg_.kind == ProviderKind::External) {
    auto it = external_.rows.find(fn.function_id);
    if (it == external_.rows.end())
      throw DataError("external embeddings missing function \"" + fn.function_id + "\"");
    return it->second;
  }
  return embed_function_toy(fn, cfg_);
}

std::vector<double> EmbeddingProvider::string_embedding(const StringRecord& s) const {
  if (cfg_.kind == ProviderKind::External) {
    auto it = external_.rows.find(s.string_id);
    if (it == external_.rows.end())
      throw DataError("external embeddings missing string \"" + s.string_id + "\"");
    return it->second;
  }
  return embed_string_toy(s, cfg_);
}

}  // namespace benh
