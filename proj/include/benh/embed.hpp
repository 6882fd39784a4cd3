#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "benh/corpus.hpp"

namespace benh {

struct EmbeddingMatrix {
  uint32_t dim = 0;
  std::map<std::string, std::vector<double>> rows;  // node id -> vector (len dim)
};

enum class ProviderKind { ToyFunction, ToyString, External };

const char* to_string(ProviderKind k);
ProviderKind provider_kind_from_string(const std::string& s);

struct ProviderConfig {
  ProviderKind kind = ProviderKind::ToyFunction;
  uint32_t dim = 64;
  uint64_t hash_seed = 0;
  std::optional<std::string> external_path;

  void validate() const;
};

// Signed feature hashing over the token multiset, L2-normalized. A function
// with no tokens maps to the zero vector.
std::vector<double> embed_function_toy(const FunctionRecord& fn, const ProviderConfig& cfg);
std::vector<double> embed_tokens_toy(const std::vector<uint64_t>& tokens, const ProviderConfig& cfg);

// Signed feature hashing over character 3-grams of the content. Content
// shorter than 3 characters hashes as a single gram.
std::vector<double> embed_string_toy(const StringRecord& s, const ProviderConfig& cfg);
std::vector<double> embed_text_toy(const std::string& content, const ProviderConfig& cfg);

// BEEM file format: magic "BEEM", version u32 LE = 1, row_count u64 LE,
// dim u32 LE, then row_count records of (id length u16 LE, id bytes,
// dim x f32 LE).
EmbeddingMatrix load_external_embeddings(const std::string& path, uint32_t expected_dim);
EmbeddingMatrix parse_beem(const std::string& bytes, uint32_t expected_dim,
                           const std::string& origin = "<memory>");
std::string serialize_beem(const EmbeddingMatrix& m);
void save_beem(const EmbeddingMatrix& m, const std::string& path);

// Uniform access used by the pipeline: toy kinds compute on demand,
// External resolves against a preloaded matrix.
class EmbeddingProvider {
 public:
  explicit EmbeddingProvider(const ProviderConfig& cfg);

  uint32_t dim() const { return cfg_.dim; }
  const ProviderConfig& config() const { return cfg_; }

  std::vector<double> function_embedding(const FunctionRecord& fn) const;
  std::vector<double> string_embedding(const StringRecord& s) const;

 private:
  ProviderConfig cfg_;
  EmbeddingMatrix external_;
};

}  // namespace benh
