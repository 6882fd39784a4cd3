#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace benh {

enum class Arch { ARM, MIPS, X86, X64 };
enum class OptLevel { O0, O1, O2, O3 };
enum class Split { Train, Valid, Test };

const char* to_string(Arch a);
const char* to_string(OptLevel o);
const char* to_string(Split s);
Arch arch_from_string(const std::string& s);
OptLevel opt_from_string(const std::string& s);
Split split_from_string(const std::string& s);

struct StringRecord {
  std::string string_id;
  std::string content;
  // Derived, not serialized: number of functions referencing this string.
  uint32_t ref_count = 0;
};

struct GlobalDataRecord {
  std::string global_id;
  uint64_t address = 0;
  std::optional<std::string> label;
};

struct FunctionRecord {
  std::string function_id;
  std::string binary_id;
  std::optional<std::string> name;
  uint64_t start_address = 0;
  uint64_t size = 0;
  std::vector<std::string> callees;
  std::vector<std::string> string_refs;
  std::vector<std::string> global_refs;
  std::vector<uint64_t> tokens;  // multiset of opaque token ids
  std::optional<std::string> source_key;
};

struct BinaryImage {
  std::string binary_id;
  Arch arch = Arch::X86;
  OptLevel opt_level = OptLevel::O0;
  Split split = Split::Train;
  std::vector<FunctionRecord> functions;
  std::vector<StringRecord> strings;
  std::vector<GlobalDataRecord> globals;
};

struct Corpus {
  std::vector<BinaryImage> binaries;
};

struct SynthConfig {
  uint32_t n_projects = 4;
  uint32_t funcs_per_project = 10;
  double call_density = 1.5;  // expected callees per function
  uint32_t n_strings = 12;    // per project
  uint32_t n_globals = 6;     // per project
  std::vector<std::pair<Arch, OptLevel>> settings;
  std::map<OptLevel, double> inline_prob_by_opt;
  double token_noise = 0.0;  // fraction of token instances mutated per setting
  uint64_t seed = 0;

  void validate() const;  // throws ConfigError
  static SynthConfig defaults();
};

// ---- operations ----

// Parses + fully validates a BCF document. strict=true rejects unknown keys.
Corpus load_corpus(const std::string& path, bool strict = true);
Corpus parse_corpus(const std::string& json_text, bool strict = true,
                    const std::string& origin = "<memory>");
std::string serialize_corpus(const Corpus& c);
void save_corpus(const Corpus& c, const std::string& path);

// Throws DataError on any invariant violation; recomputes string ref_counts.
void validate_corpus(Corpus& c);

// Drops strings shorter than 5 characters, prunes refs, recomputes ref_count.
Corpus filter_strings(const Corpus& c);

Corpus generate_synthetic(const SynthConfig& cfg);

// Immutable per-binary relation maps; safe for concurrent reads.
struct RelationIndex {
  // All vectors sorted ascending and deduplicated.
  std::map<std::string, std::vector<std::string>> call_out;
  std::map<std::string, std::vector<std::string>> call_in;
  std::map<std::string, std::optional<std::string>> addr_pred;
  std::map<std::string, std::optional<std::string>> addr_succ;
  std::map<std::string, std::vector<std::string>> couse;  // symmetric, irreflexive
  std::map<std::string, std::vector<std::string>> strings_used;

  bool contains(const std::string& function_id) const {
    return call_out.count(function_id) != 0;
  }
};

RelationIndex index_relations(const BinaryImage& binary);

// ---- lookup helpers shared by the pipeline ----

struct FunctionRef {
  size_t binary_idx;
  size_t function_idx;
};

struct CorpusView {
  const Corpus* corpus;
  std::map<std::string, FunctionRef> by_id;                       // function_id -> ref
  std::map<std::string, std::vector<std::string>> groups;        // source_key -> function ids (sorted)

  explicit CorpusView(const Corpus& c);
  const FunctionRecord& fn(const std::string& id) const;
  const BinaryImage& binary_of(const std::string& id) const;
  std::vector<std::string> function_ids(std::optional<Split> split) const;  // sorted
};

}  // namespace benh
