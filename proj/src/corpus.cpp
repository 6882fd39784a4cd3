#include "benh/corpus.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "benh/common.hpp"
#include "benh/rng.hpp"

namespace benh {

using json = nlohmann::json;

const char* to_string(Arch a) {
  switch (a) {
    case Arch::ARM: return "ARM";
    case Arch::MIPS: return "MIPS";
    case Arch::X86: return "X86";
    case Arch::X64: return "X64";
  }
  return "?";
}
const char* to_string(OptLevel o) {
  switch (o) {
    case OptLevel::O0: return "O0";
    case OptLevel::O1: return "O1";
    case OptLevel::O2: return "O2";
    case OptLevel::O3: return "O3";
  }
  return "?";
}
const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "?";
}

Arch arch_from_string(const std::string& s) {
  if (s == "ARM") return Arch::ARM;
  if (s == "MIPS") return Arch::MIPS;
  if (s == "X86") return Arch::X86;
  if (s == "X64") return Arch::X64;
  throw DataError("unknown arch tag: \"" + s + "\"");
}
OptLevel opt_from_string(const std::string& s) {
  if (s == "O0") return OptLevel::O0;
  if (s == "O1") return OptLevel::O1;
  if (s == "O2") return OptLevel::O2;
  if (s == "O3") return OptLevel::O3;
  throw DataError("unknown opt_level tag: \"" + s + "\"");
}
Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "valid") return Split::Valid;
  if (s == "test") return Split::Test;
  throw DataError("unknown split tag: \"" + s + "\"");
}

// ---------------------------------------------------------------------------
// BCF parsing
// ---------------------------------------------------------------------------

namespace {

struct Ctx {
  std::string path;  // json-pointer-ish field context for error messages

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(path + ": " + msg);
  }
};

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const Ctx& ctx, bool strict) {
  if (!strict) return;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) { known = true; break; }
    if (!known) ctx.fail("unknown field \"" + it.key() + "\" (strict mode; pass --lenient to ignore)");
  }
}

const json& field(const json& obj, const char* key, const Ctx& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) ctx.fail(std::string("missing required field \"") + key + "\"");
  return *it;
}

std::string get_string(const json& obj, const char* key, Ctx ctx) {
  ctx.path += std::string(".") + key;
  const json& v = field(obj, key, ctx);
  if (!v.is_string()) ctx.fail("expected a string");
  return v.get<std::string>();
}

std::optional<std::string> get_opt_string(const json& obj, const char* key, Ctx ctx) {
  ctx.path += std::string(".") + key;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) ctx.fail("expected a string or null");
  return it->get<std::string>();
}

uint64_t get_u64(const json& obj, const char* key, Ctx ctx) {
  ctx.path += std::string(".") + key;
  const json& v = field(obj, key, ctx);
  if (!v.is_number_unsigned()) ctx.fail("expected a decimal unsigned integer");
  return v.get<uint64_t>();
}

std::vector<std::string> get_string_array(const json& obj, const char* key, Ctx ctx) {
  ctx.path += std::string(".") + key;
  const json& v = field(obj, key, ctx);
  if (!v.is_array()) ctx.fail("expected an array");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) {
      ctx.path += "[" + std::to_string(i) + "]";
      ctx.fail("expected a string");
    }
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

std::vector<uint64_t> get_u64_array(const json& obj, const char* key, Ctx ctx) {
  ctx.path += std::string(".") + key;
  const json& v = field(obj, key, ctx);
  if (!v.is_array()) ctx.fail("expected an array");
  std::vector<uint64_t> out;
  out.reserve(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_unsigned()) {
      ctx.path += "[" + std::to_string(i) + "]";
      ctx.fail("expected a decimal unsigned integer");
    }
    out.push_back(v[i].get<uint64_t>());
  }
  return out;
}

std::pair<size_t, size_t> line_col_of(const std::string& text, size_t byte) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') { ++line; col = 1; } else ++col;
  }
  return {line, col};
}

}  // namespace

Corpus parse_corpus(const std::string& text, bool strict, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col_of(text, e.byte > 0 ? e.byte - 1 : 0);
    throw DataError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                    ": JSON parse error: " + e.what());
  }

  Ctx root{origin};
  if (!doc.is_object()) root.fail("top level must be an object");
  reject_unknown(doc, {"bcf_version", "binaries"}, root, strict);
  uint64_t version = get_u64(doc, "bcf_version", root);
  if (version != 1)
    root.fail("bcf_version mismatch: got " + std::to_string(version) + ", expected 1");
  const json& bins = field(doc, "binaries", root);
  if (!bins.is_array()) root.fail("\"binaries\" must be an array");

  Corpus corpus;
  corpus.binaries.reserve(bins.size());
  for (size_t bi = 0; bi < bins.size(); ++bi) {
    Ctx bctx{origin + ":binaries[" + std::to_string(bi) + "]"};
    const json& jb = bins[bi];
    if (!jb.is_object()) bctx.fail("expected an object");
    reject_unknown(jb, {"binary_id", "arch", "opt_level", "split", "functions", "strings", "globals"},
                   bctx, strict);
    BinaryImage b;
    b.binary_id = get_string(jb, "binary_id", bctx);
    b.arch = arch_from_string(get_string(jb, "arch", bctx));
    b.opt_level = opt_from_string(get_string(jb, "opt_level", bctx));
    b.split = split_from_string(get_string(jb, "split", bctx));

    const json& jfns = field(jb, "functions", bctx);
    if (!jfns.is_array()) bctx.fail("\"functions\" must be an array");
    for (size_t fi = 0; fi < jfns.size(); ++fi) {
      Ctx fctx{bctx.path + ".functions[" + std::to_string(fi) + "]"};
      const json& jf = jfns[fi];
      if (!jf.is_object()) fctx.fail("expected an object");
      reject_unknown(jf,
                     {"function_id", "name", "start_address", "size", "callees", "string_refs",
                      "global_refs", "tokens", "source_key"},
                     fctx, strict);
      FunctionRecord f;
      f.function_id = get_string(jf, "function_id", fctx);
      f.binary_id = b.binary_id;
      f.name = get_opt_string(jf, "name", fctx);
      f.start_address = get_u64(jf, "start_address", fctx);
      f.size = get_u64(jf, "size", fctx);
      f.callees = get_string_array(jf, "callees", fctx);
      f.string_refs = get_string_array(jf, "string_refs", fctx);
      f.global_refs = get_string_array(jf, "global_refs", fctx);
      f.tokens = get_u64_array(jf, "tokens", fctx);
      f.source_key = get_opt_string(jf, "source_key", fctx);
      b.functions.push_back(std::move(f));
    }

    const json& jstrs = field(jb, "strings", bctx);
    if (!jstrs.is_array()) bctx.fail("\"strings\" must be an array");
    for (size_t si = 0; si < jstrs.size(); ++si) {
      Ctx sctx{bctx.path + ".strings[" + std::to_string(si) + "]"};
      const json& js = jstrs[si];
      if (!js.is_object()) sctx.fail("expected an object");
      reject_unknown(js, {"string_id", "content"}, sctx, strict);
      StringRecord s;
      s.string_id = get_string(js, "string_id", sctx);
      s.content = get_string(js, "content", sctx);
      b.strings.push_back(std::move(s));
    }

    const json& jglobs = field(jb, "globals", bctx);
    if (!jglobs.is_array()) bctx.fail("\"globals\" must be an array");
    for (size_t gi = 0; gi < jglobs.size(); ++gi) {
      Ctx gctx{bctx.path + ".globals[" + std::to_string(gi) + "]"};
      const json& jg = jglobs[gi];
      if (!jg.is_object()) gctx.fail("expected an object");
      reject_unknown(jg, {"global_id", "address", "label"}, gctx, strict);
      GlobalDataRecord g;
      g.global_id = get_string(jg, "global_id", gctx);
      g.address = get_u64(jg, "address", gctx);
      g.label = get_opt_string(jg, "label", gctx);
      b.globals.push_back(std::move(g));
    }

    corpus.binaries.push_back(std::move(b));
  }

  validate_corpus(corpus);
  return corpus;
}

Corpus load_corpus(const std::string& path, bool strict) {
  return parse_corpus(read_file(path), strict, path);
}

std::string serialize_corpus(const Corpus& c) {
  json doc;
  doc["bcf_version"] = 1;
  json bins = json::array();
  for (const BinaryImage& b : c.binaries) {
    json jb;
    jb["binary_id"] = b.binary_id;
    jb["arch"] = to_string(b.arch);
    jb["opt_level"] = to_string(b.opt_level);
    jb["split"] = to_string(b.split);
    json jfns = json::array();
    for (const FunctionRecord& f : b.functions) {
      json jf;
      jf["function_id"] = f.function_id;
      if (f.name) jf["name"] = *f.name;
      jf["start_address"] = f.start_address;
      jf["size"] = f.size;
      jf["callees"] = f.callees;
      jf["string_refs"] = f.string_refs;
      jf["global_refs"] = f.global_refs;
      jf["tokens"] = f.tokens;
      if (f.source_key) jf["source_key"] = *f.source_key;
      jfns.push_back(std::move(jf));
    }
    jb["functions"] = std::move(jfns);
    json jstrs = json::array();
    for (const StringRecord& s : b.strings) {
      json js;
      js["string_id"] = s.string_id;
      js["content"] = s.content;
      jstrs.push_back(std::move(js));
    }
    jb["strings"] = std::move(jstrs);
    json jglobs = json::array();
    for (const GlobalDataRecord& g : b.globals) {
      json jg;
      jg["global_id"] = g.global_id;
      jg["address"] = g.address;
      if (g.label) jg["label"] = *g.label;
      jglobs.push_back(std::move(jg));
    }
    jb["globals"] = std::move(jglobs);
    bins.push_back(std::move(jb));
  }
  doc["binaries"] = std::move(bins);
  return doc.dump();
}

void save_corpus(const Corpus& c, const std::string& path) {
  write_file_atomic(path, serialize_corpus(c));
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

void validate_corpus(Corpus& c) {
  std::set<std::string> binary_ids;
  std::set<std::string> global_fn_ids;
  // source_key -> splits seen; homology groups must not straddle train/test
  std::map<std::string, std::set<Split>> group_splits;

  for (BinaryImage& b : c.binaries) {
    if (!binary_ids.insert(b.binary_id).second)
      throw DataError("duplicate binary_id \"" + b.binary_id + "\"");

    std::set<std::string> fn_ids, str_ids, glob_ids;
    std::set<uint64_t> addrs;
    for (const StringRecord& s : b.strings)
      if (!str_ids.insert(s.string_id).second)
        throw DataError("binary \"" + b.binary_id + "\": duplicate string_id \"" + s.string_id + "\"");
    for (const GlobalDataRecord& g : b.globals)
      if (!glob_ids.insert(g.global_id).second)
        throw DataError("binary \"" + b.binary_id + "\": duplicate global_id \"" + g.global_id + "\"");

    for (FunctionRecord& f : b.functions) {
      f.binary_id = b.binary_id;
      if (!fn_ids.insert(f.function_id).second)
        throw DataError("binary \"" + b.binary_id + "\": duplicate function_id \"" + f.function_id + "\"");
      if (!global_fn_ids.insert(f.function_id).second)
        throw DataError("function_id \"" + f.function_id + "\" appears in more than one binary");
      if (f.size > UINT64_MAX - f.start_address)
        throw DataError("function \"" + f.function_id + "\": start_address + size overflows 64 bits");
      if (!addrs.insert(f.start_address).second)
        throw DataError("binary \"" + b.binary_id + "\": duplicate start_address " +
                        std::to_string(f.start_address));
      if (f.source_key) group_splits[*f.source_key].insert(b.split);
    }
    for (const FunctionRecord& f : b.functions) {
      for (const std::string& callee : f.callees)
        if (fn_ids.count(callee) == 0)
          throw DataError("function \"" + f.function_id + "\": callee \"" + callee +
                          "\" not present in binary \"" + b.binary_id + "\"");
      for (const std::string& sid : f.string_refs)
        if (str_ids.count(sid) == 0)
          throw DataError("function \"" + f.function_id + "\": string_ref \"" + sid +
                          "\" not present in binary \"" + b.binary_id + "\"");
      for (const std::string& gid : f.global_refs)
        if (glob_ids.count(gid) == 0)
          throw DataError("function \"" + f.function_id + "\": global_ref \"" + gid +
                          "\" not present in binary \"" + b.binary_id + "\"");
    }

    // recompute ref_count: number of distinct functions referencing the string
    std::map<std::string, uint32_t> refs;
    for (const FunctionRecord& f : b.functions) {
      std::set<std::string> seen(f.string_refs.begin(), f.string_refs.end());
      for (const std::string& sid : seen) refs[sid]++;
    }
    for (StringRecord& s : b.strings) {
      auto it = refs.find(s.string_id);
      s.ref_count = it == refs.end() ? 0 : it->second;
    }
  }

  for (const auto& [key, splits] : group_splits)
    if (splits.count(Split::Train) && splits.count(Split::Test))
      throw DataError("homology group \"" + key + "\" straddles the train/test boundary");
}

// ---------------------------------------------------------------------------
// String filtering
// ---------------------------------------------------------------------------

Corpus filter_strings(const Corpus& c) {
  Corpus out = c;
  for (BinaryImage& b : out.binaries) {
    std::set<std::string> surviving;
    std::vector<StringRecord> kept;
    for (const StringRecord& s : b.strings) {
      if (utf8_length(s.content) >= 5) {
        surviving.insert(s.string_id);
        kept.push_back(s);
      }
    }
    b.strings = std::move(kept);
    for (FunctionRecord& f : b.functions) {
      std::vector<std::string> refs;
      for (const std::string& sid : f.string_refs)
        if (surviving.count(sid)) refs.push_back(sid);
      f.string_refs = std::move(refs);
    }
    std::map<std::string, uint32_t> refs;
    for (const FunctionRecord& f : b.functions) {
      std::set<std::string> seen(f.string_refs.begin(), f.string_refs.end());
      for (const std::string& sid : seen) refs[sid]++;
    }
    for (StringRecord& s : b.strings) {
      auto it = refs.find(s.string_id);
      s.ref_count = it == refs.end() ? 0 : it->second;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus generation
// ---------------------------------------------------------------------------

void SynthConfig::validate() const {
  if (n_projects == 0) throw ConfigError("n_projects must be >= 1");
  if (funcs_per_project == 0) throw ConfigError("funcs_per_project must be >= 1");
  if (call_density < 0) throw ConfigError("call_density must be >= 0");
  if (settings.size() < 2) throw ConfigError("at least 2 (arch, opt_level) settings required");
  if (token_noise < 0.0 || token_noise > 1.0) throw ConfigError("token_noise must be in [0,1]");
  for (const auto& [opt, p] : inline_prob_by_opt)
    if (p < 0.0 || p > 1.0)
      throw ConfigError(std::string("inline_prob_by_opt[") + to_string(opt) + "] must be in [0,1]");
}

SynthConfig SynthConfig::defaults() {
  SynthConfig cfg;
  cfg.settings = {
      {Arch::ARM, OptLevel::O0},  {Arch::ARM, OptLevel::O1},  {Arch::ARM, OptLevel::O2},
      {Arch::ARM, OptLevel::O3},  {Arch::MIPS, OptLevel::O0}, {Arch::MIPS, OptLevel::O1},
      {Arch::MIPS, OptLevel::O2}, {Arch::MIPS, OptLevel::O3}, {Arch::X86, OptLevel::O0},
      {Arch::X86, OptLevel::O1},  {Arch::X86, OptLevel::O2},  {Arch::X86, OptLevel::O3},
  };
  cfg.inline_prob_by_opt = {{OptLevel::O0, 0.0}, {OptLevel::O1, 0.0}, {OptLevel::O2, 0.3}, {OptLevel::O3, 0.5}};
  return cfg;
}

namespace {

// Shared fragments so distinct projects occasionally collide on string
// contents and global labels, the way real binaries share libc-ish strings.
const char* kShortStrings[] = {"time", "ok", "err", "%s", "%d\n", "hi", "up", "на"};
const char* kCommonStrings[] = {
    "invalid argument",    "connection refused", "out of memory",   "permission denied",
    "unexpected end of file", "resource busy",   "broken pipe",     "operation timed out",
    "no such entry",       "checksum mismatch",
};
const char* kWords[] = {"buffer", "socket", "frame", "index", "cache", "table",
                        "packet", "stream", "digest", "handle", "queue", "shard"};
const char* kCommonGlobalLabels[] = {"errno_table", "log_level", "default_config",
                                     "version_info", "crc_table"};

constexpr uint64_t kCommonTokens = 256;   // ids [0, 256) shared across all functions
constexpr uint64_t kTokenVocab = 4096;    // fn-specific ids [256, 256+4096)

uint64_t draw_token(Rng& rng) {
  if (rng.next_double() < 0.30) return rng.below(kCommonTokens);
  return kCommonTokens + rng.below(kTokenVocab);
}

std::string hex_suffix(Rng& rng) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (int i = 0; i < 6; ++i) s.push_back(digits[rng.below(16)]);
  return s;
}

// Ground truth materialized once per project; every compile setting reuses it.
struct SourceProject {
  struct SourceFn {
    std::string key;                  // source_key
    std::vector<uint64_t> tokens;     // source token multiset
    std::vector<uint32_t> callees;    // indices into fns
    std::vector<uint32_t> string_refs;
    std::vector<uint32_t> global_refs;
    uint64_t size;
  };
  std::vector<SourceFn> fns;
  std::vector<uint32_t> layout_order;  // address order (permutation of fn indices)
  std::vector<std::string> string_contents;
  std::vector<std::string> global_labels;
};

SourceProject build_project(const SynthConfig& cfg, uint32_t p) {
  // Only layout-relevant config fields are read here, so paired corpora that
  // differ solely in inline_prob/token_noise share identical ground truth.
  Rng rng = derive_rng(cfg.seed, "layout", p);
  SourceProject proj;
  const uint32_t n = cfg.funcs_per_project;

  for (uint32_t j = 0; j < cfg.n_strings; ++j) {
    double r = rng.next_double();
    std::string content;
    if (r < 0.18) {
      content = kShortStrings[rng.below(std::size(kShortStrings))];
    } else if (r < 0.40) {
      content = kCommonStrings[rng.below(std::size(kCommonStrings))];
    } else {
      content = std::string(kWords[rng.below(std::size(kWords))]) + " " +
                kWords[rng.below(std::size(kWords))] + " p" + std::to_string(p) + "_" +
                hex_suffix(rng);
    }
    proj.string_contents.push_back(std::move(content));
  }
  for (uint32_t k = 0; k < cfg.n_globals; ++k) {
    if (rng.next_double() < 0.3)
      proj.global_labels.push_back(kCommonGlobalLabels[rng.below(std::size(kCommonGlobalLabels))]);
    else
      proj.global_labels.push_back("g_p" + std::to_string(p) + "_" + std::to_string(k));
  }

  const double p_edge = n > 1 ? std::min(1.0, cfg.call_density / double(n - 1)) : 0.0;
  for (uint32_t i = 0; i < n; ++i) {
    SourceProject::SourceFn fn;
    fn.key = "p" + std::to_string(p) + ":f" + std::to_string(i);
    size_t ntok = 24 + rng.below(33);
    fn.tokens.reserve(ntok);
    for (size_t t = 0; t < ntok; ++t) fn.tokens.push_back(draw_token(rng));
    for (uint32_t j = 0; j < n; ++j)
      if (j != i && rng.next_double() < p_edge) fn.callees.push_back(j);
    if (cfg.n_strings > 0) {
      double r = rng.next_double();
      size_t want = r < 0.35 ? 0 : r < 0.65 ? 1 : r < 0.85 ? 2 : 3;
      for (size_t idx : rng.sample_without_replacement(cfg.n_strings, want))
        fn.string_refs.push_back(uint32_t(idx));
    }
    if (cfg.n_globals > 0) {
      double r = rng.next_double();
      size_t want = r < 0.5 ? 0 : r < 0.8 ? 1 : 2;
      for (size_t idx : rng.sample_without_replacement(cfg.n_globals, want))
        fn.global_refs.push_back(uint32_t(idx));
    }
    fn.size = 32 + rng.below(481);
    proj.fns.push_back(std::move(fn));
  }

  proj.layout_order.resize(n);
  for (uint32_t i = 0; i < n; ++i) proj.layout_order[i] = i;
  rng.shuffle(proj.layout_order);
  return proj;
}

std::vector<Split> assign_splits(const SynthConfig& cfg) {
  const uint32_t n = cfg.n_projects;
  uint32_t n_test = n >= 2 ? std::max<uint32_t>(1, uint32_t(std::lround(0.1 * n))) : 0;
  uint32_t n_valid = n >= 3 ? std::max<uint32_t>(1, uint32_t(std::lround(0.1 * n))) : 0;
  std::vector<uint32_t> order(n);
  for (uint32_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = derive_rng(cfg.seed, "split");
  rng.shuffle(order);
  std::vector<Split> out(n, Split::Train);
  for (uint32_t i = 0; i < n_test; ++i) out[order[i]] = Split::Test;
  for (uint32_t i = 0; i < n_valid; ++i) out[order[n_test + i]] = Split::Valid;
  return out;
}

}  // namespace

Corpus generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  std::vector<Split> splits = assign_splits(cfg);

  for (uint32_t p = 0; p < cfg.n_projects; ++p) {
    SourceProject proj = build_project(cfg, p);
    const uint32_t n = cfg.funcs_per_project;

    for (size_t si = 0; si < cfg.settings.size(); ++si) {
      auto [arch, opt] = cfg.settings[si];
      const std::string setting_tag = std::string(to_string(arch)) + "-" + to_string(opt);
      double inline_p = 0.0;
      if (auto it = cfg.inline_prob_by_opt.find(opt); it != cfg.inline_prob_by_opt.end())
        inline_p = it->second;

      BinaryImage bin;
      bin.binary_id = "p" + std::to_string(p) + "__" + setting_tag;
      bin.arch = arch;
      bin.opt_level = opt;
      bin.split = splits[p];

      for (uint32_t j = 0; j < cfg.n_strings; ++j) {
        StringRecord s;
        s.string_id = "p" + std::to_string(p) + "_s" + std::to_string(j);
        s.content = proj.string_contents[j];
        bin.strings.push_back(std::move(s));
      }
      const uint64_t base = 0x400000 + uint64_t(si) * 0x1000000 + uint64_t(p) * 0x10000;
      uint64_t glob_addr = base + 0x800000;
      for (uint32_t k = 0; k < cfg.n_globals; ++k) {
        GlobalDataRecord g;
        g.global_id = "p" + std::to_string(p) + "_g" + std::to_string(k);
        g.address = glob_addr;
        glob_addr += 8;
        g.label = proj.global_labels[k];
        bin.globals.push_back(std::move(g));
      }

      // Per-setting function bodies: copy source, apply inlining, then noise.
      std::vector<std::vector<uint64_t>> tokens(n);
      std::vector<std::vector<uint32_t>> callees(n);
      for (uint32_t i = 0; i < n; ++i) {
        tokens[i] = proj.fns[i].tokens;
        callees[i] = proj.fns[i].callees;
      }

      // The inline coin for a call edge is keyed by (seed, project, caller,
      // callee) and thresholded by the setting's probability, so settings
      // with equal inline_prob inline exactly the same edges and a
      // no-inlining corpus differs from its counterpart only by the merges.
      // A merge copies the callee's source multiset (one level, not
      // transitive) and deletes the call edge; the callee stays a function.
      for (uint32_t i = 0; i < n; ++i) {
        std::vector<uint32_t> kept;
        for (uint32_t j : callees[i]) {
          double u = derive_rng(cfg.seed, "inline", p, i, j).next_double();
          if (u < inline_p) {
            tokens[i].insert(tokens[i].end(), proj.fns[j].tokens.begin(), proj.fns[j].tokens.end());
          } else {
            kept.push_back(j);
          }
        }
        callees[i] = std::move(kept);
      }

      if (cfg.token_noise > 0.0) {
        for (uint32_t i = 0; i < n; ++i) {
          Rng trng = derive_rng(cfg.seed, "tokens", p, si, i);
          for (uint64_t& tok : tokens[i])
            if (trng.next_double() < cfg.token_noise) tok = draw_token(trng);
        }
      }

      // Contiguous addresses in layout order, re-based per setting.
      std::vector<uint64_t> start(n);
      uint64_t cursor = base;
      for (uint32_t rank = 0; rank < n; ++rank) {
        uint32_t i = proj.layout_order[rank];
        start[i] = cursor;
        cursor += proj.fns[i].size;
      }

      for (uint32_t i = 0; i < n; ++i) {
        FunctionRecord f;
        f.function_id = "p" + std::to_string(p) + "_f" + std::to_string(i) + "__" + setting_tag;
        f.binary_id = bin.binary_id;
        f.name = "fn_" + std::to_string(p) + "_" + std::to_string(i);
        f.start_address = start[i];
        f.size = proj.fns[i].size;
        for (uint32_t j : callees[i])
          f.callees.push_back("p" + std::to_string(p) + "_f" + std::to_string(j) + "__" + setting_tag);
        for (uint32_t sref : proj.fns[i].string_refs)
          f.string_refs.push_back("p" + std::to_string(p) + "_s" + std::to_string(sref));
        for (uint32_t gref : proj.fns[i].global_refs)
          f.global_refs.push_back("p" + std::to_string(p) + "_g" + std::to_string(gref));
        f.tokens = tokens[i];
        f.source_key = proj.fns[i].key;
        bin.functions.push_back(std::move(f));
      }

      corpus.binaries.push_back(std::move(bin));
    }
  }

  validate_corpus(corpus);
  return corpus;
}

// ---------------------------------------------------------------------------
// Relation index
// ---------------------------------------------------------------------------

namespace {
std::vector<std::string> sorted_unique(std::set<std::string>&& s) {
  return std::vector<std::string>(s.begin(), s.end());
}
}  // namespace

RelationIndex index_relations(const BinaryImage& binary) {
  RelationIndex idx;
  std::map<std::string, std::set<std::string>> out, in, couse, used;

  for (const FunctionRecord& f : binary.functions) {
    out[f.function_id];
    in[f.function_id];
    couse[f.function_id];
    used[f.function_id];
    idx.addr_pred[f.function_id] = std::nullopt;
    idx.addr_succ[f.function_id] = std::nullopt;
  }
  for (const FunctionRecord& f : binary.functions) {
    for (const std::string& callee : f.callees) {
      if (callee == f.function_id) continue;  // self-calls carry no external signal
      out[f.function_id].insert(callee);
      in[callee].insert(f.function_id);
    }
    for (const std::string& sid : f.string_refs) used[f.function_id].insert(sid);
  }

  // Address adjacency: consecutive rank in sorted start_address order.
  std::vector<const FunctionRecord*> by_addr;
  by_addr.reserve(binary.functions.size());
  for (const FunctionRecord& f : binary.functions) by_addr.push_back(&f);
  std::sort(by_addr.begin(), by_addr.end(), [](const FunctionRecord* a, const FunctionRecord* b) {
    return a->start_address < b->start_address;
  });
  for (size_t i = 0; i + 1 < by_addr.size(); ++i) {
    idx.addr_succ[by_addr[i]->function_id] = by_addr[i + 1]->function_id;
    idx.addr_pred[by_addr[i + 1]->function_id] = by_addr[i]->function_id;
  }

  // Co-use: functions sharing at least one global or one (surviving) string.
  std::map<std::string, std::vector<std::string>> feature_users;
  for (const FunctionRecord& f : binary.functions) {
    std::set<std::string> s(f.string_refs.begin(), f.string_refs.end());
    for (const std::string& sid : s) feature_users["s:" + sid].push_back(f.function_id);
    std::set<std::string> g(f.global_refs.begin(), f.global_refs.end());
    for (const std::string& gid : g) feature_users["g:" + gid].push_back(f.function_id);
  }
  for (const auto& [feat, users] : feature_users) {
    for (const std::string& a : users)
      for (const std::string& b : users)
        if (a != b) couse[a].insert(b);
  }

  for (auto& [k, v] : out) idx.call_out[k] = sorted_unique(std::move(v));
  for (auto& [k, v] : in) idx.call_in[k] = sorted_unique(std::move(v));
  for (auto& [k, v] : couse) idx.couse[k] = sorted_unique(std::move(v));
  for (auto& [k, v] : used) idx.strings_used[k] = sorted_unique(std::move(v));
  return idx;
}

// ---------------------------------------------------------------------------
// CorpusView
// ---------------------------------------------------------------------------

CorpusView::CorpusView(const Corpus& c) : corpus(&c) {
  for (size_t bi = 0; bi < c.binaries.size(); ++bi) {
    const BinaryImage& b = c.binaries[bi];
    for (size_t fi = 0; fi < b.functions.size(); ++fi) {
      const FunctionRecord& f = b.functions[fi];
      by_id[f.function_id] = FunctionRef{bi, fi};
      if (f.source_key) groups[*f.source_key].push_back(f.function_id);
    }
  }
  for (auto& [k, v] : groups) std::sort(v.begin(), v.end());
}

const FunctionRecord& CorpusView::fn(const std::string& id) const {
  auto it = by_id.find(id);
  if (it == by_id.end()) throw DataError("unknown function id \"" + id + "\"");
  return corpus->binaries[it->second.binary_idx].functions[it->second.function_idx];
}

const BinaryImage& CorpusView::binary_of(const std::string& id) const {
  auto it = by_id.find(id);
  if (it == by_id.end()) throw DataError("unknown function id \"" + id + "\"");
  return corpus->binaries[it->second.binary_idx];
}

std::vector<std::string> CorpusView::function_ids(std::optional<Split> split) const {
  std::vector<std::string> out;
  for (const BinaryImage& b : corpus->binaries) {
    if (split && b.split != *split) continue;
    for (const FunctionRecord& f : b.functions) out.push_back(f.function_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace benh
